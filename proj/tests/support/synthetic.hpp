#pragma once

#include <cstdint>
#include <vector>

#include "mvrep/field.hpp"

namespace mvrep::testsupport {

/// Analytic multivariate test volume: two correlated Gaussian bumps, an
/// affine plane, and a sinusoid product, over normalized [0,1]^d coordinates.
/// Works for 2D and 3D shapes.
MultiField make_synthetic_field(const std::vector<std::int64_t>& shape);

/// The acceptance-scale instance (64 x 64 x 32, 4 variables).
MultiField make_acceptance_field();

}  // namespace mvrep::testsupport

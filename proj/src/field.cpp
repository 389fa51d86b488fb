#include "mvrep/field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

namespace mvrep {

namespace {

using nlohmann::json;

// Little-endian float32 I/O. Every supported target is little-endian; the
// static_assert documents the assumption instead of byte-swapping.
static_assert(std::endian::native == std::endian::little,
              "dataset and model files are little-endian");

void check_finite(const std::string& name, std::span<const float> data) {
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!std::isfinite(data[i])) {
            throw DataError("non-finite value in variable '" + name +
                            "' at index " + std::to_string(i));
        }
    }
}

std::string sanitize_filename(const std::string& name) {
    std::string out;
    out.reserve(name.size());
    for (char c : name) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                  (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
        out.push_back(ok ? c : '_');
    }
    if (out.empty()) out = "var";
    return out;
}

}  // namespace

std::int64_t GridSpec::point_count() const {
    std::int64_t n = 1;
    for (auto s : shape) n *= s;
    return n;
}

void GridSpec::validate() const {
    if (dims != 2 && dims != 3) {
        throw DataError("grid dims must be 2 or 3, got " + std::to_string(dims));
    }
    if (static_cast<int>(shape.size()) != dims) {
        throw DataError("grid shape has " + std::to_string(shape.size()) +
                        " entries, expected " + std::to_string(dims));
    }
    std::int64_t n = 1;
    for (auto s : shape) {
        if (s < 2) throw DataError("grid axes need at least 2 points");
        if (n > std::numeric_limits<std::int64_t>::max() / s) {
            throw DataError("grid point count overflows index range");
        }
        n *= s;
    }
}

std::int64_t GridSpec::flatten(std::span<const std::int64_t> idx) const {
    std::int64_t flat = 0;
    for (int a = 0; a < dims; ++a) {
        flat = flat * shape[static_cast<std::size_t>(a)] + idx[static_cast<std::size_t>(a)];
    }
    return flat;
}

void GridSpec::unflatten(std::int64_t flat, std::int64_t* idx) const {
    for (int a = dims - 1; a >= 0; --a) {
        std::int64_t s = shape[static_cast<std::size_t>(a)];
        idx[a] = flat % s;
        flat /= s;
    }
}

MultiField::MultiField(GridSpec grid, std::vector<std::string> names,
                       std::vector<std::vector<float>> data)
    : grid_(std::move(grid)), data_(std::move(data)) {
    grid_.validate();
    if (names.empty()) {
        throw DataError("dataset must contain >=1 variable");
    }
    if (names.size() != data_.size()) {
        throw DataError("variable name/data count mismatch");
    }
    const std::int64_t n = grid_.point_count();
    variables_.reserve(names.size());
    for (std::size_t v = 0; v < names.size(); ++v) {
        for (std::size_t w = 0; w < v; ++w) {
            if (variables_[w].name == names[v]) {
                throw DataError("duplicate variable name '" + names[v] + "'");
            }
        }
        if (static_cast<std::int64_t>(data_[v].size()) != n) {
            throw DataError("size mismatch: variable '" + names[v] + "' has " +
                            std::to_string(data_[v].size()) + " values, grid has " +
                            std::to_string(n) + " points");
        }
        check_finite(names[v], data_[v]);
        VariableMeta meta;
        meta.name = std::move(names[v]);
        auto [lo, hi] = std::minmax_element(data_[v].begin(), data_[v].end());
        meta.raw_min = static_cast<double>(*lo);
        meta.raw_max = static_cast<double>(*hi);
        variables_.push_back(std::move(meta));
    }
}

int MultiField::variable_index(std::string_view name) const {
    for (std::size_t i = 0; i < variables_.size(); ++i) {
        if (variables_[i].name == name) return static_cast<int>(i);
    }
    throw DataError("unknown variable '" + std::string(name) + "'");
}

std::span<const float> MultiField::values(int var) const {
    return data_.at(static_cast<std::size_t>(var));
}

Normalizer make_normalizer(const MultiField& field) {
    Normalizer n;
    n.shape = field.grid().shape;
    n.variables = field.variables();
    return n;
}

TrainingSet sample_points(const MultiField& field, double fraction,
                          std::uint64_t seed) {
    if (!(fraction > 0.0) || fraction > 1.0) {
        throw DataError("sample fraction must be in (0,1]");
    }
    const std::int64_t n = field.point_count();
    const auto k = static_cast<std::int64_t>(
        std::ceil(fraction * static_cast<double>(n)));

    std::vector<std::int64_t> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), std::int64_t{0});
    if (k < n) {
        // Partial Fisher-Yates: the first k entries are a uniform
        // without-replacement draw.
        Rng rng(seed);
        for (std::int64_t i = 0; i < k; ++i) {
            std::int64_t j = i + static_cast<std::int64_t>(
                                     rng.below(static_cast<std::uint64_t>(n - i)));
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
        }
        pool.resize(static_cast<std::size_t>(k));
    }

    const Normalizer norm = make_normalizer(field);
    const int dims = field.grid().dims;
    const int vars = field.variable_count();

    TrainingSet set;
    set.dims = dims;
    set.vars = vars;
    set.indices = std::move(pool);
    set.coords.resize(set.indices.size() * static_cast<std::size_t>(dims));
    set.targets.resize(set.indices.size() * static_cast<std::size_t>(vars));

    std::int64_t idx[3] = {0, 0, 0};
    for (std::size_t p = 0; p < set.indices.size(); ++p) {
        field.grid().unflatten(set.indices[p], idx);
        for (int a = 0; a < dims; ++a) {
            set.coords[p * static_cast<std::size_t>(dims) + static_cast<std::size_t>(a)] =
                static_cast<float>(norm.coord(a, static_cast<double>(idx[a])));
        }
        for (int v = 0; v < vars; ++v) {
            double raw = static_cast<double>(
                field.values(v)[static_cast<std::size_t>(set.indices[p])]);
            set.targets[p * static_cast<std::size_t>(vars) + static_cast<std::size_t>(v)] =
                static_cast<float>(norm.value_fwd(v, raw));
        }
    }
    return set;
}

MultiField load_dataset(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) {
        throw DataError("cannot open manifest: " + manifest_path.string());
    }
    json m;
    try {
        in >> m;
    } catch (const json::exception& e) {
        throw DataError("manifest parse error in " + manifest_path.string() +
                        ": " + e.what());
    }

    GridSpec grid;
    try {
        grid.dims = m.at("dims").get<int>();
        grid.shape = m.at("shape").get<std::vector<std::int64_t>>();
    } catch (const json::exception& e) {
        throw DataError(std::string("manifest missing dims/shape: ") + e.what());
    }
    grid.validate();

    if (!m.contains("variables") || !m["variables"].is_array() ||
        m["variables"].empty()) {
        throw DataError("dataset must contain >=1 variable");
    }

    const std::int64_t n = grid.point_count();
    const auto base = manifest_path.parent_path();

    std::vector<std::string> names;
    std::vector<std::vector<float>> data;
    struct Declared {
        bool has_range = false;
        double min = 0, max = 0;
        bool has_checksum = false;
        std::uint64_t checksum = 0;
    };
    std::vector<Declared> declared;

    for (const auto& entry : m["variables"]) {
        std::string name = entry.at("name").get<std::string>();
        std::string file = entry.at("file").get<std::string>();
        std::string dtype = entry.value("dtype", std::string("f32le"));
        if (dtype != "f32le") {
            throw DataError("variable '" + name + "': unsupported dtype '" +
                            dtype + "'");
        }
        auto path = base / file;
        std::ifstream bin(path, std::ios::binary | std::ios::ate);
        if (!bin) {
            throw DataError("missing data file: " + path.string());
        }
        const auto bytes = static_cast<std::int64_t>(bin.tellg());
        if (bytes != n * 4) {
            throw DataError("size mismatch: " + path.string() + " holds " +
                            std::to_string(bytes / 4) + " floats, shape needs " +
                            std::to_string(n));
        }
        bin.seekg(0);
        std::vector<float> values(static_cast<std::size_t>(n));
        bin.read(reinterpret_cast<char*>(values.data()), n * 4);
        if (!bin) {
            throw DataError("short read on " + path.string());
        }

        Declared d;
        if (entry.contains("min") && entry.contains("max")) {
            d.has_range = true;
            d.min = entry["min"].get<double>();
            d.max = entry["max"].get<double>();
        }
        if (entry.contains("checksum")) {
            d.has_checksum = true;
            d.checksum = std::stoull(entry["checksum"].get<std::string>(), nullptr, 16);
        }
        if (d.has_checksum) {
            std::uint64_t h = fnv1a64(values.data(), values.size() * 4);
            if (h != d.checksum) {
                throw DataError("checksum mismatch for variable '" + name + "'");
            }
        }
        declared.push_back(d);
        names.push_back(std::move(name));
        data.push_back(std::move(values));
    }

    MultiField field(std::move(grid), std::move(names), std::move(data));

    // Declared ranges, when present, must equal the recomputed ones.
    for (int v = 0; v < field.variable_count(); ++v) {
        const auto& d = declared[static_cast<std::size_t>(v)];
        if (!d.has_range) continue;
        const auto& meta = field.variable(v);
        if (d.min != meta.raw_min || d.max != meta.raw_max) {
            throw DataError("range verification failed for variable '" +
                            meta.name + "': manifest says [" +
                            std::to_string(d.min) + ", " + std::to_string(d.max) +
                            "], data has [" + std::to_string(meta.raw_min) +
                            ", " + std::to_string(meta.raw_max) + "]");
        }
    }
    return field;
}

std::filesystem::path save_dataset(const MultiField& field,
                                   const std::filesystem::path& dir,
                                   const std::string& name) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);

    json m;
    m["dims"] = field.grid().dims;
    m["shape"] = field.grid().shape;
    m["variables"] = json::array();

    for (int v = 0; v < field.variable_count(); ++v) {
        const auto& meta = field.variable(v);
        std::string file = name + "_" + sanitize_filename(meta.name) + ".f32";
        auto path = dir / file;
        std::ofstream bin(path, std::ios::binary | std::ios::trunc);
        if (!bin) {
            throw DataError("cannot write data file: " + path.string());
        }
        auto values = field.values(v);
        bin.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size() * 4));
        if (!bin) {
            throw DataError("write failed: " + path.string());
        }

        json entry;
        entry["name"] = meta.name;
        entry["file"] = file;
        entry["dtype"] = "f32le";
        entry["min"] = meta.raw_min;
        entry["max"] = meta.raw_max;
        entry["checksum"] = to_hex(fnv1a64(values.data(), values.size() * 4));
        m["variables"].push_back(std::move(entry));
    }

    auto manifest_path = dir / (name + ".json");
    std::ofstream out(manifest_path, std::ios::trunc);
    if (!out) {
        throw DataError("cannot write manifest: " + manifest_path.string());
    }
    out << m.dump(2) << "\n";
    if (!out) {
        throw DataError("write failed: " + manifest_path.string());
    }
    return manifest_path;
}

}  // namespace mvrep

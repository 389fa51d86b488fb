#include "mvrep/contour.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace mvrep {

namespace {

// Standard marching cubes tables (P. Bourke / Lorensen-Cline numbering).
// clang-format off
const int kEdgeTable[256] = {
0x0  ,0x109,0x203,0x30a,0x406,0x50f,0x605,0x70c,0x80c,0x905,0xa0f,0xb06,0xc0a,0xd03,0xe09,0xf00,
0x190,0x99 ,0x393,0x29a,0x596,0x49f,0x795,0x69c,0x99c,0x895,0xb9f,0xa96,0xd9a,0xc93,0xf99,0xe90,
0x230,0x339,0x33 ,0x13a,0x636,0x73f,0x435,0x53c,0xa3c,0xb35,0x83f,0x936,0xe3a,0xf33,0xc39,0xd30,
0x3a0,0x2a9,0x1a3,0xaa ,0x7a6,0x6af,0x5a5,0x4ac,0xbac,0xaa5,0x9af,0x8a6,0xfaa,0xea3,0xda9,0xca0,
0x460,0x569,0x663,0x76a,0x66 ,0x16f,0x265,0x36c,0xc6c,0xd65,0xe6f,0xf66,0x86a,0x963,0xa69,0xb60,
0x5f0,0x4f9,0x7f3,0x6fa,0x1f6,0xff ,0x3f5,0x2fc,0xdfc,0xcf5,0xfff,0xef6,0x9fa,0x8f3,0xbf9,0xaf0,
0x650,0x759,0x453,0x55a,0x256,0x35f,0x55 ,0x15c,0xe5c,0xf55,0xc5f,0xd56,0xa5a,0xb53,0x859,0x950,
0x7c0,0x6c9,0x5c3,0x4ca,0x3c6,0x2cf,0x1c5,0xcc ,0xfcc,0xec5,0xdcf,0xcc6,0xbca,0xac3,0x9c9,0x8c0,
0x8c0,0x9c9,0xac3,0xbca,0xcc6,0xdcf,0xec5,0xfcc,0xcc ,0x1c5,0x2cf,0x3c6,0x4ca,0x5c3,0x6c9,0x7c0,
0x950,0x859,0xb53,0xa5a,0xd56,0xc5f,0xf55,0xe5c,0x15c,0x55 ,0x35f,0x256,0x55a,0x453,0x759,0x650,
0xaf0,0xbf9,0x8f3,0x9fa,0xef6,0xfff,0xcf5,0xdfc,0x2fc,0x3f5,0xff ,0x1f6,0x6fa,0x7f3,0x4f9,0x5f0,
0xb60,0xa69,0x963,0x86a,0xf66,0xe6f,0xd65,0xc6c,0x36c,0x265,0x16f,0x66 ,0x76a,0x663,0x569,0x460,
0xca0,0xda9,0xea3,0xfaa,0x8a6,0x9af,0xaa5,0xbac,0x4ac,0x5a5,0x6af,0x7a6,0xaa ,0x1a3,0x2a9,0x3a0,
0xd30,0xc39,0xf33,0xe3a,0x936,0x83f,0xb35,0xa3c,0x53c,0x435,0x73f,0x636,0x13a,0x33 ,0x339,0x230,
0xe90,0xf99,0xc93,0xd9a,0xa96,0xb9f,0x895,0x99c,0x69c,0x795,0x49f,0x596,0x29a,0x393,0x99 ,0x190,
0xf00,0xe09,0xd03,0xc0a,0xb06,0xa0f,0x905,0x80c,0x70c,0x605,0x50f,0x406,0x30a,0x203,0x109,0x0  };

const signed char kTriTable[256][16] = {
{-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{0,8,3,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{0,1,9,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{1,8,3,9,8,1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{1,2,10,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{0,8,3,1,2,10,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{9,2,10,0,2,9,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{2,8,3,2,10,8,10,9,8,-1,-1,-1,-1,-1,-1,-1},
{3,11,2,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{0,11,2,8,11,0,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{1,9,0,2,3,11,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{1,11,2,1,9,11,9,8,11,-1,-1,-1,-1,-1,-1,-1},
{3,10,1,11,10,3,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{0,10,1,0,8,10,8,11,10,-1,-1,-1,-1,-1,-1,-1},
{3,9,0,3,11,9,11,10,9,-1,-1,-1,-1,-1,-1,-1},
{9,8,10,10,8,11,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{4,7,8,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{4,3,0,7,3,4,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{0,1,9,8,4,7,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{4,1,9,4,7,1,7,3,1,-1,-1,-1,-1,-1,-1,-1},
{1,2,10,8,4,7,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{3,4,7,3,0,4,1,2,10,-1,-1,-1,-1,-1,-1,-1},
{9,2,10,9,0,2,8,4,7,-1,-1,-1,-1,-1,-1,-1},
{2,10,9,2,9,7,2,7,3,7,9,4,-1,-1,-1,-1},
{8,4,7,3,11,2,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{11,4,7,11,2,4,2,0,4,-1,-1,-1,-1,-1,-1,-1},
{9,0,1,8,4,7,2,3,11,-1,-1,-1,-1,-1,-1,-1},
{4,7,11,9,4,11,9,11,2,9,2,1,-1,-1,-1,-1},
{3,10,1,3,11,10,7,8,4,-1,-1,-1,-1,-1,-1,-1},
{1,11,10,1,4,11,1,0,4,7,11,4,-1,-1,-1,-1},
{4,7,8,9,0,11,9,11,10,11,0,3,-1,-1,-1,-1},
{4,7,11,4,11,9,9,11,10,-1,-1,-1,-1,-1,-1,-1},
{9,5,4,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{9,5,4,0,8,3,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{0,5,4,1,5,0,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{8,5,4,8,3,5,3,1,5,-1,-1,-1,-1,-1,-1,-1},
{1,2,10,9,5,4,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{3,0,8,1,2,10,4,9,5,-1,-1,-1,-1,-1,-1,-1},
{5,2,10,5,4,2,4,0,2,-1,-1,-1,-1,-1,-1,-1},
{2,10,5,3,2,5,3,5,4,3,4,8,-1,-1,-1,-1},
{9,5,4,2,3,11,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{0,11,2,0,8,11,4,9,5,-1,-1,-1,-1,-1,-1,-1},
{0,5,4,0,1,5,2,3,11,-1,-1,-1,-1,-1,-1,-1},
{2,1,5,2,5,8,2,8,11,4,8,5,-1,-1,-1,-1},
{10,3,11,10,1,3,9,5,4,-1,-1,-1,-1,-1,-1,-1},
{4,9,5,0,8,1,8,10,1,8,11,10,-1,-1,-1,-1},
{5,4,0,5,0,11,5,11,10,11,0,3,-1,-1,-1,-1},
{5,4,8,5,8,10,10,8,11,-1,-1,-1,-1,-1,-1,-1},
{9,7,8,5,7,9,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{9,3,0,9,5,3,5,7,3,-1,-1,-1,-1,-1,-1,-1},
{0,7,8,0,1,7,1,5,7,-1,-1,-1,-1,-1,-1,-1},
{1,5,3,3,5,7,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{9,7,8,9,5,7,10,1,2,-1,-1,-1,-1,-1,-1,-1},
{10,1,2,9,5,0,5,3,0,5,7,3,-1,-1,-1,-1},
{8,0,2,8,2,5,8,5,7,10,5,2,-1,-1,-1,-1},
{2,10,5,2,5,3,3,5,7,-1,-1,-1,-1,-1,-1,-1},
{7,9,5,7,8,9,3,11,2,-1,-1,-1,-1,-1,-1,-1},
{9,5,7,9,7,2,9,2,0,2,7,11,-1,-1,-1,-1},
{2,3,11,0,1,8,1,7,8,1,5,7,-1,-1,-1,-1},
{11,2,1,11,1,7,7,1,5,-1,-1,-1,-1,-1,-1,-1},
{9,5,8,8,5,7,10,1,3,10,3,11,-1,-1,-1,-1},
{5,7,0,5,0,9,7,11,0,1,0,10,11,10,0,-1},
{11,10,0,11,0,3,10,5,0,8,0,7,5,7,0,-1},
{11,10,5,7,11,5,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{10,6,5,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{0,8,3,5,10,6,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{9,0,1,5,10,6,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{1,8,3,1,9,8,5,10,6,-1,-1,-1,-1,-1,-1,-1},
{1,6,5,2,6,1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{1,6,5,1,2,6,3,0,8,-1,-1,-1,-1,-1,-1,-1},
{9,6,5,9,0,6,0,2,6,-1,-1,-1,-1,-1,-1,-1},
{5,9,8,5,8,2,5,2,6,3,2,8,-1,-1,-1,-1},
{2,3,11,10,6,5,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{11,0,8,11,2,0,10,6,5,-1,-1,-1,-1,-1,-1,-1},
{0,1,9,2,3,11,5,10,6,-1,-1,-1,-1,-1,-1,-1},
{5,10,6,1,9,2,9,11,2,9,8,11,-1,-1,-1,-1},
{6,3,11,6,5,3,5,1,3,-1,-1,-1,-1,-1,-1,-1},
{0,8,11,0,11,5,0,5,1,5,11,6,-1,-1,-1,-1},
{3,11,6,0,3,6,0,6,5,0,5,9,-1,-1,-1,-1},
{6,5,9,6,9,11,11,9,8,-1,-1,-1,-1,-1,-1,-1},
{5,10,6,4,7,8,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{4,3,0,4,7,3,6,5,10,-1,-1,-1,-1,-1,-1,-1},
{1,9,0,5,10,6,8,4,7,-1,-1,-1,-1,-1,-1,-1},
{10,6,5,1,9,7,1,7,3,7,9,4,-1,-1,-1,-1},
{6,1,2,6,5,1,4,7,8,-1,-1,-1,-1,-1,-1,-1},
{1,2,5,5,2,6,3,0,4,3,4,7,-1,-1,-1,-1},
{8,4,7,9,0,5,0,6,5,0,2,6,-1,-1,-1,-1},
{7,3,9,7,9,4,3,2,9,5,9,6,2,6,9,-1},
{3,11,2,7,8,4,10,6,5,-1,-1,-1,-1,-1,-1,-1},
{5,10,6,4,7,2,4,2,0,2,7,11,-1,-1,-1,-1},
{0,1,9,4,7,8,2,3,11,5,10,6,-1,-1,-1,-1},
{9,2,1,9,11,2,9,4,11,7,11,4,5,10,6,-1},
{8,4,7,3,11,5,3,5,1,5,11,6,-1,-1,-1,-1},
{5,1,11,5,11,6,1,0,11,7,11,4,0,4,11,-1},
{0,5,9,0,6,5,0,3,6,11,6,3,8,4,7,-1},
{6,5,9,6,9,11,4,7,9,7,11,9,-1,-1,-1,-1},
{10,4,9,6,4,10,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{4,10,6,4,9,10,0,8,3,-1,-1,-1,-1,-1,-1,-1},
{10,0,1,10,6,0,6,4,0,-1,-1,-1,-1,-1,-1,-1},
{8,3,1,8,1,6,8,6,4,6,1,10,-1,-1,-1,-1},
{1,4,9,1,2,4,2,6,4,-1,-1,-1,-1,-1,-1,-1},
{3,0,8,1,2,9,2,4,9,2,6,4,-1,-1,-1,-1},
{0,2,4,4,2,6,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{8,3,2,8,2,4,4,2,6,-1,-1,-1,-1,-1,-1,-1},
{10,4,9,10,6,4,11,2,3,-1,-1,-1,-1,-1,-1,-1},
{0,8,2,2,8,11,4,9,10,4,10,6,-1,-1,-1,-1},
{3,11,2,0,1,6,0,6,4,6,1,10,-1,-1,-1,-1},
{6,4,1,6,1,10,4,8,1,2,1,11,8,11,1,-1},
{9,6,4,9,3,6,9,1,3,11,6,3,-1,-1,-1,-1},
{8,11,1,8,1,0,11,6,1,9,1,4,6,4,1,-1},
{3,11,6,3,6,0,0,6,4,-1,-1,-1,-1,-1,-1,-1},
{6,4,8,11,6,8,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{7,10,6,7,8,10,8,9,10,-1,-1,-1,-1,-1,-1,-1},
{0,7,3,0,10,7,0,9,10,6,7,10,-1,-1,-1,-1},
{10,6,7,1,10,7,1,7,8,1,8,0,-1,-1,-1,-1},
{10,6,7,10,7,1,1,7,3,-1,-1,-1,-1,-1,-1,-1},
{1,2,6,1,6,8,1,8,9,8,6,7,-1,-1,-1,-1},
{2,6,9,2,9,1,6,7,9,0,9,3,7,3,9,-1},
{7,8,0,7,0,6,6,0,2,-1,-1,-1,-1,-1,-1,-1},
{7,3,2,6,7,2,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{2,3,11,10,6,8,10,8,9,8,6,7,-1,-1,-1,-1},
{2,0,7,2,7,11,0,9,7,6,7,10,9,10,7,-1},
{1,8,0,1,7,8,1,10,7,6,7,10,2,3,11,-1},
{11,2,1,11,1,7,10,6,1,6,7,1,-1,-1,-1,-1},
{8,9,6,8,6,7,9,1,6,11,6,3,1,3,6,-1},
{0,9,1,11,6,7,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{7,8,0,7,0,6,3,11,0,11,6,0,-1,-1,-1,-1},
{7,11,6,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{7,6,11,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{3,0,8,11,7,6,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{0,1,9,11,7,6,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{8,1,9,8,3,1,11,7,6,-1,-1,-1,-1,-1,-1,-1},
{10,1,2,6,11,7,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{1,2,10,3,0,8,6,11,7,-1,-1,-1,-1,-1,-1,-1},
{2,9,0,2,10,9,6,11,7,-1,-1,-1,-1,-1,-1,-1},
{6,11,7,2,10,3,10,8,3,10,9,8,-1,-1,-1,-1},
{7,2,3,6,2,7,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{7,0,8,7,6,0,6,2,0,-1,-1,-1,-1,-1,-1,-1},
{2,7,6,2,3,7,0,1,9,-1,-1,-1,-1,-1,-1,-1},
{1,6,2,1,8,6,1,9,8,8,7,6,-1,-1,-1,-1},
{10,7,6,10,1,7,1,3,7,-1,-1,-1,-1,-1,-1,-1},
{10,7,6,1,7,10,1,8,7,1,0,8,-1,-1,-1,-1},
{0,3,7,0,7,10,0,10,9,6,10,7,-1,-1,-1,-1},
{7,6,10,7,10,8,8,10,9,-1,-1,-1,-1,-1,-1,-1},
{6,8,4,11,8,6,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{3,6,11,3,0,6,0,4,6,-1,-1,-1,-1,-1,-1,-1},
{8,6,11,8,4,6,9,0,1,-1,-1,-1,-1,-1,-1,-1},
{9,4,6,9,6,3,9,3,1,11,3,6,-1,-1,-1,-1},
{6,8,4,6,11,8,2,10,1,-1,-1,-1,-1,-1,-1,-1},
{1,2,10,3,0,11,0,6,11,0,4,6,-1,-1,-1,-1},
{4,11,8,4,6,11,0,2,9,2,10,9,-1,-1,-1,-1},
{10,9,3,10,3,2,9,4,3,11,3,6,4,6,3,-1},
{8,2,3,8,4,2,4,6,2,-1,-1,-1,-1,-1,-1,-1},
{0,4,2,4,6,2,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{1,9,0,2,3,4,2,4,6,4,3,8,-1,-1,-1,-1},
{1,9,4,1,4,2,2,4,6,-1,-1,-1,-1,-1,-1,-1},
{8,1,3,8,6,1,8,4,6,6,10,1,-1,-1,-1,-1},
{10,1,0,10,0,6,6,0,4,-1,-1,-1,-1,-1,-1,-1},
{4,6,3,4,3,8,6,10,3,0,3,9,10,9,3,-1},
{10,9,4,6,10,4,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{4,9,5,7,6,11,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{0,8,3,4,9,5,11,7,6,-1,-1,-1,-1,-1,-1,-1},
{5,0,1,5,4,0,7,6,11,-1,-1,-1,-1,-1,-1,-1},
{11,7,6,8,3,4,3,5,4,3,1,5,-1,-1,-1,-1},
{9,5,4,10,1,2,7,6,11,-1,-1,-1,-1,-1,-1,-1},
{6,11,7,1,2,10,0,8,3,4,9,5,-1,-1,-1,-1},
{7,6,11,5,4,10,4,2,10,4,0,2,-1,-1,-1,-1},
{3,4,8,3,5,4,3,2,5,10,5,2,11,7,6,-1},
{7,2,3,7,6,2,5,4,9,-1,-1,-1,-1,-1,-1,-1},
{9,5,4,0,8,6,0,6,2,6,8,7,-1,-1,-1,-1},
{3,6,2,3,7,6,1,5,0,5,4,0,-1,-1,-1,-1},
{6,2,8,6,8,7,2,1,8,4,8,5,1,5,8,-1},
{9,5,4,10,1,6,1,7,6,1,3,7,-1,-1,-1,-1},
{1,6,10,1,7,6,1,0,7,8,7,0,9,5,4,-1},
{4,0,10,4,10,5,0,3,10,6,10,7,3,7,10,-1},
{7,6,10,7,10,8,5,4,10,4,8,10,-1,-1,-1,-1},
{6,9,5,6,11,9,11,8,9,-1,-1,-1,-1,-1,-1,-1},
{3,6,11,0,6,3,0,5,6,0,9,5,-1,-1,-1,-1},
{0,11,8,0,5,11,0,1,5,5,6,11,-1,-1,-1,-1},
{6,11,3,6,3,5,5,3,1,-1,-1,-1,-1,-1,-1,-1},
{1,2,10,9,5,11,9,11,8,11,5,6,-1,-1,-1,-1},
{0,11,3,0,6,11,0,9,6,5,6,9,1,2,10,-1},
{11,8,5,11,5,6,8,0,5,10,5,2,0,2,5,-1},
{6,11,3,6,3,5,2,10,3,10,5,3,-1,-1,-1,-1},
{5,8,9,5,2,8,5,6,2,3,8,2,-1,-1,-1,-1},
{9,5,6,9,6,0,0,6,2,-1,-1,-1,-1,-1,-1,-1},
{1,5,8,1,8,0,5,6,8,3,8,2,6,2,8,-1},
{1,5,6,2,1,6,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{1,3,6,1,6,10,3,8,6,5,6,9,8,9,6,-1},
{10,1,0,10,0,6,9,5,0,5,6,0,-1,-1,-1,-1},
{0,3,8,5,6,10,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{10,5,6,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{11,5,10,7,5,11,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{11,5,10,11,7,5,8,3,0,-1,-1,-1,-1,-1,-1,-1},
{5,11,7,5,10,11,1,9,0,-1,-1,-1,-1,-1,-1,-1},
{10,7,5,10,11,7,9,8,1,8,3,1,-1,-1,-1,-1},
{11,1,2,11,7,1,7,5,1,-1,-1,-1,-1,-1,-1,-1},
{0,8,3,1,2,7,1,7,5,7,2,11,-1,-1,-1,-1},
{9,7,5,9,2,7,9,0,2,2,11,7,-1,-1,-1,-1},
{7,5,2,7,2,11,5,9,2,3,2,8,9,8,2,-1},
{2,5,10,2,3,5,3,7,5,-1,-1,-1,-1,-1,-1,-1},
{8,2,0,8,5,2,8,7,5,10,2,5,-1,-1,-1,-1},
{9,0,1,5,10,3,5,3,7,3,10,2,-1,-1,-1,-1},
{9,8,2,9,2,1,8,7,2,10,2,5,7,5,2,-1},
{1,3,5,3,7,5,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{0,8,7,0,7,1,1,7,5,-1,-1,-1,-1,-1,-1,-1},
{9,0,3,9,3,5,5,3,7,-1,-1,-1,-1,-1,-1,-1},
{9,8,7,5,9,7,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{5,8,4,5,10,8,10,11,8,-1,-1,-1,-1,-1,-1,-1},
{5,0,4,5,11,0,5,10,11,11,3,0,-1,-1,-1,-1},
{0,1,9,8,4,10,8,10,11,10,4,5,-1,-1,-1,-1},
{10,11,4,10,4,5,11,3,4,9,4,1,3,1,4,-1},
{2,5,1,2,8,5,2,11,8,4,5,8,-1,-1,-1,-1},
{0,4,11,0,11,3,4,5,11,2,11,1,5,1,11,-1},
{0,2,5,0,5,9,2,11,5,4,5,8,11,8,5,-1},
{9,4,5,2,11,3,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{2,5,10,3,5,2,3,4,5,3,8,4,-1,-1,-1,-1},
{5,10,2,5,2,4,4,2,0,-1,-1,-1,-1,-1,-1,-1},
{3,10,2,3,5,10,3,8,5,4,5,8,0,1,9,-1},
{5,10,2,5,2,4,1,9,2,9,4,2,-1,-1,-1,-1},
{8,4,5,8,5,3,3,5,1,-1,-1,-1,-1,-1,-1,-1},
{0,4,5,1,0,5,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{8,4,5,8,5,3,9,0,5,0,3,5,-1,-1,-1,-1},
{9,4,5,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{4,11,7,4,9,11,9,10,11,-1,-1,-1,-1,-1,-1,-1},
{0,8,3,4,9,7,9,11,7,9,10,11,-1,-1,-1,-1},
{1,10,11,1,11,4,1,4,0,7,4,11,-1,-1,-1,-1},
{3,1,4,3,4,8,1,10,4,7,4,11,10,11,4,-1},
{4,11,7,9,11,4,9,2,11,9,1,2,-1,-1,-1,-1},
{9,7,4,9,11,7,9,1,11,2,11,1,0,8,3,-1},
{11,7,4,11,4,2,2,4,0,-1,-1,-1,-1,-1,-1,-1},
{11,7,4,11,4,2,8,3,4,3,2,4,-1,-1,-1,-1},
{2,9,10,2,7,9,2,3,7,7,4,9,-1,-1,-1,-1},
{9,10,7,9,7,4,10,2,7,8,7,0,2,0,7,-1},
{3,7,10,3,10,2,7,4,10,1,10,0,4,0,10,-1},
{1,10,2,8,7,4,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{4,9,1,4,1,7,7,1,3,-1,-1,-1,-1,-1,-1,-1},
{4,9,1,4,1,7,0,8,1,8,7,1,-1,-1,-1,-1},
{4,0,3,7,4,3,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{4,8,7,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{9,10,8,10,11,8,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{3,0,9,3,9,11,11,9,10,-1,-1,-1,-1,-1,-1,-1},
{0,1,10,0,10,8,8,10,11,-1,-1,-1,-1,-1,-1,-1},
{3,1,10,11,3,10,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{1,2,11,1,11,9,9,11,8,-1,-1,-1,-1,-1,-1,-1},
{3,0,9,3,9,11,1,2,9,2,11,9,-1,-1,-1,-1},
{0,2,11,8,0,11,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{3,2,11,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{2,3,8,2,8,10,10,8,9,-1,-1,-1,-1,-1,-1,-1},
{9,10,2,0,9,2,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{2,3,8,2,8,10,0,1,8,1,10,8,-1,-1,-1,-1},
{1,10,2,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{1,3,8,9,1,8,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{0,9,1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{0,3,8,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1}};
// clang-format on

// cube corner offsets along (axis0, axis1, axis2)
const int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                           {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
// cube edge -> (corner, corner)
const int kEdge[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                          {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

struct VertexWelder {
    // key: flat index of the edge's lower corner * 4 + axis
    std::unordered_map<std::uint64_t, int> seen;
    ContourSet* out = nullptr;

    int vertex(std::int64_t lo_flat, int axis, const std::int64_t* lo_idx,
               double t) {
        const std::uint64_t key =
            static_cast<std::uint64_t>(lo_flat) * 4u + static_cast<std::uint64_t>(axis);
        auto it = seen.find(key);
        if (it != seen.end()) return it->second;
        std::array<double, 3> pos = {static_cast<double>(lo_idx[0]),
                                     static_cast<double>(lo_idx[1]),
                                     out->dims == 3 ? static_cast<double>(lo_idx[2])
                                                    : 0.0};
        pos[static_cast<std::size_t>(axis)] += t;
        const int id = static_cast<int>(out->vertices.size());
        out->vertices.push_back(pos);
        seen.emplace(key, id);
        return id;
    }
};

// Edge axis: the single axis along which the two corners differ.
int edge_axis(int e) {
    for (int a = 0; a < 3; ++a) {
        if (kCorner[kEdge[e][0]][a] != kCorner[kEdge[e][1]][a]) return a;
    }
    return -1;
}

void marching_cubes(const MultiField& field, int var, double iso,
                    ContourSet& out) {
    const auto& grid = field.grid();
    const auto values = field.values(var);
    const std::int64_t s0 = grid.shape[0], s1 = grid.shape[1], s2 = grid.shape[2];
    VertexWelder weld;
    weld.out = &out;

    double corner_val[8];
    std::int64_t corner_idx[8];
    for (std::int64_t i = 0; i + 1 < s0; ++i) {
        for (std::int64_t j = 0; j + 1 < s1; ++j) {
            for (std::int64_t k = 0; k + 1 < s2; ++k) {
                int cube = 0;
                for (int c = 0; c < 8; ++c) {
                    const std::int64_t ci = i + kCorner[c][0];
                    const std::int64_t cj = j + kCorner[c][1];
                    const std::int64_t ck = k + kCorner[c][2];
                    const std::int64_t flat = (ci * s1 + cj) * s2 + ck;
                    corner_idx[c] = flat;
                    corner_val[c] = static_cast<double>(values[static_cast<std::size_t>(flat)]);
                    if (corner_val[c] < iso) cube |= 1 << c;
                }
                const int edges = kEdgeTable[cube];
                if (edges == 0) continue;

                int edge_vertex[12];
                for (int e = 0; e < 12; ++e) {
                    if (!(edges & (1 << e))) continue;
                    int ca = kEdge[e][0], cb = kEdge[e][1];
                    const int axis = edge_axis(e);
                    // orient from the lower corner along the axis
                    if (kCorner[ca][axis] > kCorner[cb][axis]) std::swap(ca, cb);
                    const double va = corner_val[ca], vb = corner_val[cb];
                    const double t = (iso - va) / (vb - va);
                    std::int64_t lo_idx[3] = {i + kCorner[ca][0], j + kCorner[ca][1],
                                              k + kCorner[ca][2]};
                    edge_vertex[e] =
                        weld.vertex(corner_idx[ca], axis, lo_idx,
                                    std::clamp(t, 0.0, 1.0));
                }
                const signed char* tri = kTriTable[cube];
                for (int t = 0; tri[t] != -1; t += 3) {
                    out.triangles.push_back({edge_vertex[tri[t]],
                                             edge_vertex[tri[t + 1]],
                                             edge_vertex[tri[t + 2]]});
                }
            }
        }
    }
}

void marching_squares(const MultiField& field, int var, double iso,
                      ContourSet& out) {
    const auto& grid = field.grid();
    const auto values = field.values(var);
    const std::int64_t s0 = grid.shape[0], s1 = grid.shape[1];
    VertexWelder weld;
    weld.out = &out;

    // cell corners c0..c3 cycle (0,0)(1,0)(1,1)(0,1); edges e0..e3 between
    // consecutive corners
    const int corner_off[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    const int edge_corner[4][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};

    for (std::int64_t i = 0; i + 1 < s0; ++i) {
        for (std::int64_t j = 0; j + 1 < s1; ++j) {
            double val[4];
            std::int64_t flat[4];
            int idx = 0;
            for (int c = 0; c < 4; ++c) {
                const std::int64_t ci = i + corner_off[c][0];
                const std::int64_t cj = j + corner_off[c][1];
                flat[c] = ci * s1 + cj;
                val[c] = static_cast<double>(values[static_cast<std::size_t>(flat[c])]);
                if (val[c] < iso) idx |= 1 << c;
            }
            if (idx == 0 || idx == 15) continue;

            auto edge_vertex = [&](int e) {
                int ca = edge_corner[e][0], cb = edge_corner[e][1];
                int axis = (corner_off[ca][0] != corner_off[cb][0]) ? 0 : 1;
                if (corner_off[ca][axis] > corner_off[cb][axis]) std::swap(ca, cb);
                const double t = (iso - val[ca]) / (val[cb] - val[ca]);
                std::int64_t lo_idx[3] = {i + corner_off[ca][0], j + corner_off[ca][1], 0};
                return weld.vertex(flat[ca], axis, lo_idx, std::clamp(t, 0.0, 1.0));
            };
            auto emit = [&](int ea, int eb) {
                out.segments.push_back({edge_vertex(ea), edge_vertex(eb)});
            };

            switch (idx) {
                case 1: case 14: emit(0, 3); break;
                case 2: case 13: emit(0, 1); break;
                case 4: case 11: emit(1, 2); break;
                case 8: case 7:  emit(2, 3); break;
                case 3: case 12: emit(1, 3); break;
                case 6: case 9:  emit(0, 2); break;
                case 5: case 10: {
                    // ambiguous saddle, resolved by the cell-center average
                    const double center = 0.25 * (val[0] + val[1] + val[2] + val[3]);
                    const bool center_in = center < iso;
                    const bool diag02 = (idx == 5);  // corners 0 and 2 inside
                    if (diag02 == center_in) {
                        emit(0, 1);
                        emit(2, 3);
                    } else {
                        emit(0, 3);
                        emit(1, 2);
                    }
                    break;
                }
                default: break;
            }
        }
    }
}

// Exact nearest-neighbor search; must agree with brute force bit-for-bit, so
// distances are computed with the same expression everywhere.
inline double sqdist(const std::array<double, 3>& a,
                     const std::array<double, 3>& b, int dims) {
    double acc = 0.0;
    for (int k = 0; k < dims; ++k) {
        const double d = a[static_cast<std::size_t>(k)] - b[static_cast<std::size_t>(k)];
        acc += d * d;
    }
    return acc;
}

class KdTree {
public:
    KdTree(std::span<const std::array<double, 3>> pts, int dims)
        : pts_(pts), dims_(dims) {
        order_.resize(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) order_[i] = static_cast<int>(i);
        nodes_.reserve(pts.size() / kLeaf * 2 + 2);
        root_ = build(0, static_cast<int>(pts.size()));
    }

    double nearest_sqdist(const std::array<double, 3>& q) const {
        double best = std::numeric_limits<double>::infinity();
        search(root_, q, best);
        return best;
    }

private:
    static constexpr int kLeaf = 8;
    struct Node {
        int axis = -1;  // -1: leaf
        double split = 0.0;
        int left = -1, right = -1;
        int begin = 0, end = 0;
    };

    int build(int begin, int end) {
        Node node;
        node.begin = begin;
        node.end = end;
        if (end - begin <= kLeaf) {
            nodes_.push_back(node);
            return static_cast<int>(nodes_.size()) - 1;
        }
        // split on the axis of largest extent
        double lo[3], hi[3];
        for (int a = 0; a < dims_; ++a) {
            lo[a] = std::numeric_limits<double>::infinity();
            hi[a] = -lo[a];
        }
        for (int i = begin; i < end; ++i) {
            const auto& p = pts_[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])];
            for (int a = 0; a < dims_; ++a) {
                lo[a] = std::min(lo[a], p[static_cast<std::size_t>(a)]);
                hi[a] = std::max(hi[a], p[static_cast<std::size_t>(a)]);
            }
        }
        int axis = 0;
        for (int a = 1; a < dims_; ++a) {
            if (hi[a] - lo[a] > hi[axis] - lo[axis]) axis = a;
        }
        const int mid = (begin + end) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid,
                         order_.begin() + end, [&](int x, int y) {
                             return pts_[static_cast<std::size_t>(x)][static_cast<std::size_t>(axis)] <
                                    pts_[static_cast<std::size_t>(y)][static_cast<std::size_t>(axis)];
                         });
        node.axis = axis;
        node.split = pts_[static_cast<std::size_t>(order_[static_cast<std::size_t>(mid)])]
                         [static_cast<std::size_t>(axis)];
        nodes_.push_back(node);
        const int self = static_cast<int>(nodes_.size()) - 1;
        const int l = build(begin, mid);
        const int r = build(mid, end);
        nodes_[static_cast<std::size_t>(self)].left = l;
        nodes_[static_cast<std::size_t>(self)].right = r;
        return self;
    }

    void search(int ni, const std::array<double, 3>& q, double& best) const {
        const Node& node = nodes_[static_cast<std::size_t>(ni)];
        if (node.axis < 0) {
            for (int i = node.begin; i < node.end; ++i) {
                const double d =
                    sqdist(q, pts_[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])],
                           dims_);
                if (d < best) best = d;
            }
            return;
        }
        const double delta = q[static_cast<std::size_t>(node.axis)] - node.split;
        const int near = delta < 0.0 ? node.left : node.right;
        const int far = delta < 0.0 ? node.right : node.left;
        search(near, q, best);
        if (delta * delta < best) search(far, q, best);
    }

    std::span<const std::array<double, 3>> pts_;
    int dims_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

void require_nonempty(std::span<const std::array<double, 3>> a,
                      std::span<const std::array<double, 3>> b) {
    if (a.empty() || b.empty()) throw DataError("contour missing");
}

}  // namespace

ContourSet extract_contour(const MultiField& field, int var, double isovalue) {
    const auto& meta = field.variable(var);
    if (meta.degenerate()) {
        throw DataError("extract_contour: variable '" + meta.name +
                        "' is constant");
    }
    ContourSet out;
    out.dims = field.grid().dims;
    out.variable = meta.name;
    out.isovalue = isovalue;
    if (field.grid().dims == 2) {
        marching_squares(field, var, isovalue, out);
    } else {
        marching_cubes(field, var, isovalue, out);
    }
    return out;
}

double chamfer(std::span<const std::array<double, 3>> a,
               std::span<const std::array<double, 3>> b, int dims) {
    require_nonempty(a, b);
    KdTree ta(a, dims), tb(b, dims);
    double sum_ab = 0.0;
    for (const auto& p : a) sum_ab += std::sqrt(tb.nearest_sqdist(p));
    double sum_ba = 0.0;
    for (const auto& p : b) sum_ba += std::sqrt(ta.nearest_sqdist(p));
    return sum_ab / static_cast<double>(a.size()) +
           sum_ba / static_cast<double>(b.size());
}

double hausdorff(std::span<const std::array<double, 3>> a,
                 std::span<const std::array<double, 3>> b, int dims) {
    require_nonempty(a, b);
    KdTree ta(a, dims), tb(b, dims);
    double max_ab = 0.0;
    for (const auto& p : a) max_ab = std::max(max_ab, tb.nearest_sqdist(p));
    double max_ba = 0.0;
    for (const auto& p : b) max_ba = std::max(max_ba, ta.nearest_sqdist(p));
    return std::sqrt(std::max(max_ab, max_ba));
}

ContourStudyResult contour_study(const MultiField& reference,
                                 const MultiField& candidate, int n_isovalues,
                                 std::uint64_t seed) {
    if (reference.grid() != candidate.grid()) {
        throw DataError("contour_study: grid mismatch");
    }
    if (reference.variable_count() != candidate.variable_count()) {
        throw DataError("contour_study: variable count mismatch");
    }

    ContourStudyResult result;
    double agg_chamfer = 0.0, agg_hausdorff = 0.0;
    int vars_used = 0;

    for (int v = 0; v < reference.variable_count(); ++v) {
        const auto& meta = reference.variable(v);
        ContourStudyVariable stats;
        stats.name = meta.name;
        if (meta.degenerate()) {
            stats.excluded_isovalues = n_isovalues;
            result.total_excluded += n_isovalues;
            result.per_variable.push_back(stats);
            continue;
        }
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(v)));
        double sum_c = 0.0, sum_h = 0.0;
        for (int it = 0; it < n_isovalues; ++it) {
            const double iso = rng.uniform(meta.raw_min, meta.raw_max);
            ContourSet ref = extract_contour(reference, v, iso);
            ContourSet cand = extract_contour(candidate, v, iso);
            if (ref.empty() || cand.empty()) {
                ++stats.excluded_isovalues;
                continue;
            }
            sum_c += chamfer(ref.vertices, cand.vertices, ref.dims);
            sum_h += hausdorff(ref.vertices, cand.vertices, ref.dims);
            ++stats.used_isovalues;
        }
        if (stats.used_isovalues > 0) {
            stats.mean_chamfer = sum_c / stats.used_isovalues;
            stats.mean_hausdorff = sum_h / stats.used_isovalues;
            agg_chamfer += stats.mean_chamfer;
            agg_hausdorff += stats.mean_hausdorff;
            ++vars_used;
        }
        result.total_excluded += stats.excluded_isovalues;
        result.per_variable.push_back(stats);
    }

    if (vars_used > 0) {
        result.mean_chamfer = agg_chamfer / vars_used;
        result.mean_hausdorff = agg_hausdorff / vars_used;
    }
    return result;
}

}  // namespace mvrep

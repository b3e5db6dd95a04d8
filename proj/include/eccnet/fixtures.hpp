#pragma once

#include <array>
#include <vector>

#include "eccnet/backbone.hpp"

namespace eccnet {

/// Published window sizes versus unit distance (output-grid px) for a
/// 1200 x 1200 input, per pooling layer.
struct RfTableRow {
    int layer_id;
    std::array<int, 16> distance;
    std::array<int, 16> window;
};

inline constexpr std::array<RfTableRow, 5> kRfTable{{
    {3,
     {60, 75, 90, 105, 120, 135, 150, 165, 180, 195, 210, 225, 240, 255, 270, 285},
     {2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2}},
    {6,
     {30, 38, 46, 54, 62, 70, 78, 86, 94, 102, 110, 118, 126, 134, 142, 150},
     {2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2}},
    {10,
     {16, 20, 24, 28, 32, 36, 40, 44, 48, 52, 56, 60, 64, 68, 72, 76},
     {2, 3, 3, 4, 4, 5, 5, 6, 6, 7, 8, 8, 9, 9, 10, 10}},
    {14,
     {8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30, 32, 34, 36, 38},
     {2, 3, 3, 4, 5, 5, 6, 6, 7, 8, 8, 9, 10, 10, 11, 12}},
    {18,
     {4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19},
     {2, 3, 3, 4, 5, 5, 6, 6, 7, 8, 8, 9, 10, 10, 11, 12}},
}};

struct RfTableMismatch {
    int layer_id;
    int distance;
    int expected;
    int actual;
};

/// Entries where ecc_rf_size under `config` disagrees with the table.
std::vector<RfTableMismatch> rf_table_mismatches(const BackboneConfig& config);

/// Worked fusion example: three modulation maps' extrema and two probe points.
struct FusionFixture {
    std::array<double, 3> maxima{415261, 164618, 17118};
    std::array<double, 3> minima{255590, 57584, 846};
    std::array<double, 3> p1{412454, 143382, 9492};
    std::array<double, 3> p2{392635, 163745, 13075};
    std::array<double, 3> weights{0.696, 0.276, 0.029};
    std::array<double, 3> p1_normalized{0.982, 0.802, 0.531};
    double p1_fused = 0.92;
    double p2_raw_sum = 569455;
};

} // namespace eccnet

/******************************************************************************
 * Copyright 2026 The lungreg Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *	http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *****************************************************************************/
#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "lungreg/volume.hpp"

namespace lungreg {

/// Boundary voxel centers (world mm) of one binary region.
struct SurfacePointSet {
    std::vector<Vec3> points;
};

/// 2|X ∩ Y| / (|X| + |Y|) on binary channels (nonzero = inside); 1 when both
/// are empty.
double dice(const ScalarVolume &x, const ScalarVolume &y);
double dice(const LabelVolume &x, const LabelVolume &y, int label);

/// Foreground voxels with a 6-neighbour that is background or off-grid.
SurfacePointSet extract_surface(const ScalarVolume &channel);
SurfacePointSet extract_surface(const LabelVolume &labels, int label);

/// Average symmetric surface distance (mm). Throws on empty input.
double asd(const SurfacePointSet &xs, const SurfacePointSet &ys);
/// Symmetric Hausdorff distance (mm). Throws on empty input.
double hausdorff(const SurfacePointSet &xs, const SurfacePointSet &ys);

struct DistanceStats {
    double mean = 0.0;
    double std = 0.0; // population
    double p25 = 0.0;
    double p50 = 0.0;
    double p75 = 0.0;
    double max = 0.0;
};

/// Linear-interpolated percentile (q in [0,100]) of unsorted values.
double percentile(std::vector<double> values, double q);
DistanceStats distance_stats(const std::vector<double> &values);

/// Per-pair |k_M - y(k_F)| in mm.
std::vector<double> tre_distances(const KeypointPairSet &pairs, const DisplacementField &u);
/// Throws std::invalid_argument on an empty set.
DistanceStats tre(const KeypointPairSet &pairs, const DisplacementField &u);

inline constexpr int kFoldingHistogramBins = 64;
inline constexpr double kFoldingHistogramMin = 1.0 / 256.0;
inline constexpr double kFoldingHistogramMax = 8.0;

struct FoldingStats {
    double fraction = 0.0; // voxels with det <= 0
    double min = 0.0;
    double max = 0.0;
    std::size_t voxels = 0;
    std::size_t folded = 0;
    std::size_t underflow = 0; // det <= 0
    // Log-spaced bins over [1/256, 8]; values outside are clamped into the
    // first/last bin.
    std::array<std::size_t, kFoldingHistogramBins> histogram{};
};

FoldingStats folding_stats(const ScalarVolume &det, const ScalarVolume *mask = nullptr);
// Lower edge of histogram bin b (b == kFoldingHistogramBins gives the top).
double folding_bin_edge(int b);

/// Mean of the lowest 30% (rounded up, at least one) of per-case scores.
double dice30(std::span<const double> per_case_dice);

struct LabelMetrics {
    int label = 0;
    double dice = 0.0;
    std::optional<double> asd;       // empty when either surface is empty
    std::optional<double> hausdorff;
};

struct MetricsReport {
    std::vector<LabelMetrics> labels;
    double mean_dice = 0.0;
    std::optional<double> mean_asd;
    std::optional<double> mean_hausdorff;
    std::optional<DistanceStats> tre_before;
    std::optional<DistanceStats> tre_after;
    FoldingStats folding;
};

/// Overlap/surface metrics between the fixed mask and the moving mask warped
/// (linear one-hot, then argmax) by u, TRE of the given pairs and folding
/// statistics of u.
MetricsReport evaluate_registration(const DisplacementField &u, const LabelVolume *fixed_mask,
                                    const LabelVolume *moving_mask,
                                    const KeypointPairSet *pairs);

} // namespace lungreg

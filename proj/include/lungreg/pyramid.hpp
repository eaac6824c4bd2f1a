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

#include <vector>

#include "lungreg/volume.hpp"

namespace lungreg {

// Gaussian anti-aliasing used before every factor-2 decimation.
inline constexpr double kPyramidSigmaVoxels = 1.0;
inline constexpr int kPyramidKernelRadius = 3;

/// Smooth with a separable, renormalized Gaussian and keep every second
/// voxel. Odd axes are first padded by replicating the last slice. The kept
/// samples keep their world positions: spacing doubles, origin is unchanged.
ScalarVolume downsample_gaussian(const ScalarVolume &vol);
ChannelVolume downsample_gaussian(const ChannelVolume &vol);

/// Grid produced by downsample_gaussian for an input grid.
WorldGrid downsampled_grid(const WorldGrid &grid);

/// Level grids, finest (input) first. Throws std::invalid_argument if levels
/// < 1 or the coarsest level would have an axis shorter than 4 voxels.
std::vector<WorldGrid> pyramid_grids(const WorldGrid &grid, int levels);

/// levels volumes, index 0 = input resolution, index l downsampled by 2^l.
std::vector<ScalarVolume> build_pyramid(const ScalarVolume &vol, int levels);
std::vector<ChannelVolume> build_pyramid(const ChannelVolume &vol, int levels);

} // namespace lungreg

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

#include <cstddef>
#include <vector>

#include "lungreg/volume.hpp"

namespace lungreg {

/// M(x + u(x)) sampled on u's grid.
ScalarVolume warp_image(const ScalarVolume &moving, const DisplacementField &u);

/// As warp_image, additionally storing d/du of each warped value (the spatial
/// gradient of the interpolant at x + u(x)).
ScalarVolume warp_image(const ScalarVolume &moving, const DisplacementField &u,
                        std::vector<Vec3> &d_warped_du);

/// Each one-hot channel of the mask warped with trilinear interpolation.
ChannelVolume warp_onehot_linear(const LabelVolume &mask, const DisplacementField &u);
ChannelVolume warp_channels(const ChannelVolume &channels, const DisplacementField &u);

/// Hard labels after warping: argmax over background and the linearly warped
/// channels. Ties resolve to the lower label.
LabelVolume warp_labels_argmax(const LabelVolume &mask, const DisplacementField &u);

/// u with y(x) = y_prev(y_new(x)): u(x) = u_new(x) + u_prev(x + u_new(x)).
DisplacementField compose(const DisplacementField &u_prev, const DisplacementField &u_new);

/// Component-wise trilinear resampling of a mm-valued field onto target.
DisplacementField upsample_field(const DisplacementField &u, const WorldGrid &target);

struct TransformedPoints {
    std::vector<Vec3> points;
    std::size_t outside_count = 0;
};

/// x + u(x) for each point; points outside the field's extent are still
/// mapped (with clamped sampling) and counted.
TransformedPoints transform_keypoints(const DisplacementField &u, const std::vector<Vec3> &points);

} // namespace lungreg

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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lungreg/volume.hpp"

namespace lungreg {

/// Weights of the composite objective
///   L = D + alpha R + beta B + gamma V + delta K
/// plus the NGF edge parameter and the barrier parameter t.
struct LossWeights {
    double alpha = 10.0;
    double beta = 1.0;
    double gamma = 0.01;
    double delta = 0.0;
    double epsilon = 1.0;
    double t = 0.2;

    // Throws std::invalid_argument on negative/non-finite weights, epsilon <= 0
    // or t outside (0, 1].
    void validate() const;
};

struct LossReport {
    double total = 0.0;
    double distance = 0.0;
    double curvature = 0.0;
    double vcc = 0.0;
    double mask = 0.0;
    double keypoint = 0.0;
    double folding_fraction = 0.0;
};

/// Per-voxel evaluation domain; empty means the whole grid.
using DomainMask = std::vector<std::uint8_t>;

DomainMask domain_from_labels(const LabelVolume &mask);
// Voxels whose soft foreground (sum of channels) is at least 0.5.
DomainMask domain_from_channels(const ChannelVolume &mask);

// ---------------------------------------------------------------------------
// Individual terms. The *_accumulate variants add scale * d(value) into a
// caller-owned gradient buffer and return the unscaled value.

/// Normalized gradient field distance against a fixed image. Fixed-image
/// gradients and the domain are precomputed once.
class NgfDistance {
public:
    NgfDistance(const ScalarVolume &fixed, DomainMask domain, double epsilon);

    const WorldGrid &grid() const { return grid_; }
    double epsilon() const { return epsilon_; }
    std::size_t domain_size() const { return domain_size_; }

    // grad_warped receives d value / d Mw per voxel (may be empty).
    double accumulate(const ScalarVolume &warped, std::span<double> grad_warped,
                      double scale = 1.0) const;

private:
    WorldGrid grid_;
    double epsilon_;
    DomainMask domain_;
    std::size_t domain_size_ = 0;
    std::vector<Vec3> fixed_gradient_;
};

struct ScalarGradient {
    double value = 0.0;
    std::vector<double> grad;
};
struct FieldGradient {
    double value = 0.0;
    std::vector<Vec3> grad;
};

/// NGF distance of Mw to F over the lung mask support (whole grid if null).
/// grad is d value / d Mw.
ScalarGradient ngf_distance(const ScalarVolume &fixed, const ScalarVolume &warped,
                            const LabelVolume *lung_mask, double epsilon);

/// nu times the volume-averaged gradient magnitude, floored at 1e-6.
double estimate_ngf_epsilon(const ScalarVolume &image, double nu);

/// Sum of squared Laplacians of the displacement components. Second
/// differences along an axis are taken at interior nodes only, so affine
/// fields have zero cost. Requires every axis >= 3.
FieldGradient curvature(const DisplacementField &u);
double curvature_accumulate(const DisplacementField &u, std::span<Vec3> grad, double scale);

/// det(I + grad u) per voxel, central differences (one-sided at the border).
ScalarVolume jacobian_det_field(const DisplacementField &u);

/// Integral of psi_t(det(I + grad u)) over the grid.
FieldGradient vcc_penalty(const DisplacementField &u, double t);
// Also reports the number of voxels with det <= 0.
double vcc_accumulate(const DisplacementField &u, double t, std::span<Vec3> grad, double scale,
                      std::size_t *folded_voxels = nullptr);

/// Half the squared distance between linearly warped moving one-hot channels
/// and the fixed channels.
FieldGradient mask_loss(const LabelVolume &fixed_mask, const LabelVolume &moving_mask,
                        const DisplacementField &u);
double mask_accumulate(const ChannelVolume &fixed_mask, const ChannelVolume &moving_mask,
                       const DisplacementField &u, std::span<Vec3> grad, double scale);

/// Mean squared mm distance between k_M and y(k_F). When prior is given, the
/// full map is y = y_prior(x + u(x)) (u is a residual on an already-warped
/// moving image). Empty sets give 0.
FieldGradient keypoint_loss(const KeypointPairSet &pairs, const DisplacementField &u,
                            const DisplacementField *prior = nullptr);
double keypoint_accumulate(const KeypointPairSet &pairs, const DisplacementField &u,
                           const DisplacementField *prior, std::span<Vec3> grad, double scale);

// ---------------------------------------------------------------------------
// Composite objective.

/// Inputs for one objective evaluation; all volumes share the field's grid
/// except `prior`, which may live on any grid.
struct ObjectiveInputs {
    const ScalarVolume *fixed = nullptr;
    const ScalarVolume *moving = nullptr;
    const ChannelVolume *fixed_mask = nullptr;
    const ChannelVolume *moving_mask = nullptr;
    const KeypointPairSet *keypoints = nullptr;
    const DisplacementField *prior = nullptr;
};

class Objective {
public:
    Objective(const ObjectiveInputs &inputs, const LossWeights &weights);

    const LossWeights &weights() const { return weights_; }
    const std::vector<std::string> &warnings() const { return warnings_; }

    // Evaluates all terms at u; grad (resized to the voxel count) receives the
    // gradient of the total when non-null.
    LossReport evaluate(const DisplacementField &u, std::vector<Vec3> *grad) const;

private:
    ObjectiveInputs in_;
    std::vector<std::string> warnings_; // filled while weights_ is initialized
    LossWeights weights_;
    NgfDistance ngf_;
};

struct TotalLoss {
    LossReport report;
    std::vector<Vec3> grad;
    std::vector<std::string> warnings;
};

/// L(u) with its gradient. Missing masks or keypoints zero the matching
/// weight and add a warning. The NGF domain is the fixed mask's foreground.
TotalLoss total_loss(const ScalarVolume &fixed, const ScalarVolume &moving,
                     const LabelVolume *fixed_mask, const LabelVolume *moving_mask,
                     const KeypointPairSet *keypoints, const DisplacementField &u,
                     const LossWeights &weights);

} // namespace lungreg

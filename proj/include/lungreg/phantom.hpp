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
#include <vector>

#include "lungreg/metrics.hpp"
#include "lungreg/volume.hpp"

namespace lungreg {

/// Parameters of a synthetic lung-like registration case.
struct PhantomSpec {
    Dims dims{96, 80, 96};
    Vec3 spacing{2.0, 2.0, 2.0};

    int bumps = 3;               // Gaussian deformation bumps
    double max_amplitude = 16.0; // mm, amplitude of the largest bump
    double bump_sigma = 32.0;    // mm

    int structures = 300;        // ellipsoidal "vessel-like" blobs
    double structure_min_radius = 3.0; // mm
    double structure_max_radius = 8.0; // mm

    int lobes = 5;               // axis-aligned slabs inside the lung
    int keypoints = 200;         // pairs handed to the loss
    int landmarks = 100;         // held-out pairs for evaluation
    std::uint64_t seed = 0;

    void validate() const;
};

// Bound on sum |a_b| / (sigma_b sqrt(e)) that keeps det(I + grad u) > 0.
inline constexpr double kFoldFreeBound = 0.9;

struct GaussianBump {
    Vec3 center;
    Vec3 amplitude;
    double sigma = 1.0;
};

/// u(x) = sum_b a_b exp(-|x - c_b|^2 / (2 sigma_b^2)) with closed-form
/// derivatives.
class AnalyticDeformation {
public:
    AnalyticDeformation() = default;
    explicit AnalyticDeformation(std::vector<GaussianBump> bumps) : bumps_(std::move(bumps)) {}

    const std::vector<GaussianBump> &bumps() const { return bumps_; }

    Vec3 displacement(const Vec3 &x) const;
    Vec3 map(const Vec3 &x) const { return x + displacement(x); }
    // J(r, c) = d u_r / d x_c.
    Mat3 gradient(const Vec3 &x) const;
    double jacobian_det(const Vec3 &x) const;
    // sum |a_b| / (sigma_b sqrt(e)); an upper bound of |grad u|.
    double lipschitz_bound() const;

    DisplacementField sample(const WorldGrid &grid) const;

private:
    std::vector<GaussianBump> bumps_;
};

/// Random bumps inside the lung region. The largest bump keeps
/// max_amplitude; the others are scaled down until the fold-free bound holds.
/// Throws std::invalid_argument if the largest bump alone violates it, or if
/// a voxel center ends up with det <= 0.
AnalyticDeformation gen_deformation(const PhantomSpec &spec);

struct PhantomCase {
    ScalarVolume fixed;
    ScalarVolume moving;
    LabelVolume fixed_mask;
    LabelVolume moving_mask;
    KeypointPairSet keypoints;
    KeypointPairSet landmarks;
    DisplacementField ground_truth;
    AnalyticDeformation deformation;
};

/// Moving image, mask and structures are analytic; the fixed side is their
/// exact pullback F(x) = M(x + u_gt(x)), so registering F to M should recover
/// u_gt. Keypoints satisfy k_M = y_gt(k_F) exactly.
PhantomCase gen_phantom_pair(const PhantomSpec &spec);

/// |u - u_gt| statistics over the grid or the nonzero voxels of mask.
DistanceStats endpoint_error(const DisplacementField &u, const DisplacementField &u_gt,
                             const ScalarVolume *mask = nullptr);

} // namespace lungreg

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
#include "lungreg/geometry.hpp"

#include <stdexcept>

namespace lungreg {

WorldGrid::WorldGrid(Dims dims, Vec3 spacing, Vec3 origin)
    : dims_(dims), spacing_(spacing), origin_(origin) {
    for (int a = 0; a < 3; ++a) {
        if (dims_[a] < 1) {
            throw std::invalid_argument("WorldGrid: dims must be >= 1 on every axis");
        }
        if (!(spacing_[a] > 0.0) || !std::isfinite(spacing_[a])) {
            throw std::invalid_argument("WorldGrid: spacing must be positive and finite");
        }
        if (!std::isfinite(origin_[a])) {
            throw std::invalid_argument("WorldGrid: origin must be finite");
        }
    }
}

bool WorldGrid::contains(const Vec3 &p, double tol_voxels) const {
    const Vec3 q = to_continuous_index(p);
    for (int a = 0; a < 3; ++a) {
        if (!(q[a] >= -tol_voxels && q[a] <= static_cast<double>(dims_[a] - 1) + tol_voxels)) {
            return false;
        }
    }
    return true;
}

std::ostream &operator<<(std::ostream &os, const WorldGrid &g) {
    return os << "WorldGrid(dims=" << g.dim(0) << "x" << g.dim(1) << "x" << g.dim(2)
              << ", spacing=" << g.spacing() << ", origin=" << g.origin() << ")";
}

} // namespace lungreg

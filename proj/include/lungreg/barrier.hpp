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

#include <cmath>
#include <limits>
#include <stdexcept>

namespace lungreg {

/// Volume-change penalty (z-1)^2/z for z > 0 and +inf otherwise. Only for
/// reporting: it is unusable for gradient descent from infeasible states.
inline double psi(double z) {
    if (z > 0.0) return (z - 1.0) * (z - 1.0) / z;
    return std::numeric_limits<double>::infinity();
}

/// Parametric log-barrier extension: -(1/t) log z above z = 1/t^2, linear
/// continuation below it.
inline double psi_barrier_ext(double z, double t) {
    if (!(t > 0.0)) throw std::invalid_argument("psi_barrier_ext: t must be > 0");
    const double knee = 1.0 / (t * t);
    if (z >= knee) return -std::log(z) / t;
    return -t * z - std::log(knee) / t + 1.0 / t;
}

struct BarrierValue {
    double value;
    double derivative;
};

/// Symmetric volume-change penalty with a linear barrier below z = t:
/// (z-1)^2/z for z >= t, (1 - 1/t^2) z + 2(1-t)/t otherwise. C^1 at z = t.
inline BarrierValue psi_t(double z, double t) {
    if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("psi_t: t must lie in (0, 1]");
    if (z >= t) {
        return {(z - 1.0) * (z - 1.0) / z, 1.0 - 1.0 / (z * z)};
    }
    const double slope = 1.0 - 1.0 / (t * t);
    return {slope * z + 2.0 * (1.0 - t) / t, slope};
}

} // namespace lungreg

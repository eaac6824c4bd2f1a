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
#include <cmath>
#include <cstddef>

#include "lungreg/geometry.hpp"
#include "lungreg/volume.hpp"

namespace lungreg {

/// The eight voxels and weights used to interpolate at a world point, with
/// clamp-to-edge behaviour outside the grid. Derivative weights are with
/// respect to the world point and are zero along axes where the point was
/// clamped.
struct TrilinearStencil {
    std::array<std::size_t, 8> index{};
    std::array<double, 8> weight{};
    std::array<Vec3, 8> dweight{};
    bool inside = true;

    template <class T>
    T apply(const T *values) const {
        T acc = values[index[0]] * weight[0];
        for (int c = 1; c < 8; ++c) acc += values[index[c]] * weight[c];
        return acc;
    }
};

namespace detail {

struct AxisInterp {
    std::int64_t i0 = 0;
    std::int64_t i1 = 0;
    double w0 = 1.0;
    double w1 = 0.0;
    double dw = 0.0; // d w1 / d p (mm^-1); d w0 / d p = -dw
    bool clamped = false;
};

inline AxisInterp axis_interp(double p, double origin, double spacing, std::int64_t n) {
    AxisInterp r;
    if (n == 1) {
        r.clamped = !(p == origin);
        return r;
    }
    double q = (p - origin) / spacing;
    // Round-off from the world/index round trip must not turn a node hit into
    // a blend with its neighbour.
    if (const double nearest = std::round(q); std::abs(q - nearest) < 1e-9) q = nearest;
    const double last = static_cast<double>(n - 1);
    if (!(q >= 0.0)) {
        q = 0.0;
        r.clamped = true;
    } else if (q > last) {
        q = last;
        r.clamped = true;
    }
    std::int64_t i0 = static_cast<std::int64_t>(std::floor(q));
    if (i0 > n - 2) i0 = n - 2;
    const double f = q - static_cast<double>(i0);
    r.i0 = i0;
    r.i1 = i0 + 1;
    r.w0 = 1.0 - f;
    r.w1 = f;
    r.dw = r.clamped ? 0.0 : 1.0 / spacing;
    return r;
}

} // namespace detail

inline TrilinearStencil make_stencil(const WorldGrid &grid, const Vec3 &p,
                                     bool with_derivative = false) {
    const auto &d = grid.dims();
    const auto ax = detail::axis_interp(p.x, grid.origin().x, grid.spacing().x, d[0]);
    const auto ay = detail::axis_interp(p.y, grid.origin().y, grid.spacing().y, d[1]);
    const auto az = detail::axis_interp(p.z, grid.origin().z, grid.spacing().z, d[2]);

    TrilinearStencil s;
    s.inside = !(ax.clamped || ay.clamped || az.clamped);
    const std::int64_t xs[2] = {ax.i0, ax.i1};
    const std::int64_t ys[2] = {ay.i0, ay.i1};
    const std::int64_t zs[2] = {az.i0, az.i1};
    const double wx[2] = {ax.w0, ax.w1};
    const double wy[2] = {ay.w0, ay.w1};
    const double wz[2] = {az.w0, az.w1};
    const double dx[2] = {-ax.dw, ax.dw};
    const double dy[2] = {-ay.dw, ay.dw};
    const double dz[2] = {-az.dw, az.dw};
    int c = 0;
    for (int kz = 0; kz < 2; ++kz) {
        for (int ky = 0; ky < 2; ++ky) {
            for (int kx = 0; kx < 2; ++kx, ++c) {
                s.index[c] = grid.index(xs[kx], ys[ky], zs[kz]);
                s.weight[c] = wx[kx] * wy[ky] * wz[kz];
                if (with_derivative) {
                    s.dweight[c] = {dx[kx] * wy[ky] * wz[kz], wx[kx] * dy[ky] * wz[kz],
                                    wx[kx] * wy[ky] * dz[kz]};
                }
            }
        }
    }
    return s;
}

double sample_trilinear(const ScalarVolume &vol, const Vec3 &p);
// Also returns the spatial derivative d/dp (mm^-1 units of the volume).
double sample_trilinear(const ScalarVolume &vol, const Vec3 &p, Vec3 &gradient);

Vec3 sample_trilinear(const DisplacementField &u, const Vec3 &p);
// jacobian(r, c) = d u_r / d p_c.
Vec3 sample_trilinear(const DisplacementField &u, const Vec3 &p, Mat3 &jacobian);

} // namespace lungreg

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
#include <cstdint>
#include <ostream>

namespace lungreg {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr double operator[](int a) const { return a == 0 ? x : (a == 1 ? y : z); }
    constexpr double &operator[](int a) { return a == 0 ? x : (a == 1 ? y : z); }

    constexpr Vec3 &operator+=(const Vec3 &o) { x += o.x; y += o.y; z += o.z; return *this; }
    constexpr Vec3 &operator-=(const Vec3 &o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    constexpr Vec3 &operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    friend constexpr Vec3 operator+(Vec3 a, const Vec3 &b) { return a += b; }
    friend constexpr Vec3 operator-(Vec3 a, const Vec3 &b) { return a -= b; }
    friend constexpr Vec3 operator-(const Vec3 &a) { return {-a.x, -a.y, -a.z}; }
    friend constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
    friend constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
    friend constexpr bool operator==(const Vec3 &, const Vec3 &) = default;

    friend std::ostream &operator<<(std::ostream &os, const Vec3 &v) {
        return os << '(' << v.x << ", " << v.y << ", " << v.z << ')';
    }
};

constexpr double dot(const Vec3 &a, const Vec3 &b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Vec3 &a) { return std::sqrt(dot(a, a)); }
inline bool is_finite(const Vec3 &a) {
    return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

// Row-major 3x3 matrix, m[row][col].
struct Mat3 {
    std::array<std::array<double, 3>, 3> m{};

    static constexpr Mat3 identity() {
        Mat3 r;
        r.m[0][0] = r.m[1][1] = r.m[2][2] = 1.0;
        return r;
    }
    constexpr double operator()(int r, int c) const { return m[r][c]; }
    constexpr double &operator()(int r, int c) { return m[r][c]; }
};

constexpr double determinant(const Mat3 &a) {
    return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
         - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
         + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}

// Cofactor matrix: d det(A) / d A(r,c) = cofactor(r,c).
constexpr Mat3 cofactor(const Mat3 &a) {
    Mat3 c;
    c(0, 0) = a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1);
    c(0, 1) = a(1, 2) * a(2, 0) - a(1, 0) * a(2, 2);
    c(0, 2) = a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0);
    c(1, 0) = a(0, 2) * a(2, 1) - a(0, 1) * a(2, 2);
    c(1, 1) = a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0);
    c(1, 2) = a(0, 1) * a(2, 0) - a(0, 0) * a(2, 1);
    c(2, 0) = a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1);
    c(2, 1) = a(0, 2) * a(1, 0) - a(0, 0) * a(1, 2);
    c(2, 2) = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    return c;
}

using Dims = std::array<std::int64_t, 3>;

/// Axis-aligned voxel grid in world millimeters. Voxel (i,j,k) has its center
/// at origin + (i,j,k) * spacing; data is stored with x fastest.
class WorldGrid {
public:
    WorldGrid() = default;
    WorldGrid(Dims dims, Vec3 spacing, Vec3 origin = {});

    const Dims &dims() const { return dims_; }
    std::int64_t dim(int axis) const { return dims_[axis]; }
    const Vec3 &spacing() const { return spacing_; }
    const Vec3 &origin() const { return origin_; }

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]);
    }
    double voxel_volume() const { return spacing_.x * spacing_.y * spacing_.z; }

    std::size_t index(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return static_cast<std::size_t>(i + dims_[0] * (j + dims_[1] * k));
    }
    std::size_t stride(int axis) const {
        return axis == 0 ? 1 : (axis == 1 ? static_cast<std::size_t>(dims_[0])
                                          : static_cast<std::size_t>(dims_[0] * dims_[1]));
    }

    Vec3 world(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return {origin_.x + static_cast<double>(i) * spacing_.x,
                origin_.y + static_cast<double>(j) * spacing_.y,
                origin_.z + static_cast<double>(k) * spacing_.z};
    }
    Vec3 to_continuous_index(const Vec3 &p) const {
        return {(p.x - origin_.x) / spacing_.x, (p.y - origin_.y) / spacing_.y,
                (p.z - origin_.z) / spacing_.z};
    }
    Vec3 from_continuous_index(const Vec3 &q) const {
        return {origin_.x + q.x * spacing_.x, origin_.y + q.y * spacing_.y,
                origin_.z + q.z * spacing_.z};
    }
    // World position of the last voxel center.
    Vec3 extent_max() const { return world(dims_[0] - 1, dims_[1] - 1, dims_[2] - 1); }

    // True when p lies within the hull of voxel centers (tolerance in voxels).
    bool contains(const Vec3 &p, double tol_voxels = 1e-9) const;

    friend bool operator==(const WorldGrid &, const WorldGrid &) = default;

private:
    Dims dims_{1, 1, 1};
    Vec3 spacing_{1.0, 1.0, 1.0};
    Vec3 origin_{};
};

std::ostream &operator<<(std::ostream &os, const WorldGrid &g);

} // namespace lungreg

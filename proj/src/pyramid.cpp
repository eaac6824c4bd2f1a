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
#include "lungreg/pyramid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lungreg {

namespace {

std::array<double, 2 * kPyramidKernelRadius + 1> gaussian_kernel() {
    std::array<double, 2 * kPyramidKernelRadius + 1> w{};
    double total = 0.0;
    for (int i = -kPyramidKernelRadius; i <= kPyramidKernelRadius; ++i) {
        const double v = std::exp(-0.5 * i * i / (kPyramidSigmaVoxels * kPyramidSigmaVoxels));
        w[i + kPyramidKernelRadius] = v;
        total += v;
    }
    for (double &v : w) v /= total;
    return w;
}

// Smooth along one axis and keep even indices along it. Input of odd length
// is implicitly padded by replicating its last sample.
std::vector<double> smooth_decimate_axis(const std::vector<double> &in, const Dims &dims, int axis,
                                         Dims &out_dims) {
    static const auto kernel = gaussian_kernel();
    const std::int64_t n = dims[axis];
    const std::int64_t padded = n + (n % 2);
    const std::int64_t n_out = padded / 2;
    out_dims = dims;
    out_dims[axis] = n_out;

    const std::int64_t in_stride =
        axis == 0 ? 1 : (axis == 1 ? dims[0] : dims[0] * dims[1]);
    const std::int64_t out_stride =
        axis == 0 ? 1 : (axis == 1 ? out_dims[0] : out_dims[0] * out_dims[1]);

    std::vector<double> out(static_cast<std::size_t>(out_dims[0] * out_dims[1] * out_dims[2]));
    // Iterate over all lines along `axis`.
    const int a1 = axis == 0 ? 1 : 0;
    const int a2 = axis == 2 ? 1 : 2;
    const std::int64_t in_s1 = a1 == 0 ? 1 : dims[0];
    const std::int64_t in_s2 = a2 == 1 ? dims[0] : dims[0] * dims[1];
    const std::int64_t out_s1 = a1 == 0 ? 1 : out_dims[0];
    const std::int64_t out_s2 = a2 == 1 ? out_dims[0] : out_dims[0] * out_dims[1];

    for (std::int64_t b = 0; b < dims[a2]; ++b) {
        for (std::int64_t a = 0; a < dims[a1]; ++a) {
            const double *line = in.data() + a * in_s1 + b * in_s2;
            double *dst = out.data() + a * out_s1 + b * out_s2;
            for (std::int64_t o = 0; o < n_out; ++o) {
                const std::int64_t centre = 2 * o;
                double acc = 0.0;
                for (int t = -kPyramidKernelRadius; t <= kPyramidKernelRadius; ++t) {
                    // Clamp into the padded range, then map the pad sample to
                    // the last real sample.
                    std::int64_t idx = std::clamp<std::int64_t>(centre + t, 0, padded - 1);
                    idx = std::min(idx, n - 1);
                    acc += kernel[t + kPyramidKernelRadius] * line[idx * in_stride];
                }
                dst[o * out_stride] = acc;
            }
        }
    }
    return out;
}

} // namespace

WorldGrid downsampled_grid(const WorldGrid &grid) {
    Dims d = grid.dims();
    for (auto &v : d) v = (v + (v % 2)) / 2;
    return WorldGrid(d, grid.spacing() * 2.0, grid.origin());
}

ScalarVolume downsample_gaussian(const ScalarVolume &vol) {
    std::vector<double> cur(vol.data().begin(), vol.data().end());
    Dims dims = vol.grid().dims();
    for (int axis = 0; axis < 3; ++axis) {
        Dims next{};
        cur = smooth_decimate_axis(cur, dims, axis, next);
        dims = next;
    }
    return ScalarVolume(downsampled_grid(vol.grid()), std::move(cur));
}

ChannelVolume downsample_gaussian(const ChannelVolume &vol) {
    const WorldGrid g = downsampled_grid(vol.grid());
    ChannelVolume out(g, vol.channels());
    for (int c = 0; c < vol.channels(); ++c) {
        const ScalarVolume d = downsample_gaussian(vol.channel_volume(c));
        std::copy(d.data().begin(), d.data().end(), out.channel(c).begin());
    }
    return out;
}

std::vector<WorldGrid> pyramid_grids(const WorldGrid &grid, int levels) {
    if (levels < 1) {
        throw std::invalid_argument("pyramid: level count must be >= 1");
    }
    std::vector<WorldGrid> grids{grid};
    for (int l = 1; l < levels; ++l) grids.push_back(downsampled_grid(grids.back()));
    for (int a = 0; a < 3; ++a) {
        if (levels > 1 && grids.back().dim(a) < 4) {
            throw std::invalid_argument("pyramid: " + std::to_string(levels) +
                                        " levels would shrink axis " + std::to_string(a) +
                                        " below 4 voxels");
        }
    }
    return grids;
}

std::vector<ScalarVolume> build_pyramid(const ScalarVolume &vol, int levels) {
    pyramid_grids(vol.grid(), levels);
    std::vector<ScalarVolume> out{vol};
    for (int l = 1; l < levels; ++l) out.push_back(downsample_gaussian(out.back()));
    return out;
}

std::vector<ChannelVolume> build_pyramid(const ChannelVolume &vol, int levels) {
    pyramid_grids(vol.grid(), levels);
    std::vector<ChannelVolume> out{vol};
    for (int l = 1; l < levels; ++l) out.push_back(downsample_gaussian(out.back()));
    return out;
}

} // namespace lungreg

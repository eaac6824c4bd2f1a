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
#include "lungreg/field_ops.hpp"

#include <stdexcept>

#include "lungreg/interpolation.hpp"

namespace lungreg {

namespace {

template <class Fn>
void for_each_voxel(const WorldGrid &g, Fn &&fn) {
    const auto &d = g.dims();
    std::size_t n = 0;
    for (std::int64_t k = 0; k < d[2]; ++k) {
        for (std::int64_t j = 0; j < d[1]; ++j) {
            for (std::int64_t i = 0; i < d[0]; ++i, ++n) fn(n, g.world(i, j, k));
        }
    }
}

} // namespace

ScalarVolume warp_image(const ScalarVolume &moving, const DisplacementField &u) {
    ScalarVolume out(u.grid());
    const double *m = moving.data().data();
    for_each_voxel(u.grid(), [&](std::size_t n, const Vec3 &x) {
        out[n] = make_stencil(moving.grid(), x + u[n]).apply(m);
    });
    return out;
}

ScalarVolume warp_image(const ScalarVolume &moving, const DisplacementField &u,
                        std::vector<Vec3> &d_warped_du) {
    ScalarVolume out(u.grid());
    d_warped_du.assign(u.size(), Vec3{});
    const double *m = moving.data().data();
    for_each_voxel(u.grid(), [&](std::size_t n, const Vec3 &x) {
        const auto s = make_stencil(moving.grid(), x + u[n], true);
        double v = 0.0;
        Vec3 g{};
        for (int c = 0; c < 8; ++c) {
            const double mv = m[s.index[c]];
            v += mv * s.weight[c];
            g += s.dweight[c] * mv;
        }
        out[n] = v;
        d_warped_du[n] = g;
    });
    return out;
}

ChannelVolume warp_channels(const ChannelVolume &channels, const DisplacementField &u) {
    ChannelVolume out(u.grid(), channels.channels());
    const int k = channels.channels();
    for_each_voxel(u.grid(), [&](std::size_t n, const Vec3 &x) {
        const auto s = make_stencil(channels.grid(), x + u[n]);
        for (int c = 0; c < k; ++c) out(c, n) = s.apply(channels.channel(c).data());
    });
    return out;
}

ChannelVolume warp_onehot_linear(const LabelVolume &mask, const DisplacementField &u) {
    ChannelVolume out(u.grid(), mask.label_count());
    const auto labels = mask.data();
    for_each_voxel(u.grid(), [&](std::size_t n, const Vec3 &x) {
        const auto s = make_stencil(mask.grid(), x + u[n]);
        for (int c = 0; c < 8; ++c) {
            const int l = labels[s.index[c]];
            if (l > 0) out(l - 1, n) += s.weight[c];
        }
    });
    return out;
}

LabelVolume warp_labels_argmax(const LabelVolume &mask, const DisplacementField &u) {
    const ChannelVolume soft = warp_onehot_linear(mask, u);
    LabelVolume out(u.grid(), mask.label_count());
    for (std::size_t n = 0; n < soft.voxel_count(); ++n) {
        double fg = 0.0;
        double best = -1.0;
        int best_label = 0;
        for (int c = 0; c < soft.channels(); ++c) {
            const double w = soft(c, n);
            fg += w;
            if (w > best) {
                best = w;
                best_label = c + 1;
            }
        }
        out.set(n, (1.0 - fg) >= best ? 0 : best_label);
    }
    return out;
}

DisplacementField compose(const DisplacementField &u_prev, const DisplacementField &u_new) {
    if (!(u_prev.grid() == u_new.grid())) {
        throw std::invalid_argument("compose: fields must share a grid");
    }
    DisplacementField out(u_new.grid());
    const Vec3 *prev = u_prev.data().data();
    for_each_voxel(u_new.grid(), [&](std::size_t n, const Vec3 &x) {
        const Vec3 y_new = x + u_new[n];
        out[n] = u_new[n] + make_stencil(u_prev.grid(), y_new).apply(prev);
    });
    return out;
}

DisplacementField upsample_field(const DisplacementField &u, const WorldGrid &target) {
    DisplacementField out(target);
    const Vec3 *src = u.data().data();
    for_each_voxel(target, [&](std::size_t n, const Vec3 &x) {
        out[n] = make_stencil(u.grid(), x).apply(src);
    });
    return out;
}

TransformedPoints transform_keypoints(const DisplacementField &u, const std::vector<Vec3> &points) {
    TransformedPoints r;
    r.points.reserve(points.size());
    for (const Vec3 &p : points) {
        if (!u.grid().contains(p)) ++r.outside_count;
        r.points.push_back(p + sample_trilinear(u, p));
    }
    return r;
}

} // namespace lungreg

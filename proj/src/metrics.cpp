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
#include "lungreg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lungreg/field_ops.hpp"
#include "lungreg/interpolation.hpp"
#include "lungreg/losses.hpp"

namespace lungreg {

namespace {

template <class Inside>
SurfacePointSet surface_of(const WorldGrid &g, Inside inside) {
    SurfacePointSet s;
    const auto &d = g.dims();
    for (std::int64_t k = 0; k < d[2]; ++k) {
        for (std::int64_t j = 0; j < d[1]; ++j) {
            for (std::int64_t i = 0; i < d[0]; ++i) {
                if (!inside(i, j, k)) continue;
                const bool boundary = i == 0 || j == 0 || k == 0 || i == d[0] - 1 ||
                                      j == d[1] - 1 || k == d[2] - 1 || !inside(i - 1, j, k) ||
                                      !inside(i + 1, j, k) || !inside(i, j - 1, k) ||
                                      !inside(i, j + 1, k) || !inside(i, j, k - 1) ||
                                      !inside(i, j, k + 1);
                if (boundary) s.points.push_back(g.world(i, j, k));
            }
        }
    }
    return s;
}

double squared(const Vec3 &a, const Vec3 &b) {
    const Vec3 d = a - b;
    return dot(d, d);
}

// Nearest distance from each point of `from` to the set `to`.
std::vector<double> nearest_distances(const std::vector<Vec3> &from, const std::vector<Vec3> &to) {
    std::vector<double> out(from.size());
    for (std::size_t i = 0; i < from.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (const Vec3 &q : to) best = std::min(best, squared(from[i], q));
        out[i] = std::sqrt(best);
    }
    return out;
}

void require_nonempty(const SurfacePointSet &xs, const SurfacePointSet &ys, const char *who) {
    if (xs.points.empty() || ys.points.empty()) {
        throw std::invalid_argument(std::string(who) + ": surface point sets must be non-empty");
    }
}

} // namespace

double dice(const ScalarVolume &x, const ScalarVolume &y) {
    if (!(x.grid() == y.grid())) throw std::invalid_argument("dice: grids differ");
    std::size_t nx = 0, ny = 0, both = 0;
    for (std::size_t n = 0; n < x.size(); ++n) {
        const bool a = x[n] != 0.0;
        const bool b = y[n] != 0.0;
        nx += a;
        ny += b;
        both += a && b;
    }
    if (nx + ny == 0) return 1.0;
    return 2.0 * static_cast<double>(both) / static_cast<double>(nx + ny);
}

double dice(const LabelVolume &x, const LabelVolume &y, int label) {
    if (!(x.grid() == y.grid())) throw std::invalid_argument("dice: grids differ");
    std::size_t nx = 0, ny = 0, both = 0;
    for (std::size_t n = 0; n < x.size(); ++n) {
        const bool a = x[n] == label;
        const bool b = y[n] == label;
        nx += a;
        ny += b;
        both += a && b;
    }
    if (nx + ny == 0) return 1.0;
    return 2.0 * static_cast<double>(both) / static_cast<double>(nx + ny);
}

SurfacePointSet extract_surface(const ScalarVolume &channel) {
    const WorldGrid &g = channel.grid();
    return surface_of(g, [&](std::int64_t i, std::int64_t j, std::int64_t k) {
        return channel.at(i, j, k) != 0.0;
    });
}

SurfacePointSet extract_surface(const LabelVolume &labels, int label) {
    const WorldGrid &g = labels.grid();
    return surface_of(g, [&](std::int64_t i, std::int64_t j, std::int64_t k) {
        return labels[g.index(i, j, k)] == label;
    });
}

double asd(const SurfacePointSet &xs, const SurfacePointSet &ys) {
    require_nonempty(xs, ys, "asd");
    double total = 0.0;
    for (double d : nearest_distances(xs.points, ys.points)) total += d;
    for (double d : nearest_distances(ys.points, xs.points)) total += d;
    return total / static_cast<double>(xs.points.size() + ys.points.size());
}

double hausdorff(const SurfacePointSet &xs, const SurfacePointSet &ys) {
    require_nonempty(xs, ys, "hausdorff");
    double h = 0.0;
    for (double d : nearest_distances(xs.points, ys.points)) h = std::max(h, d);
    for (double d : nearest_distances(ys.points, xs.points)) h = std::max(h, d);
    return h;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("percentile: empty input");
    std::sort(values.begin(), values.end());
    const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double f = pos - static_cast<double>(lo);
    return values[lo] + (values[hi] - values[lo]) * f;
}

DistanceStats distance_stats(const std::vector<double> &values) {
    if (values.empty()) throw std::invalid_argument("distance_stats: empty input");
    DistanceStats s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size()));
    s.p25 = percentile(values, 25.0);
    s.p50 = percentile(values, 50.0);
    s.p75 = percentile(values, 75.0);
    s.max = *std::max_element(values.begin(), values.end());
    return s;
}

std::vector<double> tre_distances(const KeypointPairSet &pairs, const DisplacementField &u) {
    std::vector<double> d;
    d.reserve(pairs.size());
    for (const KeypointPair &kp : pairs.pairs) {
        const Vec3 y = kp.fixed + sample_trilinear(u, kp.fixed);
        d.push_back(norm(kp.moving - y));
    }
    return d;
}

DistanceStats tre(const KeypointPairSet &pairs, const DisplacementField &u) {
    if (pairs.empty()) throw std::invalid_argument("tre: keypoint set is empty");
    return distance_stats(tre_distances(pairs, u));
}

double folding_bin_edge(int b) {
    const double lo = std::log(kFoldingHistogramMin);
    const double hi = std::log(kFoldingHistogramMax);
    return std::exp(lo + (hi - lo) * static_cast<double>(b) / kFoldingHistogramBins);
}

FoldingStats folding_stats(const ScalarVolume &det, const ScalarVolume *mask) {
    if (mask && !(mask->grid() == det.grid())) {
        throw std::invalid_argument("folding_stats: mask grid differs");
    }
    FoldingStats s;
    s.min = std::numeric_limits<double>::infinity();
    s.max = -std::numeric_limits<double>::infinity();
    const double lo = std::log(kFoldingHistogramMin);
    const double hi = std::log(kFoldingHistogramMax);
    for (std::size_t n = 0; n < det.size(); ++n) {
        if (mask && (*mask)[n] == 0.0) continue;
        const double v = det[n];
        ++s.voxels;
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
        if (v <= 0.0) {
            ++s.folded;
            ++s.underflow;
            continue;
        }
        const double pos = (std::log(v) - lo) / (hi - lo) * kFoldingHistogramBins;
        const int b = std::clamp(static_cast<int>(std::floor(pos)), 0, kFoldingHistogramBins - 1);
        ++s.histogram[static_cast<std::size_t>(b)];
    }
    if (s.voxels == 0) {
        s.min = s.max = 0.0;
        return s;
    }
    s.fraction = static_cast<double>(s.folded) / static_cast<double>(s.voxels);
    return s;
}

double dice30(std::span<const double> per_case_dice) {
    if (per_case_dice.empty()) throw std::invalid_argument("dice30: no cases");
    std::vector<double> v(per_case_dice.begin(), per_case_dice.end());
    std::sort(v.begin(), v.end());
    const auto count = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(0.3 * static_cast<double>(v.size()) - 1e-12)));
    double sum = 0.0;
    for (std::size_t i = 0; i < count; ++i) sum += v[i];
    return sum / static_cast<double>(count);
}

MetricsReport evaluate_registration(const DisplacementField &u, const LabelVolume *fixed_mask,
                                    const LabelVolume *moving_mask,
                                    const KeypointPairSet *pairs) {
    MetricsReport r;
    if (fixed_mask && moving_mask) {
        if (fixed_mask->label_count() != moving_mask->label_count()) {
            throw std::invalid_argument("evaluate: fixed and moving masks have different label counts");
        }
        if (!(fixed_mask->grid() == u.grid())) {
            throw std::invalid_argument("evaluate: fixed mask grid differs from field grid");
        }
        const LabelVolume warped = warp_labels_argmax(*moving_mask, u);
        double dsum = 0.0, asum = 0.0, hsum = 0.0;
        int surfaces = 0;
        for (int l = 1; l <= fixed_mask->label_count(); ++l) {
            LabelMetrics m;
            m.label = l;
            m.dice = dice(warped, *fixed_mask, l);
            const SurfacePointSet xs = extract_surface(warped, l);
            const SurfacePointSet ys = extract_surface(*fixed_mask, l);
            if (!xs.points.empty() && !ys.points.empty()) {
                m.asd = asd(xs, ys);
                m.hausdorff = hausdorff(xs, ys);
                asum += *m.asd;
                hsum += *m.hausdorff;
                ++surfaces;
            }
            dsum += m.dice;
            r.labels.push_back(m);
        }
        if (!r.labels.empty()) r.mean_dice = dsum / static_cast<double>(r.labels.size());
        if (surfaces > 0) {
            r.mean_asd = asum / surfaces;
            r.mean_hausdorff = hsum / surfaces;
        }
    }
    if (pairs && !pairs->empty()) {
        r.tre_before = tre(*pairs, zero_field(u.grid()));
        r.tre_after = tre(*pairs, u);
    }
    r.folding = folding_stats(jacobian_det_field(u));
    return r;
}

} // namespace lungreg

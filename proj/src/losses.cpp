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
#include "lungreg/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "lungreg/barrier.hpp"
#include "lungreg/field_ops.hpp"
#include "lungreg/interpolation.hpp"

namespace lungreg {

namespace {

// First derivative along one axis at index i:
//   c * (v[n + plus * stride] - v[n + minus * stride])
// central in the interior, one-sided at the border, zero on singleton axes.
struct DiffStencil {
    std::int64_t plus = 0;
    std::int64_t minus = 0;
    double c = 0.0;
};

std::vector<DiffStencil> diff_stencils(std::int64_t n, double h) {
    std::vector<DiffStencil> s(static_cast<std::size_t>(n));
    if (n == 1) return s;
    for (std::int64_t i = 0; i < n; ++i) {
        if (i == 0) {
            s[i] = {1, 0, 1.0 / h};
        } else if (i == n - 1) {
            s[i] = {0, -1, 1.0 / h};
        } else {
            s[i] = {1, -1, 0.5 / h};
        }
    }
    return s;
}

struct GridStencils {
    std::array<std::vector<DiffStencil>, 3> axis;
    std::array<std::int64_t, 3> stride{};

    explicit GridStencils(const WorldGrid &g) {
        for (int a = 0; a < 3; ++a) {
            axis[a] = diff_stencils(g.dim(a), g.spacing()[a]);
            stride[a] = static_cast<std::int64_t>(g.stride(a));
        }
    }
};

template <class T>
T derivative(const T *v, std::size_t n, const DiffStencil &s, std::int64_t stride) {
    const std::int64_t base = static_cast<std::int64_t>(n);
    return (v[base + s.plus * stride] - v[base + s.minus * stride]) * s.c;
}

template <class T>
void scatter_derivative(T *g, std::size_t n, const DiffStencil &s, std::int64_t stride,
                        const T &value) {
    const std::int64_t base = static_cast<std::int64_t>(n);
    g[base + s.plus * stride] += value * s.c;
    g[base + s.minus * stride] -= value * s.c;
}

// Jacobian of u at voxel (i,j,k): J(r,a) = d u_r / d x_a.
Mat3 field_jacobian(const Vec3 *u, std::size_t n, const GridStencils &gs, std::int64_t i,
                    std::int64_t j, std::int64_t k) {
    const std::int64_t idx[3] = {i, j, k};
    Mat3 J;
    for (int a = 0; a < 3; ++a) {
        const Vec3 d = derivative(u, n, gs.axis[a][idx[a]], gs.stride[a]);
        J(0, a) = d.x;
        J(1, a) = d.y;
        J(2, a) = d.z;
    }
    return J;
}

void check_grad_size(std::size_t have, std::size_t want, const char *who) {
    if (have != 0 && have != want) {
        throw std::invalid_argument(std::string(who) + ": gradient buffer size mismatch");
    }
}

} // namespace

void LossWeights::validate() const {
    const double ws[] = {alpha, beta, gamma, delta};
    for (double w : ws) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw std::invalid_argument("LossWeights: weights must be finite and >= 0");
        }
    }
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw std::invalid_argument("LossWeights: epsilon must be > 0");
    }
    if (!(t > 0.0 && t <= 1.0)) {
        throw std::invalid_argument("LossWeights: t must lie in (0, 1]");
    }
}

DomainMask domain_from_labels(const LabelVolume &mask) {
    DomainMask d(mask.size());
    for (std::size_t n = 0; n < mask.size(); ++n) d[n] = mask[n] > 0 ? 1 : 0;
    return d;
}

DomainMask domain_from_channels(const ChannelVolume &mask) {
    DomainMask d(mask.voxel_count(), 0);
    std::vector<double> values;
    for (std::size_t n = 0; n < mask.voxel_count(); ++n) {
        values.clear();
        for (int c = 0; c < mask.channels(); ++c) values.push_back(mask(c, n));
        std::sort(values.begin(), values.end());
        double s = 0.0;
        for (double v : values) s += v;
        d[n] = s >= 0.5 ? 1 : 0;
    }
    return d;
}

// --------------------------------------------------------------------------- NGF

NgfDistance::NgfDistance(const ScalarVolume &fixed, DomainMask domain, double epsilon)
    : grid_(fixed.grid()), epsilon_(epsilon), domain_(std::move(domain)) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("ngf_distance: epsilon must be > 0");
    if (!domain_.empty() && domain_.size() != grid_.voxel_count()) {
        throw std::invalid_argument("ngf_distance: domain mask size mismatch");
    }
    const GridStencils gs(grid_);
    const double *f = fixed.data().data();
    fixed_gradient_.resize(grid_.voxel_count());
    domain_size_ = 0;
    std::size_t n = 0;
    for (std::int64_t k = 0; k < grid_.dim(2); ++k) {
        for (std::int64_t j = 0; j < grid_.dim(1); ++j) {
            for (std::int64_t i = 0; i < grid_.dim(0); ++i, ++n) {
                fixed_gradient_[n] = {derivative(f, n, gs.axis[0][i], gs.stride[0]),
                                      derivative(f, n, gs.axis[1][j], gs.stride[1]),
                                      derivative(f, n, gs.axis[2][k], gs.stride[2])};
                if (domain_.empty() || domain_[n]) ++domain_size_;
            }
        }
    }
}

double NgfDistance::accumulate(const ScalarVolume &warped, std::span<double> grad_warped,
                               double scale) const {
    if (!(warped.grid() == grid_)) {
        throw std::invalid_argument("ngf_distance: fixed and warped images must share a grid");
    }
    check_grad_size(grad_warped.size(), grid_.voxel_count(), "ngf_distance");
    const bool want_grad = !grad_warped.empty();
    const GridStencils gs(grid_);
    const double *m = warped.data().data();
    double *g = grad_warped.data();
    const double e3 = 3.0 * epsilon_ * epsilon_;
    const double vol = grid_.voxel_volume();
    const double gscale = vol * scale;

    double total = 0.0;
    std::size_t n = 0;
    for (std::int64_t k = 0; k < grid_.dim(2); ++k) {
        double slice = 0.0;
        for (std::int64_t j = 0; j < grid_.dim(1); ++j) {
            for (std::int64_t i = 0; i < grid_.dim(0); ++i, ++n) {
                if (!domain_.empty() && !domain_[n]) continue;
                const DiffStencil &sx = gs.axis[0][i];
                const DiffStencil &sy = gs.axis[1][j];
                const DiffStencil &sz = gs.axis[2][k];
                const Vec3 gm{derivative(m, n, sx, gs.stride[0]), derivative(m, n, sy, gs.stride[1]),
                              derivative(m, n, sz, gs.stride[2])};
                const Vec3 &gf = fixed_gradient_[n];
                const double a = dot(gm, gf) + e3;
                const double b = dot(gm, gm) + e3;
                const double c = dot(gf, gf) + e3;
                const double bc = b * c;
                slice += 1.0 - a * a / bc;
                if (want_grad) {
                    // d(1 - a^2/(bc)) / d gm = -(2a/(bc)) (gf - (a/b) gm)
                    const Vec3 d = (gf - gm * (a / b)) * (-2.0 * a / bc * gscale);
                    scatter_derivative(g, n, sx, gs.stride[0], d.x);
                    scatter_derivative(g, n, sy, gs.stride[1], d.y);
                    scatter_derivative(g, n, sz, gs.stride[2], d.z);
                }
            }
        }
        total += slice;
    }
    return total * vol;
}

ScalarGradient ngf_distance(const ScalarVolume &fixed, const ScalarVolume &warped,
                            const LabelVolume *lung_mask, double epsilon) {
    DomainMask domain;
    if (lung_mask) {
        if (!(lung_mask->grid() == fixed.grid())) {
            throw std::invalid_argument("ngf_distance: lung mask grid differs from fixed grid");
        }
        domain = domain_from_labels(*lung_mask);
    }
    const NgfDistance ngf(fixed, std::move(domain), epsilon);
    ScalarGradient r;
    r.grad.assign(fixed.size(), 0.0);
    r.value = ngf.accumulate(warped, r.grad);
    return r;
}

double estimate_ngf_epsilon(const ScalarVolume &image, double nu) {
    if (!(nu > 0.0)) throw std::invalid_argument("estimate_ngf_epsilon: nu must be > 0");
    const WorldGrid &g = image.grid();
    const GridStencils gs(g);
    const double *v = image.data().data();
    double total = 0.0;
    std::size_t n = 0;
    for (std::int64_t k = 0; k < g.dim(2); ++k) {
        double slice = 0.0;
        for (std::int64_t j = 0; j < g.dim(1); ++j) {
            for (std::int64_t i = 0; i < g.dim(0); ++i, ++n) {
                const Vec3 d{derivative(v, n, gs.axis[0][i], gs.stride[0]),
                             derivative(v, n, gs.axis[1][j], gs.stride[1]),
                             derivative(v, n, gs.axis[2][k], gs.stride[2])};
                slice += norm(d);
            }
        }
        total += slice;
    }
    // (nu / V) * sum |grad I| * voxel volume, with V = N * voxel volume.
    const double eps = nu * total / static_cast<double>(g.voxel_count());
    return std::max(eps, 1e-6);
}

// --------------------------------------------------------------------------- curvature

double curvature_accumulate(const DisplacementField &u, std::span<Vec3> grad, double scale) {
    const WorldGrid &g = u.grid();
    for (int a = 0; a < 3; ++a) {
        if (g.dim(a) < 3) throw std::invalid_argument("curvature: every axis needs >= 3 voxels");
    }
    check_grad_size(grad.size(), g.voxel_count(), "curvature");
    const bool want_grad = !grad.empty();
    const Vec3 *v = u.data().data();
    Vec3 *gr = grad.data();
    const double inv_h2[3] = {1.0 / (g.spacing().x * g.spacing().x),
                              1.0 / (g.spacing().y * g.spacing().y),
                              1.0 / (g.spacing().z * g.spacing().z)};
    const std::int64_t stride[3] = {1, g.dim(0), g.dim(0) * g.dim(1)};
    const double vol = g.voxel_volume();

    double total = 0.0;
    std::size_t n = 0;
    for (std::int64_t k = 0; k < g.dim(2); ++k) {
        double slice = 0.0;
        for (std::int64_t j = 0; j < g.dim(1); ++j) {
            for (std::int64_t i = 0; i < g.dim(0); ++i, ++n) {
                const std::int64_t idx[3] = {i, j, k};
                bool interior[3];
                Vec3 lap{};
                for (int a = 0; a < 3; ++a) {
                    interior[a] = idx[a] > 0 && idx[a] < g.dim(a) - 1;
                    if (interior[a]) {
                        lap += (v[n + stride[a]] - v[n] * 2.0 + v[n - stride[a]]) * inv_h2[a];
                    }
                }
                slice += dot(lap, lap);
                if (want_grad) {
                    const Vec3 r = lap * (2.0 * vol * scale);
                    for (int a = 0; a < 3; ++a) {
                        if (!interior[a]) continue;
                        const Vec3 ra = r * inv_h2[a];
                        gr[n + stride[a]] += ra;
                        gr[n - stride[a]] += ra;
                        gr[n] -= ra * 2.0;
                    }
                }
            }
        }
        total += slice;
    }
    return total * vol;
}

FieldGradient curvature(const DisplacementField &u) {
    FieldGradient r;
    r.grad.assign(u.size(), Vec3{});
    r.value = curvature_accumulate(u, r.grad, 1.0);
    return r;
}

// --------------------------------------------------------------------------- Jacobian / VCC

ScalarVolume jacobian_det_field(const DisplacementField &u) {
    const WorldGrid &g = u.grid();
    const GridStencils gs(g);
    const Vec3 *v = u.data().data();
    ScalarVolume out(g);
    std::size_t n = 0;
    for (std::int64_t k = 0; k < g.dim(2); ++k) {
        for (std::int64_t j = 0; j < g.dim(1); ++j) {
            for (std::int64_t i = 0; i < g.dim(0); ++i, ++n) {
                Mat3 A = field_jacobian(v, n, gs, i, j, k);
                A(0, 0) += 1.0;
                A(1, 1) += 1.0;
                A(2, 2) += 1.0;
                out[n] = determinant(A);
            }
        }
    }
    return out;
}

double vcc_accumulate(const DisplacementField &u, double t, std::span<Vec3> grad, double scale,
                      std::size_t *folded_voxels) {
    if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("vcc_penalty: t must lie in (0, 1]");
    const WorldGrid &g = u.grid();
    check_grad_size(grad.size(), g.voxel_count(), "vcc_penalty");
    const bool want_grad = !grad.empty();
    const GridStencils gs(g);
    const Vec3 *v = u.data().data();
    Vec3 *gr = grad.data();
    const double vol = g.voxel_volume();

    double total = 0.0;
    std::size_t folded = 0;
    std::size_t n = 0;
    for (std::int64_t k = 0; k < g.dim(2); ++k) {
        double slice = 0.0;
        for (std::int64_t j = 0; j < g.dim(1); ++j) {
            for (std::int64_t i = 0; i < g.dim(0); ++i, ++n) {
                Mat3 A = field_jacobian(v, n, gs, i, j, k);
                A(0, 0) += 1.0;
                A(1, 1) += 1.0;
                A(2, 2) += 1.0;
                const double det = determinant(A);
                if (det <= 0.0) ++folded;
                const BarrierValue p = psi_t(det, t);
                slice += p.value;
                if (want_grad) {
                    const Mat3 C = cofactor(A);
                    const double w = p.derivative * vol * scale;
                    const std::int64_t idx[3] = {i, j, k};
                    for (int a = 0; a < 3; ++a) {
                        const Vec3 d{C(0, a) * w, C(1, a) * w, C(2, a) * w};
                        scatter_derivative(gr, n, gs.axis[a][idx[a]], gs.stride[a], d);
                    }
                }
            }
        }
        total += slice;
    }
    if (folded_voxels) *folded_voxels = folded;
    return total * vol;
}

FieldGradient vcc_penalty(const DisplacementField &u, double t) {
    FieldGradient r;
    r.grad.assign(u.size(), Vec3{});
    r.value = vcc_accumulate(u, t, r.grad, 1.0);
    return r;
}

// --------------------------------------------------------------------------- mask

double mask_accumulate(const ChannelVolume &fixed_mask, const ChannelVolume &moving_mask,
                       const DisplacementField &u, std::span<Vec3> grad, double scale) {
    if (fixed_mask.channels() != moving_mask.channels()) {
        throw std::invalid_argument("mask_loss: fixed and moving masks have different label counts");
    }
    if (!(fixed_mask.grid() == u.grid())) {
        throw std::invalid_argument("mask_loss: fixed mask must share the field grid");
    }
    const WorldGrid &g = u.grid();
    check_grad_size(grad.size(), g.voxel_count(), "mask_loss");
    const bool want_grad = !grad.empty();
    const int kc = fixed_mask.channels();
    const double vol = g.voxel_volume();

    struct ChannelTerm {
        double value;
        Vec3 grad;
    };
    std::vector<ChannelTerm> terms;
    terms.reserve(static_cast<std::size_t>(kc));

    double total = 0.0;
    std::size_t n = 0;
    for (std::int64_t k = 0; k < g.dim(2); ++k) {
        double slice = 0.0;
        for (std::int64_t j = 0; j < g.dim(1); ++j) {
            for (std::int64_t i = 0; i < g.dim(0); ++i, ++n) {
                const auto s = make_stencil(moving_mask.grid(), g.world(i, j, k) + u[n], want_grad);
                terms.clear();
                for (int c = 0; c < kc; ++c) {
                    const double *ch = moving_mask.channel(c).data();
                    double w = 0.0;
                    Vec3 dw{};
                    for (int q = 0; q < 8; ++q) {
                        const double b = ch[s.index[q]];
                        w += s.weight[q] * b;
                        if (want_grad) dw += s.dweight[q] * b;
                    }
                    const double diff = w - fixed_mask(c, n);
                    terms.push_back({diff * diff, dw * diff});
                }
                // Summing in value order makes the result independent of label numbering.
                std::sort(terms.begin(), terms.end(), [](const ChannelTerm &a, const ChannelTerm &b) {
                    return std::tie(a.value, a.grad.x, a.grad.y, a.grad.z) <
                           std::tie(b.value, b.grad.x, b.grad.y, b.grad.z);
                });
                Vec3 d{};
                for (const ChannelTerm &t : terms) {
                    slice += t.value;
                    d += t.grad;
                }
                if (want_grad) grad[n] += d * (vol * scale);
            }
        }
        total += slice;
    }
    return 0.5 * total * vol;
}

FieldGradient mask_loss(const LabelVolume &fixed_mask, const LabelVolume &moving_mask,
                        const DisplacementField &u) {
    if (fixed_mask.label_count() != moving_mask.label_count()) {
        throw std::invalid_argument("mask_loss: fixed and moving masks have different label counts");
    }
    const ChannelVolume bf = ChannelVolume::one_hot(fixed_mask);
    const ChannelVolume bm = ChannelVolume::one_hot(moving_mask);
    FieldGradient r;
    r.grad.assign(u.size(), Vec3{});
    r.value = mask_accumulate(bf, bm, u, r.grad, 1.0);
    return r;
}

// --------------------------------------------------------------------------- keypoints

double keypoint_accumulate(const KeypointPairSet &pairs, const DisplacementField &u,
                           const DisplacementField *prior, std::span<Vec3> grad, double scale) {
    if (pairs.empty()) return 0.0;
    check_grad_size(grad.size(), u.size(), "keypoint_loss");
    const bool want_grad = !grad.empty();
    const double inv_k = 1.0 / static_cast<double>(pairs.size());
    const Vec3 *v = u.data().data();
    double total = 0.0;
    for (const KeypointPair &kp : pairs.pairs) {
        const auto s = make_stencil(u.grid(), kp.fixed);
        const Vec3 p = kp.fixed + s.apply(v);
        Vec3 y = p;
        Mat3 J;
        if (prior) {
            y += sample_trilinear(*prior, p, J);
        }
        const Vec3 r = y - kp.moving;
        total += dot(r, r);
        if (want_grad) {
            // d/dp of |y(p) - k_M|^2 = 2 (I + J)^T r
            Vec3 gp = r * 2.0;
            if (prior) {
                for (int a = 0; a < 3; ++a) {
                    gp[a] += 2.0 * (J(0, a) * r.x + J(1, a) * r.y + J(2, a) * r.z);
                }
            }
            gp *= inv_k * scale;
            for (int c = 0; c < 8; ++c) grad[s.index[c]] += gp * s.weight[c];
        }
    }
    return total * inv_k;
}

FieldGradient keypoint_loss(const KeypointPairSet &pairs, const DisplacementField &u,
                            const DisplacementField *prior) {
    FieldGradient r;
    r.grad.assign(u.size(), Vec3{});
    r.value = keypoint_accumulate(pairs, u, prior, r.grad, 1.0);
    return r;
}

// --------------------------------------------------------------------------- objective

namespace {

LossWeights effective_weights(const ObjectiveInputs &in, LossWeights w,
                              std::vector<std::string> &warnings) {
    w.validate();
    if (w.beta > 0.0 && (!in.fixed_mask || !in.moving_mask)) {
        warnings.emplace_back("mask weight set to 0: fixed or moving mask missing");
        w.beta = 0.0;
    }
    if (w.delta > 0.0 && (!in.keypoints || in.keypoints->empty())) {
        warnings.emplace_back("keypoint weight set to 0: no keypoints given");
        w.delta = 0.0;
    }
    return w;
}

const ScalarVolume &require(const ScalarVolume *v, const char *what) {
    if (!v) throw std::invalid_argument(std::string("Objective: missing ") + what);
    return *v;
}

} // namespace

Objective::Objective(const ObjectiveInputs &inputs, const LossWeights &weights)
    : in_(inputs), weights_(effective_weights(inputs, weights, warnings_)),
      ngf_(require(inputs.fixed, "fixed image"),
           inputs.fixed_mask ? domain_from_channels(*inputs.fixed_mask) : DomainMask{},
           weights_.epsilon) {
    require(inputs.moving, "moving image");
    if (in_.fixed_mask && !(in_.fixed_mask->grid() == in_.fixed->grid())) {
        throw std::invalid_argument("Objective: fixed mask grid differs from fixed image grid");
    }
    if (in_.fixed_mask && in_.moving_mask &&
        in_.fixed_mask->channels() != in_.moving_mask->channels()) {
        throw std::invalid_argument("Objective: fixed and moving masks have different label counts");
    }
}

LossReport Objective::evaluate(const DisplacementField &u, std::vector<Vec3> *grad) const {
    if (!(u.grid() == in_.fixed->grid())) {
        throw std::invalid_argument("Objective: field grid differs from fixed image grid");
    }
    const std::size_t nvox = u.size();
    std::span<Vec3> g;
    if (grad) {
        grad->assign(nvox, Vec3{});
        g = *grad;
    }

    LossReport rep;
    if (grad) {
        std::vector<Vec3> d_warped_du;
        const ScalarVolume warped = warp_image(*in_.moving, u, d_warped_du);
        std::vector<double> d_dist(nvox, 0.0);
        rep.distance = ngf_.accumulate(warped, d_dist);
        for (std::size_t n = 0; n < nvox; ++n) {
            if (d_dist[n] != 0.0) g[n] += d_warped_du[n] * d_dist[n];
        }
    } else {
        rep.distance = ngf_.accumulate(warp_image(*in_.moving, u), {});
    }

    const auto weighted = [&](double w) { return w > 0.0 ? g : std::span<Vec3>{}; };

    rep.curvature = curvature_accumulate(u, weighted(weights_.alpha), weights_.alpha);
    std::size_t folded = 0;
    rep.vcc = vcc_accumulate(u, weights_.t, weighted(weights_.gamma), weights_.gamma, &folded);
    rep.folding_fraction = static_cast<double>(folded) / static_cast<double>(nvox);
    if (in_.fixed_mask && in_.moving_mask) {
        rep.mask = mask_accumulate(*in_.fixed_mask, *in_.moving_mask, u, weighted(weights_.beta),
                                   weights_.beta);
    }
    if (in_.keypoints) {
        rep.keypoint = keypoint_accumulate(*in_.keypoints, u, in_.prior, weighted(weights_.delta),
                                           weights_.delta);
    }
    rep.total = rep.distance + weights_.alpha * rep.curvature + weights_.beta * rep.mask +
                weights_.gamma * rep.vcc + weights_.delta * rep.keypoint;
    return rep;
}

TotalLoss total_loss(const ScalarVolume &fixed, const ScalarVolume &moving,
                     const LabelVolume *fixed_mask, const LabelVolume *moving_mask,
                     const KeypointPairSet *keypoints, const DisplacementField &u,
                     const LossWeights &weights) {
    ChannelVolume bf;
    ChannelVolume bm;
    ObjectiveInputs in;
    in.fixed = &fixed;
    in.moving = &moving;
    if (fixed_mask) {
        bf = ChannelVolume::one_hot(*fixed_mask);
        in.fixed_mask = &bf;
    }
    if (moving_mask) {
        bm = ChannelVolume::one_hot(*moving_mask);
        in.moving_mask = &bm;
    }
    in.keypoints = keypoints;
    const Objective obj(in, weights);
    TotalLoss r;
    r.report = obj.evaluate(u, &r.grad);
    r.warnings = obj.warnings();
    return r;
}

} // namespace lungreg

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
#include "lungreg/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace lungreg {

namespace {

constexpr double kSqrtE = 1.6487212707001282;
constexpr double kPi = 3.14159265358979323846;

constexpr double kLungHU = -900.0;
constexpr double kTissueHU = 40.0;
constexpr double kLungBandMm = 3.0;      // half-width of the lung boundary transition
constexpr double kStructureBandMm = 1.5; // half-width of structure edges
constexpr double kLungFraction = 0.36;   // lung semi-axes relative to grid extent

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Generator streams derived from the phantom seed; each random quantity uses its
// own stream so generation order does not couple them.
enum class Stream : std::uint64_t { Deformation = 1, Structures, Background, Keypoints, Landmarks };

class Rng {
public:
    Rng(std::uint64_t seed, Stream s)
        : eng_(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(s)))) {}

    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    Vec3 unit_vector() {
        // Uniform on the sphere via z and azimuth.
        const double z = uniform(-1.0, 1.0);
        const double phi = uniform(0.0, 2.0 * kPi);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        return {r * std::cos(phi), r * std::sin(phi), z};
    }

private:
    std::mt19937_64 eng_;
};

// Quintic smoothstep, 0 at s <= 0 and 1 at s >= 1.
double smootherstep(double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    return s * s * s * (s * (s * 6.0 - 15.0) + 10.0);
}

struct Lung {
    Vec3 center;
    Vec3 semi;
    // Lobe boundaries along z, placed on voxel faces so the sampled label map
    // is exact across them.
    std::vector<double> lobe_planes;

    double radius(const Vec3 &p) const {
        const Vec3 d = p - center;
        return std::sqrt((d.x / semi.x) * (d.x / semi.x) + (d.y / semi.y) * (d.y / semi.y) +
                         (d.z / semi.z) * (d.z / semi.z));
    }
    // 1 inside, 0 outside, smooth band of kLungBandMm around the boundary.
    double weight(const Vec3 &p) const {
        const double h = kLungBandMm / std::min({semi.x, semi.y, semi.z});
        return smootherstep((1.0 + h - radius(p)) / (2.0 * h));
    }
    int label(const Vec3 &p, int lobes) const {
        if (lobes <= 0 || radius(p) > 1.0) return 0;
        const auto above = std::upper_bound(lobe_planes.begin(), lobe_planes.end(), p.z) - lobe_planes.begin();
        return std::clamp(1 + static_cast<int>(above), 1, lobes);
    }
};

Lung make_lung(const WorldGrid &g) {
    Lung l;
    const Vec3 lo = g.origin();
    const Vec3 hi = g.extent_max();
    l.center = (lo + hi) * 0.5;
    l.semi = (hi - lo) * kLungFraction;
    return l;
}

Lung make_lung(const WorldGrid &g, int lobes) {
    Lung l = make_lung(g);
    const double h = g.spacing().z;
    for (int b = 1; b < lobes; ++b) {
        const double z = l.center.z - l.semi.z + 2.0 * l.semi.z * b / lobes;
        l.lobe_planes.push_back(g.origin().z + (std::round((z - g.origin().z) / h - 0.5) + 0.5) * h);
    }
    return l;
}

struct Structure {
    Vec3 center;
    Mat3 axes; // rows: local unit axes
    Vec3 radii;
    double contrast = 0.0; // added on top of lung parenchyma
    double half_band = 0.0; // relative band half-width
    double reach = 0.0;     // bounding radius (mm)

    double profile(const Vec3 &p) const {
        const Vec3 d = p - center;
        if (dot(d, d) > reach * reach) return 0.0;
        double rho2 = 0.0;
        for (int a = 0; a < 3; ++a) {
            const double l = (axes(a, 0) * d.x + axes(a, 1) * d.y + axes(a, 2) * d.z) / radii[a];
            rho2 += l * l;
        }
        return smootherstep((1.0 + half_band - std::sqrt(rho2)) / (2.0 * half_band));
    }
};

Mat3 random_rotation(Rng &rng) {
    // Gram-Schmidt on two random directions.
    const Vec3 a = rng.unit_vector();
    Vec3 b = rng.unit_vector();
    b -= a * dot(a, b);
    if (norm(b) < 1e-6) b = std::abs(a.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    b -= a * dot(a, b);
    b *= 1.0 / norm(b);
    const Vec3 c{a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
    Mat3 r;
    for (int k = 0; k < 3; ++k) {
        r(0, k) = a[k];
        r(1, k) = b[k];
        r(2, k) = c[k];
    }
    return r;
}

// Uniform cell grid over structure bounding spheres.
class StructureIndex {
public:
    StructureIndex(const std::vector<Structure> &structures, Vec3 lo, Vec3 hi, double cell)
        : structures_(structures), lo_(lo), cell_(cell) {
        for (int a = 0; a < 3; ++a) {
            n_[a] = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil((hi[a] - lo[a]) / cell)));
        }
        cells_.resize(static_cast<std::size_t>(n_[0] * n_[1] * n_[2]));
        for (std::size_t s = 0; s < structures.size(); ++s) {
            const Structure &st = structures[s];
            std::int64_t a0[3], a1[3];
            for (int a = 0; a < 3; ++a) {
                a0[a] = cell_of(st.center[a] - st.reach, a);
                a1[a] = cell_of(st.center[a] + st.reach, a);
            }
            for (std::int64_t k = a0[2]; k <= a1[2]; ++k)
                for (std::int64_t j = a0[1]; j <= a1[1]; ++j)
                    for (std::int64_t i = a0[0]; i <= a1[0]; ++i)
                        cells_[static_cast<std::size_t>(i + n_[0] * (j + n_[1] * k))].push_back(s);
        }
    }

    // Sum of structure contrasts weighted by their profiles, and the summed
    // profile (coverage) at p.
    void evaluate(const Vec3 &p, double &contrast, double &coverage) const {
        contrast = 0.0;
        coverage = 0.0;
        const auto &list = cells_[static_cast<std::size_t>(
            cell_of(p.x, 0) + n_[0] * (cell_of(p.y, 1) + n_[1] * cell_of(p.z, 2)))];
        for (std::size_t s : list) {
            const double w = structures_[s].profile(p);
            contrast += w * structures_[s].contrast;
            coverage += w;
        }
    }

private:
    std::int64_t cell_of(double v, int a) const {
        const auto c = static_cast<std::int64_t>(std::floor((v - lo_[a]) / cell_));
        return std::clamp<std::int64_t>(c, 0, n_[a] - 1);
    }

    const std::vector<Structure> &structures_;
    Vec3 lo_;
    double cell_;
    std::int64_t n_[3] = {1, 1, 1};
    std::vector<std::vector<std::size_t>> cells_;
};

struct BackgroundWave {
    Vec3 wavelength;
    Vec3 phase;
    double amplitude;
};

class MovingModel {
public:
    MovingModel(const PhantomSpec &spec, const WorldGrid &grid)
        : lobes_(spec.lobes), lung_(make_lung(grid, spec.lobes)) {
        Rng rng(spec.seed, Stream::Structures);
        for (int s = 0; s < spec.structures; ++s) {
            Structure st;
            // Center inside the inner part of the lung.
            for (int tries = 0; tries < 10000; ++tries) {
                const Vec3 c{lung_.center.x + rng.uniform(-1, 1) * lung_.semi.x,
                             lung_.center.y + rng.uniform(-1, 1) * lung_.semi.y,
                             lung_.center.z + rng.uniform(-1, 1) * lung_.semi.z};
                if (lung_.radius(c) < 0.9) {
                    st.center = c;
                    break;
                }
            }
            st.axes = random_rotation(rng);
            for (int a = 0; a < 3; ++a) {
                st.radii[a] = rng.uniform(spec.structure_min_radius, spec.structure_max_radius);
            }
            st.contrast = rng.uniform(-100.0, 100.0) - kLungHU;
            const double rmin = std::min({st.radii.x, st.radii.y, st.radii.z});
            const double rmax = std::max({st.radii.x, st.radii.y, st.radii.z});
            st.half_band = kStructureBandMm / rmin;
            st.reach = rmax * (1.0 + st.half_band);
            structures_.push_back(st);
        }
        Rng bg(spec.seed, Stream::Background);
        for (int w = 0; w < 3; ++w) {
            BackgroundWave wave;
            for (int a = 0; a < 3; ++a) {
                wave.wavelength[a] = bg.uniform(60.0, 120.0);
                wave.phase[a] = bg.uniform(0.0, 2.0 * kPi);
            }
            wave.amplitude = bg.uniform(10.0, 25.0);
            waves_.push_back(wave);
        }
        const Vec3 margin{40.0, 40.0, 40.0};
        index_ = std::make_unique<StructureIndex>(structures_, grid.origin() - margin,
                                                  grid.extent_max() + margin, 16.0);
    }

    double intensity(const Vec3 &p) const {
        const double wl = lung_.weight(p);
        if (wl == 0.0) return kTissueHU;
        double contrast = 0.0, coverage = 0.0;
        index_->evaluate(p, contrast, coverage);
        double bg = 0.0;
        for (const auto &w : waves_) {
            bg += w.amplitude * std::sin(2.0 * kPi * p.x / w.wavelength.x + w.phase.x) *
                  std::sin(2.0 * kPi * p.y / w.wavelength.y + w.phase.y) *
                  std::sin(2.0 * kPi * p.z / w.wavelength.z + w.phase.z);
        }
        // Where structures overlap their intensities blend instead of adding up.
        if (coverage > 1.0) contrast /= coverage;
        const double inside = kLungHU + bg + contrast;
        return kTissueHU * (1.0 - wl) + wl * inside;
    }

    double coverage(const Vec3 &p) const {
        double contrast = 0.0, coverage = 0.0;
        index_->evaluate(p, contrast, coverage);
        return coverage;
    }

    int label(const Vec3 &p) const { return lung_.label(p, lobes_); }
    const Lung &lung() const { return lung_; }

private:
    int lobes_;
    Lung lung_;
    std::vector<Structure> structures_;
    std::vector<BackgroundWave> waves_;
    std::unique_ptr<StructureIndex> index_;
};

KeypointPairSet sample_pairs(const PhantomSpec &spec, const WorldGrid &grid,
                             const MovingModel &model, const AnalyticDeformation &def, int count,
                             Stream stream) {
    KeypointPairSet set;
    if (count <= 0) return set;
    Rng rng(spec.seed, stream);
    const Lung &lung = model.lung();
    const long max_tries = 2000000;
    long tries = 0;
    while (static_cast<int>(set.size()) < count) {
        if (++tries > max_tries) {
            throw std::invalid_argument("gen_phantom_pair: could not place keypoints inside structures");
        }
        const Vec3 kf{lung.center.x + rng.uniform(-1, 1) * lung.semi.x,
                      lung.center.y + rng.uniform(-1, 1) * lung.semi.y,
                      lung.center.z + rng.uniform(-1, 1) * lung.semi.z};
        if (!grid.contains(kf)) continue;
        const Vec3 km = def.map(kf);
        if (model.label(km) == 0) continue;
        if (model.coverage(km) < 0.5) continue;
        if (!grid.contains(km)) {
            throw std::invalid_argument("gen_phantom_pair: keypoint leaves the grid under the deformation");
        }
        set.pairs.push_back({kf, km});
    }
    return set;
}

} // namespace

// --------------------------------------------------------------------------- spec

void PhantomSpec::validate() const {
    for (int a = 0; a < 3; ++a) {
        if (dims[a] < 4) throw std::invalid_argument("PhantomSpec: dims must be >= 4");
        if (!(spacing[a] > 0.0)) throw std::invalid_argument("PhantomSpec: spacing must be > 0");
    }
    if (bumps < 0 || structures < 0 || lobes < 0 || keypoints < 0 || landmarks < 0) {
        throw std::invalid_argument("PhantomSpec: counts must be >= 0");
    }
    if (!(max_amplitude >= 0.0) || !(bump_sigma > 0.0)) {
        throw std::invalid_argument("PhantomSpec: amplitude must be >= 0 and sigma > 0");
    }
    if (!(structure_min_radius > 0.0) || structure_max_radius < structure_min_radius) {
        throw std::invalid_argument("PhantomSpec: invalid structure radius range");
    }
}

// --------------------------------------------------------------------------- deformation

Vec3 AnalyticDeformation::displacement(const Vec3 &x) const {
    Vec3 u{};
    for (const auto &b : bumps_) {
        const Vec3 d = x - b.center;
        u += b.amplitude * std::exp(-dot(d, d) / (2.0 * b.sigma * b.sigma));
    }
    return u;
}

Mat3 AnalyticDeformation::gradient(const Vec3 &x) const {
    Mat3 J;
    for (const auto &b : bumps_) {
        const Vec3 d = x - b.center;
        const double s2 = b.sigma * b.sigma;
        const double g = std::exp(-dot(d, d) / (2.0 * s2));
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) J(r, c) += -b.amplitude[r] * g * d[c] / s2;
        }
    }
    return J;
}

double AnalyticDeformation::jacobian_det(const Vec3 &x) const {
    Mat3 A = gradient(x);
    A(0, 0) += 1.0;
    A(1, 1) += 1.0;
    A(2, 2) += 1.0;
    return determinant(A);
}

double AnalyticDeformation::lipschitz_bound() const {
    double s = 0.0;
    for (const auto &b : bumps_) s += norm(b.amplitude) / (b.sigma * kSqrtE);
    return s;
}

DisplacementField AnalyticDeformation::sample(const WorldGrid &grid) const {
    DisplacementField u(grid);
    std::size_t n = 0;
    for (std::int64_t k = 0; k < grid.dim(2); ++k)
        for (std::int64_t j = 0; j < grid.dim(1); ++j)
            for (std::int64_t i = 0; i < grid.dim(0); ++i, ++n) u[n] = displacement(grid.world(i, j, k));
    return u;
}

AnalyticDeformation gen_deformation(const PhantomSpec &spec) {
    spec.validate();
    if (spec.bumps == 0 || spec.max_amplitude == 0.0) {
        return AnalyticDeformation();
    }
    const WorldGrid grid(spec.dims, spec.spacing);
    const Lung lung = make_lung(grid);
    const double sigma = spec.bump_sigma;
    if (spec.max_amplitude / (sigma * kSqrtE) >= kFoldFreeBound) {
        throw std::invalid_argument("gen_deformation: amplitude " + std::to_string(spec.max_amplitude) +
                                    " mm with sigma " + std::to_string(sigma) +
                                    " mm violates the fold-free bound");
    }

    Rng rng(spec.seed, Stream::Deformation);
    std::vector<GaussianBump> bumps;
    const double min_separation = 1.5 * sigma;
    for (int b = 0; b < spec.bumps; ++b) {
        GaussianBump bump;
        bump.sigma = sigma;
        for (int tries = 0; tries < 1000; ++tries) {
            bump.center = {lung.center.x + rng.uniform(-0.6, 0.6) * lung.semi.x,
                           lung.center.y + rng.uniform(-0.6, 0.6) * lung.semi.y,
                           lung.center.z + rng.uniform(-0.6, 0.6) * lung.semi.z};
            bool separated = true;
            for (const auto &o : bumps) separated &= norm(o.center - bump.center) >= min_separation;
            if (separated) break;
        }
        const double magnitude =
            b == 0 ? spec.max_amplitude : spec.max_amplitude * rng.uniform(0.5, 1.0);
        bump.amplitude = rng.unit_vector() * magnitude;
        bumps.push_back(bump);
    }

    // Keep the largest bump; shrink the rest until the bound holds with margin.
    const double target = 0.99 * kFoldFreeBound * sigma * kSqrtE;
    double others = 0.0;
    for (std::size_t b = 1; b < bumps.size(); ++b) others += norm(bumps[b].amplitude);
    const double room = target - spec.max_amplitude;
    if (others > room) {
        const double f = std::max(0.0, room) / others;
        for (std::size_t b = 1; b < bumps.size(); ++b) bumps[b].amplitude *= f;
    }

    AnalyticDeformation def(std::move(bumps));
    if (!(def.lipschitz_bound() < kFoldFreeBound)) {
        throw std::invalid_argument("gen_deformation: fold-free bound violated after rescaling");
    }
    for (std::int64_t k = 0; k < grid.dim(2); ++k)
        for (std::int64_t j = 0; j < grid.dim(1); ++j)
            for (std::int64_t i = 0; i < grid.dim(0); ++i)
                if (!(def.jacobian_det(grid.world(i, j, k)) > 0.0)) {
                    throw std::invalid_argument("gen_deformation: non-positive Jacobian at a voxel");
                }
    return def;
}

// --------------------------------------------------------------------------- pair

PhantomCase gen_phantom_pair(const PhantomSpec &spec) {
    spec.validate();
    const WorldGrid grid(spec.dims, spec.spacing);
    PhantomCase pc;
    pc.deformation = gen_deformation(spec);
    const MovingModel model(spec, grid);

    pc.moving = ScalarVolume(grid);
    pc.fixed = ScalarVolume(grid);
    std::vector<std::int32_t> fixed_labels(grid.voxel_count()), moving_labels(grid.voxel_count());
    pc.ground_truth = DisplacementField(grid);
    std::size_t n = 0;
    for (std::int64_t k = 0; k < grid.dim(2); ++k) {
        for (std::int64_t j = 0; j < grid.dim(1); ++j) {
            for (std::int64_t i = 0; i < grid.dim(0); ++i, ++n) {
                const Vec3 x = grid.world(i, j, k);
                const Vec3 u = pc.deformation.displacement(x);
                const Vec3 y = x + u;
                pc.ground_truth[n] = u;
                pc.moving[n] = model.intensity(x);
                pc.fixed[n] = model.intensity(y);
                moving_labels[n] = model.label(x);
                fixed_labels[n] = model.label(y);
            }
        }
    }
    pc.fixed_mask = LabelVolume(grid, std::move(fixed_labels), spec.lobes);
    pc.moving_mask = LabelVolume(grid, std::move(moving_labels), spec.lobes);
    pc.keypoints = sample_pairs(spec, grid, model, pc.deformation, spec.keypoints, Stream::Keypoints);
    pc.landmarks = sample_pairs(spec, grid, model, pc.deformation, spec.landmarks, Stream::Landmarks);
    return pc;
}

DistanceStats endpoint_error(const DisplacementField &u, const DisplacementField &u_gt,
                             const ScalarVolume *mask) {
    if (!(u.grid() == u_gt.grid())) throw std::invalid_argument("endpoint_error: grids differ");
    if (mask && !(mask->grid() == u.grid())) {
        throw std::invalid_argument("endpoint_error: mask grid differs");
    }
    std::vector<double> d;
    d.reserve(u.size());
    for (std::size_t n = 0; n < u.size(); ++n) {
        if (mask && (*mask)[n] == 0.0) continue;
        d.push_back(norm(u[n] - u_gt[n]));
    }
    if (d.empty()) throw std::invalid_argument("endpoint_error: empty evaluation domain");
    return distance_stats(d);
}

} // namespace lungreg

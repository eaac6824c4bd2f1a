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
#include "lungreg/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "lungreg/errors.hpp"
#include "lungreg/field_ops.hpp"
#include "lungreg/metrics.hpp"
#include "lungreg/pyramid.hpp"

namespace lungreg {

// --------------------------------------------------------------------------- config

RegistrationConfig RegistrationConfig::defaults(int levels) {
    if (levels < 1 || levels > 4) {
        throw std::invalid_argument("RegistrationConfig: levels must lie in [1, 4]");
    }
    // Coarse-to-fine iteration budgets and step sizes for the three-level
    // scheme; a fourth (coarsest) level reuses the coarsest settings.
    static const LevelConfig kThreeLevel[3] = {
        {300, 1.0, 0.2, 0.0},
        {200, 0.5, 0.1, 1e7},
        {150, 0.1, 0.05, 1e7},
    };
    RegistrationConfig cfg;
    cfg.levels = levels;
    for (int l = 0; l < levels; ++l) {
        // Index into the three-level table counted from the finest level.
        const int from_finest = levels - 1 - l;
        LevelConfig lc = kThreeLevel[std::max(0, 2 - from_finest)];
        lc.t = 0.2 / std::pow(2.0, l);
        lc.delta = (l == 0 && levels > 1) ? 0.0 : 1e7;
        cfg.level_configs.push_back(lc);
    }
    return cfg;
}

int RegistrationConfig::total_iterations() const {
    int total = 0;
    for (const auto &lc : level_configs) total += lc.iterations;
    return total;
}

void RegistrationConfig::validate() const {
    if (levels < 1 || levels > 4) {
        throw std::invalid_argument("RegistrationConfig: levels must lie in [1, 4]");
    }
    if (static_cast<int>(level_configs.size()) != levels) {
        throw std::invalid_argument("RegistrationConfig: need one level config per level");
    }
    for (const auto &lc : level_configs) {
        if (lc.iterations < 0) throw std::invalid_argument("LevelConfig: iterations must be >= 0");
        if (!(lc.step_size > 0.0) || !std::isfinite(lc.step_size)) {
            throw std::invalid_argument("LevelConfig: step_size must be > 0");
        }
        LossWeights w = weights;
        w.t = lc.t;
        w.delta = lc.delta;
        w.validate();
    }
}

// --------------------------------------------------------------------------- single level

LevelResult optimize_level(const LevelInputs &inputs, const LevelConfig &cfg,
                           const LossWeights &weights, int level_index) {
    if (!inputs.fixed || !inputs.moving) {
        throw std::invalid_argument("optimize_level: fixed and moving images are required");
    }
    if (!(inputs.fixed->grid() == inputs.moving->grid())) {
        throw std::invalid_argument("optimize_level: fixed and warped moving images must share a grid");
    }
    ObjectiveInputs oi;
    oi.fixed = inputs.fixed;
    oi.moving = inputs.moving;
    oi.fixed_mask = inputs.fixed_mask;
    oi.moving_mask = inputs.moving_mask;
    oi.keypoints = inputs.keypoints;
    oi.prior = inputs.prior;
    LossWeights w = weights;
    w.t = cfg.t;
    w.delta = cfg.delta;
    const Objective objective(oi, w);

    const WorldGrid &grid = inputs.fixed->grid();
    LevelResult result;
    result.residual = zero_field(grid);
    result.warnings = objective.warnings();
    result.history.reserve(static_cast<std::size_t>(cfg.iterations) + 1);

    const AdamSettings adam;
    const std::size_t n = grid.voxel_count();
    std::vector<Vec3> first(n), second(n), grad;
    double decay1 = 1.0;
    double decay2 = 1.0;

    const auto check = [&](const LossReport &rep, int it) {
        if (!std::isfinite(rep.total)) {
            throw NonFiniteLossError("objective became non-finite at level " +
                                         std::to_string(level_index) + ", iteration " +
                                         std::to_string(it),
                                     level_index, it);
        }
    };

    Vec3 *u = result.residual.data().data();
    for (int it = 0; it < cfg.iterations; ++it) {
        const LossReport rep = objective.evaluate(result.residual, &grad);
        check(rep, it);
        result.history.push_back(rep);

        decay1 *= adam.beta1;
        decay2 *= adam.beta2;
        const double step = cfg.step_size * std::sqrt(1.0 - decay2) / (1.0 - decay1);
        for (std::size_t v = 0; v < n; ++v) {
            for (int a = 0; a < 3; ++a) {
                const double g = grad[v][a];
                double &m1 = first[v][a];
                double &m2 = second[v][a];
                m1 = adam.beta1 * m1 + (1.0 - adam.beta1) * g;
                m2 = adam.beta2 * m2 + (1.0 - adam.beta2) * g * g;
                u[v][a] -= step * m1 / (std::sqrt(m2) + adam.stabilizer * std::sqrt(1.0 - decay2));
            }
        }
    }
    if (cfg.iterations > 0) {
        const LossReport final_rep = objective.evaluate(result.residual, nullptr);
        check(final_rep, cfg.iterations);
        result.history.push_back(final_rep);
    } else {
        result.history.push_back(objective.evaluate(result.residual, nullptr));
    }
    return result;
}

// --------------------------------------------------------------------------- multilevel

namespace {

ScalarVolume downsample_times(ScalarVolume v, int times) {
    for (int i = 0; i < times; ++i) v = downsample_gaussian(v);
    return v;
}

ChannelVolume downsample_times(ChannelVolume v, int times) {
    for (int i = 0; i < times; ++i) v = downsample_gaussian(v);
    return v;
}

double fullres_distance(const ScalarVolume &fixed, const ScalarVolume &moving,
                        const DomainMask &domain, double epsilon, const DisplacementField &u) {
    const NgfDistance ngf(fixed, domain, epsilon);
    return ngf.accumulate(warp_image(moving, u), {});
}

} // namespace

RegistrationResult register_multilevel(const RegistrationInputs &inputs,
                                       const RegistrationConfig &cfg,
                                       const LevelCallback &on_level) {
    cfg.validate();
    if (!inputs.fixed || !inputs.moving) {
        throw std::invalid_argument("register: fixed and moving images are required");
    }
    const ScalarVolume &F = *inputs.fixed;
    const ScalarVolume &M = *inputs.moving;
    if (!(F.grid() == M.grid())) {
        throw std::invalid_argument("register: fixed and moving images must share a grid (pre-aligned)");
    }
    if (inputs.fixed_mask && !(inputs.fixed_mask->grid() == F.grid())) {
        throw std::invalid_argument("register: fixed mask grid differs from fixed image grid");
    }
    if (inputs.moving_mask && !(inputs.moving_mask->grid() == M.grid())) {
        throw std::invalid_argument("register: moving mask grid differs from moving image grid");
    }
    const bool have_masks = inputs.fixed_mask && inputs.moving_mask;
    if (have_masks && inputs.fixed_mask->label_count() != inputs.moving_mask->label_count()) {
        throw std::invalid_argument("register: fixed and moving masks have different label counts");
    }

    const int L = cfg.levels;
    const std::vector<WorldGrid> grids = pyramid_grids(F.grid(), L);
    const std::vector<ScalarVolume> fixed_pyr = build_pyramid(F, L);
    std::vector<ChannelVolume> fixed_mask_pyr;
    if (inputs.fixed_mask) {
        fixed_mask_pyr = build_pyramid(ChannelVolume::one_hot(*inputs.fixed_mask), L);
    }
    const DomainMask fullres_domain =
        inputs.fixed_mask ? domain_from_labels(*inputs.fixed_mask) : DomainMask{};

    RegistrationResult result;
    DisplacementField acc = zero_field(F.grid());
    bool acc_is_zero = true;
    result.summary.initial_distance =
        fullres_distance(F, M, fullres_domain, cfg.weights.epsilon, acc);

    for (int li = 0; li < L; ++li) {
        const auto start = std::chrono::steady_clock::now();
        const int pyr = L - 1 - li;
        const LevelConfig &lc = cfg.level_configs[static_cast<std::size_t>(li)];

        const ScalarVolume warped_full = acc_is_zero ? M : warp_image(M, acc);
        const ScalarVolume moving_level = downsample_times(warped_full, pyr);
        ChannelVolume moving_mask_level;
        if (inputs.moving_mask) {
            moving_mask_level = downsample_times(
                acc_is_zero ? ChannelVolume::one_hot(*inputs.moving_mask)
                            : warp_onehot_linear(*inputs.moving_mask, acc),
                pyr);
        }

        LevelInputs in;
        in.fixed = &fixed_pyr[static_cast<std::size_t>(pyr)];
        in.moving = &moving_level;
        in.fixed_mask = inputs.fixed_mask ? &fixed_mask_pyr[static_cast<std::size_t>(pyr)] : nullptr;
        in.moving_mask = inputs.moving_mask ? &moving_mask_level : nullptr;
        in.keypoints = inputs.keypoints;
        in.prior = acc_is_zero ? nullptr : &acc;

        LevelResult lr = optimize_level(in, lc, cfg.weights, pyr + 1);
        for (auto &w : lr.warnings) {
            result.warnings.push_back("level " + std::to_string(pyr + 1) + ": " + w);
        }
        DisplacementField residual_full =
            pyr == 0 ? std::move(lr.residual) : upsample_field(lr.residual, F.grid());
        acc = acc_is_zero ? std::move(residual_full) : compose(acc, residual_full);
        acc_is_zero = false;

        LevelSummary ls;
        ls.level = pyr + 1;
        ls.grid = grids[static_cast<std::size_t>(pyr)];
        ls.config = lc;
        ls.history = std::move(lr.history);
        ls.fullres_distance = fullres_distance(F, M, fullres_domain, cfg.weights.epsilon, acc);
        ls.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (on_level) on_level(ls);
        result.levels.push_back(std::move(ls));
    }

    result.field = std::move(acc);
    result.summary.final_distance =
        result.levels.empty() ? result.summary.initial_distance : result.levels.back().fullres_distance;
    const FoldingStats fs = folding_stats(jacobian_det_field(result.field));
    result.summary.folding_fraction = fs.fraction;
    result.summary.min_jacobian = fs.min;
    result.summary.max_jacobian = fs.max;
    if (inputs.keypoints && !inputs.keypoints->empty()) {
        result.summary.initial_tre_mean = tre(*inputs.keypoints, zero_field(F.grid())).mean;
        result.summary.final_tre_mean = tre(*inputs.keypoints, result.field).mean;
    }
    return result;
}

// --------------------------------------------------------------------------- ablation

std::string AblationToggle::name() const {
    switch (kind) {
    case Kind::Baseline: return "baseline";
    case Kind::NoMask: return "no_mask";
    case Kind::NoVcc: return "no_vcc";
    case Kind::NoKeypoints: return "no_keypoints";
    case Kind::Levels: return "levels=" + std::to_string(levels);
    }
    return "unknown";
}

RegistrationConfig apply_toggle(const RegistrationConfig &base, const AblationToggle &toggle) {
    RegistrationConfig cfg = base;
    switch (toggle.kind) {
    case AblationToggle::Kind::Baseline:
        break;
    case AblationToggle::Kind::NoMask:
        cfg.weights.beta = 0.0;
        break;
    case AblationToggle::Kind::NoVcc:
        cfg.weights.gamma = 0.0;
        break;
    case AblationToggle::Kind::NoKeypoints:
        for (auto &lc : cfg.level_configs) lc.delta = 0.0;
        break;
    case AblationToggle::Kind::Levels: {
        const int n = toggle.levels;
        if (n < 1 || n > base.levels) {
            throw std::invalid_argument("apply_toggle: level count must lie in [1, base levels]");
        }
        cfg.levels = n;
        cfg.level_configs.assign(base.level_configs.begin(), base.level_configs.begin() + n);
        // Rescale iterations so the total budget matches the base config.
        const int budget = base.total_iterations();
        const int kept = cfg.total_iterations();
        if (kept > 0) {
            int assigned = 0;
            for (int l = 0; l < n; ++l) {
                auto &lc = cfg.level_configs[static_cast<std::size_t>(l)];
                if (l + 1 == n) {
                    lc.iterations = budget - assigned;
                } else {
                    lc.iterations = static_cast<int>(std::lround(
                        static_cast<double>(lc.iterations) * budget / kept));
                    assigned += lc.iterations;
                }
            }
        }
        break;
    }
    }
    return cfg;
}

std::vector<AblationRow> ablation_run(const RegistrationInputs &inputs,
                                      const RegistrationConfig &base,
                                      const std::vector<AblationToggle> &toggles,
                                      const KeypointPairSet *evaluation_landmarks) {
    std::vector<AblationToggle> arms{AblationToggle::baseline()};
    arms.insert(arms.end(), toggles.begin(), toggles.end());
    const KeypointPairSet *eval = evaluation_landmarks ? evaluation_landmarks : inputs.keypoints;

    std::vector<AblationRow> rows;
    for (const auto &arm : arms) {
        AblationRow row;
        row.name = arm.name();
        row.config = apply_toggle(base, arm);
        row.result = register_multilevel(inputs, row.config);
        const MetricsReport m =
            evaluate_registration(row.result.field, inputs.fixed_mask, inputs.moving_mask, eval);
        row.mean_dice = (inputs.fixed_mask && inputs.moving_mask)
                            ? m.mean_dice
                            : std::numeric_limits<double>::quiet_NaN();
        row.tre_mean = m.tre_after ? m.tre_after->mean : std::numeric_limits<double>::quiet_NaN();
        row.folding_percent = 100.0 * m.folding.fraction;
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace lungreg

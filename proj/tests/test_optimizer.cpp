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
#include <doctest.h>

#include <cmath>
#include <limits>

#include "lungreg/errors.hpp"
#include "lungreg/field_ops.hpp"
#include "lungreg/optimizer.hpp"
#include "lungreg/phantom.hpp"
#include "oracles.hpp"

using namespace lungreg;

namespace {

PhantomSpec small_spec(std::uint64_t seed, double amplitude) {
    PhantomSpec s;
    s.dims = {40, 36, 40};
    s.spacing = {2.0, 2.0, 2.0};
    s.bumps = 2;
    s.max_amplitude = amplitude;
    s.bump_sigma = 20.0;
    s.structures = 80;
    s.keypoints = 60;
    s.landmarks = 30;
    s.seed = seed;
    return s;
}

RegistrationConfig short_config(int levels, int iterations_per_level) {
    RegistrationConfig cfg = RegistrationConfig::defaults(levels);
    for (auto &lc : cfg.level_configs) lc.iterations = iterations_per_level;
    return cfg;
}

RegistrationInputs inputs_of(const PhantomCase &pc) {
    RegistrationInputs in;
    in.fixed = &pc.fixed;
    in.moving = &pc.moving;
    in.fixed_mask = &pc.fixed_mask;
    in.moving_mask = &pc.moving_mask;
    in.keypoints = &pc.keypoints;
    return in;
}

LabelVolume relabel(const LabelVolume &m, const std::vector<int> &perm) {
    LabelVolume out(m.grid(), m.label_count());
    for (std::size_t n = 0; n < m.size(); ++n) out.set(n, perm[static_cast<std::size_t>(m[n])]);
    return out;
}

} // namespace

TEST_SUITE("optimizer") {

TEST_CASE("default configuration") {
    const RegistrationConfig cfg = RegistrationConfig::defaults();
    REQUIRE(cfg.levels == 3);
    REQUIRE(cfg.level_configs.size() == 3);
    CHECK(cfg.level_configs[0].iterations == 300);
    CHECK(cfg.level_configs[1].iterations == 200);
    CHECK(cfg.level_configs[2].iterations == 150);
    CHECK(cfg.level_configs[0].t == 0.2);
    CHECK(cfg.level_configs[1].t == 0.1);
    CHECK(cfg.level_configs[2].t == 0.05);
    CHECK(cfg.level_configs[0].delta == 0.0);
    CHECK(cfg.level_configs[1].delta == 1e7);
    CHECK(cfg.level_configs[2].delta == 1e7);
    CHECK(cfg.weights.alpha == 10.0);
    CHECK(cfg.weights.beta == 1.0);
    CHECK(cfg.weights.gamma == 0.01);
    CHECK(cfg.weights.epsilon == 1.0);
    CHECK(cfg.total_iterations() == 650);
    CHECK_NOTHROW(cfg.validate());

    CHECK(RegistrationConfig::defaults(1).level_configs[0].delta == 1e7);
    CHECK(RegistrationConfig::defaults(4).level_configs.size() == 4);
    CHECK_THROWS_AS(RegistrationConfig::defaults(0), std::invalid_argument);
    CHECK_THROWS_AS(RegistrationConfig::defaults(5), std::invalid_argument);
}

TEST_CASE("config validation") {
    RegistrationConfig cfg = RegistrationConfig::defaults();
    cfg.level_configs.pop_back();
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = RegistrationConfig::defaults();
    cfg.level_configs[1].step_size = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = RegistrationConfig::defaults();
    cfg.level_configs[2].t = 1.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = RegistrationConfig::defaults();
    cfg.level_configs[0].delta = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = RegistrationConfig::defaults();
    cfg.weights.gamma = -0.1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("ablation toggles") {
    const RegistrationConfig base = RegistrationConfig::defaults();
    const RegistrationConfig nokp = apply_toggle(base, AblationToggle::no_keypoints());
    for (const auto &lc : nokp.level_configs) CHECK(lc.delta == 0.0);
    CHECK(apply_toggle(base, AblationToggle::no_vcc()).weights.gamma == 0.0);
    CHECK(apply_toggle(base, AblationToggle::no_mask()).weights.beta == 0.0);

    const RegistrationConfig two = apply_toggle(base, AblationToggle::with_levels(2));
    REQUIRE(two.levels == 2);
    REQUIRE(two.level_configs.size() == 2);
    CHECK(two.total_iterations() == base.total_iterations());
    // The first two configs, scaled by 650 / 500.
    CHECK(two.level_configs[0].iterations == 390);
    CHECK(two.level_configs[1].iterations == 260);
    CHECK(two.level_configs[0].t == base.level_configs[0].t);
    CHECK(two.level_configs[1].t == base.level_configs[1].t);
    CHECK(two.level_configs[1].step_size == base.level_configs[1].step_size);

    const RegistrationConfig one = apply_toggle(base, AblationToggle::with_levels(1));
    REQUIRE(one.level_configs.size() == 1);
    CHECK(one.level_configs[0].iterations == 650);

    const RegistrationConfig three = apply_toggle(base, AblationToggle::with_levels(3));
    for (std::size_t l = 0; l < 3; ++l) CHECK(three.level_configs[l].iterations == base.level_configs[l].iterations);
    CHECK_THROWS_AS(apply_toggle(base, AblationToggle::with_levels(4)), std::invalid_argument);

    CHECK(AblationToggle::with_levels(2).name() == "levels=2");
    CHECK(AblationToggle::no_keypoints().name() == "no_keypoints");
}

TEST_CASE("optimize_level keeps a matched pair near zero") {
    const WorldGrid g({16, 16, 16}, {2.0, 2.0, 2.0});
    const ScalarVolume f = oracle::smooth_image(g, 241, 100.0);
    LevelInputs in;
    in.fixed = &f;
    in.moving = &f;
    LevelConfig lc;
    lc.iterations = 50;
    lc.step_size = 0.5;
    const LevelResult r = optimize_level(in, lc, LossWeights{});
    double mean = 0.0;
    for (const Vec3 &v : r.residual.data()) mean += norm(v);
    mean /= static_cast<double>(r.residual.size());
    CHECK(mean < 0.1 * 2.0);
    CHECK(r.history.size() == 51);
}

TEST_CASE("optimize_level descends and recovers a small phantom deformation") {
    const PhantomCase pc = gen_phantom_pair(small_spec(5, 2.0));
    const ChannelVolume bf = ChannelVolume::one_hot(pc.fixed_mask);
    const ChannelVolume bm = ChannelVolume::one_hot(pc.moving_mask);
    LevelInputs in;
    in.fixed = &pc.fixed;
    in.moving = &pc.moving;
    in.fixed_mask = &bf;
    in.moving_mask = &bm;
    in.keypoints = &pc.keypoints;
    LevelConfig lc;
    lc.iterations = 200;
    lc.step_size = 0.5;
    lc.t = 0.2;
    lc.delta = 1e7;
    const LevelResult r = optimize_level(in, lc, LossWeights{});
    CHECK(r.history.back().total <= r.history.front().total);
    const ScalarVolume lung = pc.fixed_mask.foreground();
    const DistanceStats ee = endpoint_error(r.residual, pc.ground_truth, &lung);
    const DistanceStats ee0 = endpoint_error(zero_field(pc.fixed.grid()), pc.ground_truth, &lung);
    MESSAGE("single-level endpoint error ", ee.mean, " mm (initial ", ee0.mean, ")");
    CHECK(ee.mean < 0.5 * 2.0);
}

TEST_CASE("zero iterations return the zero field exactly") {
    const PhantomCase pc = gen_phantom_pair(small_spec(7, 4.0));
    const RegistrationConfig cfg = short_config(2, 0);
    const RegistrationResult r = register_multilevel(inputs_of(pc), cfg);
    for (const Vec3 &v : r.field.data()) CHECK(v == Vec3{});
    CHECK(r.field.grid() == pc.fixed.grid());
}

TEST_CASE("a single level reduces to optimize_level at full resolution") {
    const PhantomCase pc = gen_phantom_pair(small_spec(9, 3.0));
    RegistrationConfig cfg = short_config(1, 30);
    const RegistrationResult r = register_multilevel(inputs_of(pc), cfg);

    const ChannelVolume bf = ChannelVolume::one_hot(pc.fixed_mask);
    const ChannelVolume bm = ChannelVolume::one_hot(pc.moving_mask);
    LevelInputs in;
    in.fixed = &pc.fixed;
    in.moving = &pc.moving;
    in.fixed_mask = &bf;
    in.moving_mask = &bm;
    in.keypoints = &pc.keypoints;
    const LevelResult lr = optimize_level(in, cfg.level_configs[0], cfg.weights);
    for (std::size_t n = 0; n < lr.residual.size(); ++n) CHECK(r.field[n] == lr.residual[n]);
}

TEST_CASE("multilevel registration recovers a phantom and keeps level progress") {
    const PhantomCase pc = gen_phantom_pair(small_spec(11, 8.0));
    RegistrationConfig cfg = RegistrationConfig::defaults(3);
    cfg.level_configs[0].iterations = 150;
    cfg.level_configs[1].iterations = 100;
    cfg.level_configs[2].iterations = 75;
    std::vector<int> seen;
    const RegistrationResult r =
        register_multilevel(inputs_of(pc), cfg, [&](const LevelSummary &ls) { seen.push_back(ls.level); });
    CHECK(seen == std::vector<int>{3, 2, 1});
    REQUIRE(r.levels.size() == 3);
    CHECK(r.levels[0].grid.dims() == Dims{10, 9, 10});
    CHECK(r.levels[2].grid == pc.fixed.grid());
    CHECK(r.levels[0].history.size() == 151);

    double prev = r.summary.initial_distance;
    for (const auto &ls : r.levels) {
        CHECK(ls.fullres_distance <= 1.05 * prev);
        prev = ls.fullres_distance;
    }
    CHECK(r.summary.final_distance < r.summary.initial_distance);
    REQUIRE(r.summary.final_tre_mean.has_value());
    CHECK(*r.summary.final_tre_mean < *r.summary.initial_tre_mean);
    CHECK(r.summary.folding_fraction < 0.001);

    const ScalarVolume lung = pc.fixed_mask.foreground();
    const DistanceStats ee = endpoint_error(r.field, pc.ground_truth, &lung);
    MESSAGE("multilevel endpoint error ", ee.mean, " mm");
    CHECK(ee.mean < 1.0);
}

TEST_CASE("registration is deterministic and independent of label numbering") {
    const PhantomCase pc = gen_phantom_pair(small_spec(13, 5.0));
    RegistrationConfig cfg = short_config(2, 20);
    cfg.deterministic = true;
    const RegistrationResult a = register_multilevel(inputs_of(pc), cfg);
    const RegistrationResult b = register_multilevel(inputs_of(pc), cfg);
    for (std::size_t n = 0; n < a.field.size(); ++n) CHECK(a.field[n] == b.field[n]);

    std::vector<int> perm(static_cast<std::size_t>(pc.fixed_mask.label_count()) + 1);
    perm[0] = 0;
    for (std::size_t l = 1; l < perm.size(); ++l) perm[l] = static_cast<int>(perm.size() - l);
    const LabelVolume pf = relabel(pc.fixed_mask, perm);
    const LabelVolume pm = relabel(pc.moving_mask, perm);
    RegistrationInputs in = inputs_of(pc);
    in.fixed_mask = &pf;
    in.moving_mask = &pm;
    const RegistrationResult c = register_multilevel(in, cfg);
    for (std::size_t n = 0; n < a.field.size(); ++n) CHECK(a.field[n] == c.field[n]);
}

TEST_CASE("non-finite objectives abort with a diagnostic") {
    const WorldGrid g({12, 12, 12}, {1.0, 1.0, 1.0});
    const ScalarVolume f = oracle::smooth_image(g, 251, 50.0);
    ScalarVolume m = f;
    m[g.index(6, 6, 6)] = std::numeric_limits<double>::quiet_NaN();
    RegistrationInputs in;
    in.fixed = &f;
    in.moving = &m;
    const RegistrationConfig cfg = short_config(1, 5);
    CHECK_THROWS_AS(register_multilevel(in, cfg), NonFiniteLossError);
    try {
        register_multilevel(in, cfg);
    } catch (const NonFiniteLossError &e) {
        CHECK(e.level() == 1);
        CHECK(e.iteration() == 0);
    }
}

TEST_CASE("register_multilevel rejects invalid inputs") {
    const WorldGrid g({12, 12, 12}, {1.0, 1.0, 1.0});
    const ScalarVolume f = oracle::smooth_image(g, 257, 50.0);
    const ScalarVolume other(WorldGrid({12, 12, 10}, {1.0, 1.0, 1.0}), 0.0);
    RegistrationInputs in;
    in.fixed = &f;
    in.moving = &other;
    CHECK_THROWS_AS(register_multilevel(in, short_config(1, 1)), std::invalid_argument);
    in.moving = &f;
    CHECK_THROWS_AS(register_multilevel(in, short_config(3, 1)), std::invalid_argument);
    const LabelVolume a(g, 2), b(g, 3);
    in.fixed_mask = &a;
    in.moving_mask = &b;
    CHECK_THROWS_AS(register_multilevel(in, short_config(1, 1)), std::invalid_argument);
}

TEST_CASE("ablation_run emits one row per toggle plus the baseline") {
    const PhantomCase pc = gen_phantom_pair(small_spec(17, 4.0));
    const RegistrationConfig base = short_config(2, 10);
    const auto rows = ablation_run(inputs_of(pc), base,
                                   {AblationToggle::no_vcc(), AblationToggle::no_keypoints(),
                                    AblationToggle::with_levels(1)},
                                   &pc.landmarks);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].name == "baseline");
    CHECK(rows[1].config.weights.gamma == 0.0);
    CHECK(rows[3].config.levels == 1);
    for (const auto &row : rows) {
        CHECK(row.mean_dice >= 0.0);
        CHECK(row.mean_dice <= 1.0);
        CHECK(std::isfinite(row.tre_mean));
        CHECK(row.folding_percent >= 0.0);
    }
}

} // TEST_SUITE

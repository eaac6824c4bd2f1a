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

#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "io_cases.hpp"
#include "lungreg/io.hpp"
#include "lungreg/report.hpp"

using namespace lungreg;
using io_cases::ScratchDir;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

Run run_cli(const std::vector<std::string> &args) {
    std::ostringstream out, err;
    Run r;
    r.code = cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

PhantomSpec small_spec(std::uint64_t seed) {
    PhantomSpec s;
    s.dims = {40, 36, 40};
    s.spacing = {2.0, 2.0, 2.0};
    s.bumps = 2;
    s.max_amplitude = 4.0;
    s.bump_sigma = 20.0;
    s.structures = 80;
    s.keypoints = 60;
    s.landmarks = 30;
    s.seed = seed;
    return s;
}

// Writes a small phantom case through the CLI and returns its directory.
std::filesystem::path make_case(const ScratchDir &dir, std::uint64_t seed) {
    write_text_atomic(dir / "spec.txt", phantom_spec_to_text(small_spec(seed)));
    const std::filesystem::path out = dir / ("case" + std::to_string(seed));
    const Run r = run_cli({"phantom", "--spec", (dir / "spec.txt").string(), "--out-dir", out.string()});
    REQUIRE(r.code == 0);
    return out;
}

std::vector<std::string> register_args(const std::filesystem::path &c) {
    return {"register",
            "--fixed", (c / "fixed.mha").string(),
            "--moving", (c / "moving.mha").string(),
            "--fixed-mask", (c / "fixed_mask.mha").string(),
            "--moving-mask", (c / "moving_mask.mha").string(),
            "--keypoints", (c / "keypoints.txt").string()};
}

std::vector<std::string> operator+(std::vector<std::string> a, const std::vector<std::string> &b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("missing --moving is an input error with usage text") {
    const Run r = run_cli({"register", "--fixed", "f.mha"});
    CHECK(r.code == 2);
    CHECK(r.err.find("--moving") != std::string::npos);
    CHECK(r.err.find("Usage") != std::string::npos);
    CHECK(run_cli({}).code == 2);
    CHECK(run_cli({"frobnicate"}).code == 2);
    CHECK(run_cli({"register", "--fixed", "f.mha", "--moving", "m.mha", "--levels", "7"}).code == 2);
}

TEST_CASE("unreadable inputs are input errors") {
    ScratchDir dir("cli");
    const Run r = run_cli({"register", "--fixed", (dir / "nope.mha").string(), "--moving", (dir / "nope.mha").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("nope.mha") != std::string::npos);
}

TEST_CASE("version flag") {
    const Run r = run_cli({"--version"});
    CHECK(r.code == 0);
    CHECK(r.out.find(std::string(kToolVersion)) != std::string::npos);
}

TEST_CASE("jacobian of a zero field") {
    ScratchDir dir("cli");
    write_volume(zero_field(WorldGrid({6, 5, 4}, {1, 2, 3})), dir / "zero.mha");
    const Run r = run_cli({"jacobian", "--field", (dir / "zero.mha").string(), "--out", (dir / "det.mha").string(),
                       "--report", (dir / "jac.txt").string()});
    REQUIRE(r.code == 0);
    const ReportDocument doc = parse_report(slurp(dir / "jac.txt"));
    CHECK(doc["folding_fraction"].get<double>() == 0.0);
    CHECK(doc["min_jacobian"].get<double>() == 1.0);
    CHECK(doc["max_jacobian"].get<double>() == 1.0);
    const std::string text = slurp(dir / "jac.txt");
    CHECK(text.find("folding_fraction: 0\n") != std::string::npos);
    const ScalarVolume det = read_scalar_volume(dir / "det.mha");
    for (std::size_t n = 0; n < det.size(); ++n) CHECK(det[n] == 1.0);
}

TEST_CASE("evaluate on identical masks gives Dice 1 per label") {
    ScratchDir dir("cli");
    const WorldGrid g({10, 10, 10}, {1, 1, 1});
    LabelVolume mask(g, 3);
    for (std::size_t n = 0; n < mask.size(); ++n) mask.set(n, static_cast<std::int32_t>(n % 40 < 10 ? 0 : 1 + n % 3));
    write_volume(mask, dir / "mask.mha");
    write_volume(zero_field(g), dir / "zero.mha");
    const Run r = run_cli({"evaluate", "--field", (dir / "zero.mha").string(), "--fixed-mask", (dir / "mask.mha").string(),
                       "--moving-mask", (dir / "mask.mha").string()});
    REQUIRE(r.code == 0);
    const ReportDocument doc = parse_report(r.out);
    CHECK(doc["mean_dice"].get<double>() == 1.0);
    REQUIRE(doc["metrics"]["labels"].size() == 3);
    for (const auto &l : doc["metrics"]["labels"]) CHECK(l["dice"].get<double>() == 1.0);
    CHECK(doc["mean_asd"].get<double>() == 0.0);
    CHECK(doc["mean_hausdorff"].get<double>() == 0.0);

    CHECK(run_cli({"evaluate", "--field", (dir / "zero.mha").string(), "--fixed-mask", (dir / "mask.mha").string()}).code ==
          2);
}

TEST_CASE("phantom with the same seed twice writes byte-identical files") {
    ScratchDir dir("cli");
    write_text_atomic(dir / "spec.txt", phantom_spec_to_text(small_spec(3)));
    for (const char *sub : {"a", "b"}) {
        const Run r = run_cli({"phantom", "--spec", (dir / "spec.txt").string(), "--seed", "7", "--out-dir",
                           (dir / sub).string()});
        REQUIRE(r.code == 0);
    }
    int compared = 0;
    for (const auto &entry : std::filesystem::directory_iterator(dir / "a")) {
        const auto name = entry.path().filename().string();
        INFO(name);
        CHECK(slurp(entry.path()) == slurp(dir / "b" / name));
        ++compared;
    }
    CHECK(compared == 8);
    CHECK(read_phantom_spec(dir / "a" / "spec.txt").seed == 7);
}

TEST_CASE("register with defaults reduces TRE and writes field plus manifest") {
    ScratchDir dir("cli");
    const auto c = make_case(dir, 11);
    const Run r = run_cli(register_args(c) + std::vector<std::string>{"--out-field", (dir / "u.mha").string(),
                                                                    "--out-warped", (dir / "w.mha").string(),
                                                                    "--report", (dir / "run.txt").string()});
    INFO(r.err);
    REQUIRE(r.code == 0);
    const ReportDocument doc = parse_report(slurp(dir / "run.txt"));
    CHECK(doc["final_tre"].get<double>() < doc["initial_tre"].get<double>());
    CHECK(doc["final_distance"].get<double>() < doc["initial_distance"].get<double>());
    CHECK(doc["levels"].get<int>() == 3);
    CHECK(doc["level_summaries"].size() == 3);
    CHECK(doc.contains("seconds"));
    const DisplacementField u = read_field(dir / "u.mha");
    CHECK(u.grid().dim(0) == 40);
    CHECK(read_scalar_volume(dir / "w.mha").size() == u.size());

    // The manifest's config snapshot reproduces the run's configuration.
    const RegistrationConfig snap = config_from_report(slurp(dir / "run.txt"));
    CHECK(config_to_text(snap) == config_to_text(RegistrationConfig::defaults(3)));
}

TEST_CASE("--levels 1 equals a config file with one level") {
    ScratchDir dir("cli");
    const auto c = make_case(dir, 12);
    write_text_atomic(dir / "three.cfg", "levels = 3\n[level.3]\niterations = 5\n[level.1]\niterations = 20\n");
    write_text_atomic(dir / "one.cfg", "levels = 1\n[level.1]\niterations = 20\n");
    const Run a = run_cli(register_args(c) + std::vector<std::string>{"--config", (dir / "three.cfg").string(), "--levels",
                                                                    "1", "--out-field", (dir / "a.mha").string(),
                                                                    "--report", (dir / "a.txt").string()});
    const Run b = run_cli(register_args(c) + std::vector<std::string>{"--config", (dir / "one.cfg").string(), "--out-field",
                                                                    (dir / "b.mha").string(), "--report",
                                                                    (dir / "b.txt").string()});
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    CHECK(slurp(dir / "a.mha") == slurp(dir / "b.mha"));
    CHECK(parse_report(slurp(dir / "a.txt"))["level_summaries"].size() == 1);
    CHECK(config_to_text(config_from_report(slurp(dir / "a.txt"))) ==
          config_to_text(config_from_report(slurp(dir / "b.txt"))));
}

TEST_CASE("deterministic runs are byte-identical and rerun from the manifest") {
    ScratchDir dir("cli");
    const auto c = make_case(dir, 13);
    write_text_atomic(dir / "short.cfg", "levels = 2\n[level.2]\niterations = 15\n[level.1]\niterations = 10\n");
    auto run = [&](const std::string &tag, const std::string &cfg) {
        return run_cli(register_args(c) + std::vector<std::string>{"--config", cfg, "--seed", "5", "--deterministic",
                                                                 "--out-field", (dir / (tag + ".mha")).string(),
                                                                 "--report", (dir / (tag + ".txt")).string()});
    };
    REQUIRE(run("r1", (dir / "short.cfg").string()).code == 0);
    REQUIRE(run("r2", (dir / "short.cfg").string()).code == 0);
    CHECK(slurp(dir / "r1.mha") == slurp(dir / "r2.mha"));
    CHECK(slurp(dir / "r1.txt").find("seconds") == std::string::npos);

    // Feed the snapshot back as a config file: same field, same report body.
    write_text_atomic(dir / "snap.cfg", config_to_text(config_from_report(slurp(dir / "r1.txt"))));
    REQUIRE(run("r3", (dir / "snap.cfg").string()).code == 0);
    CHECK(slurp(dir / "r1.mha") == slurp(dir / "r3.mha"));
    ReportDocument d1 = parse_report(slurp(dir / "r1.txt"));
    ReportDocument d3 = parse_report(slurp(dir / "r3.txt"));
    d1.erase("config_file");
    d3.erase("config_file");
    d1.erase("out_field");
    d3.erase("out_field");
    CHECK(d1 == d3);
    CHECK(d1["seed"].get<std::uint64_t>() == 5);
}

TEST_CASE("warp applies a field to scalar and label volumes") {
    ScratchDir dir("cli");
    const WorldGrid g({8, 8, 8}, {1, 1, 1});
    ScalarVolume ramp(g);
    LabelVolume labels(g, 1);
    for (std::int64_t k = 0; k < 8; ++k)
        for (std::int64_t j = 0; j < 8; ++j)
            for (std::int64_t i = 0; i < 8; ++i) {
                ramp.at(i, j, k) = static_cast<double>(i);
                if (i >= 4) labels.set(g.index(i, j, k), 1);
            }
    write_volume(ramp, dir / "ramp.mha");
    write_volume(labels, dir / "labels.mha");
    write_volume(DisplacementField(g, Vec3{1, 0, 0}), dir / "shift.mha");
    REQUIRE(run_cli({"warp", "--field", (dir / "shift.mha").string(), "--input", (dir / "ramp.mha").string(), "--out",
                 (dir / "ramp_w.mha").string()})
                .code == 0);
    REQUIRE(run_cli({"warp", "--field", (dir / "shift.mha").string(), "--input", (dir / "labels.mha").string(), "--out",
                 (dir / "labels_w.mha").string()})
                .code == 0);
    const ScalarVolume rw = read_scalar_volume(dir / "ramp_w.mha");
    CHECK(rw.at(2, 3, 3) == 3.0);
    CHECK(rw.at(7, 3, 3) == 7.0); // clamped at the border
    const LabelVolume lw = read_label_volume(dir / "labels_w.mha");
    CHECK(lw[g.index(3, 0, 0)] == 1);
    CHECK(lw[g.index(2, 0, 0)] == 0);

    CHECK(run_cli({"warp", "--field", (dir / "shift.mha").string(), "--input", (dir / "shift.mha").string(), "--out",
               (dir / "bad.mha").string()})
              .code == 2);
}

TEST_CASE("non-finite inputs abort registration with exit code 3") {
    ScratchDir dir("cli");
    const WorldGrid g({8, 8, 8}, {1, 1, 1});
    ScalarVolume f = oracle::smooth_image(g, 1, 10.0);
    ScalarVolume m = f;
    m[100] = std::numeric_limits<double>::quiet_NaN();
    write_volume(f, dir / "f.mha");
    write_volume(m, dir / "m.mha");
    const Run r = run_cli({"register", "--fixed", (dir / "f.mha").string(), "--moving", (dir / "m.mha").string(),
                       "--levels", "1"});
    CHECK(r.code == 3);
    CHECK(r.err.find("error") != std::string::npos);
}

} // TEST_SUITE

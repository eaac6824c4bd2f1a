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
#include "commands.hpp"

#include <chrono>
#include <filesystem>
#include <optional>

#include <CLI11.hpp>

#include "lungreg/errors.hpp"
#include "lungreg/field_ops.hpp"
#include "lungreg/io.hpp"
#include "lungreg/losses.hpp"
#include "lungreg/metrics.hpp"
#include "lungreg/optimizer.hpp"
#include "lungreg/phantom.hpp"
#include "lungreg/report.hpp"

namespace lungreg::cli {

namespace fs = std::filesystem;

namespace {

struct RegisterOptions {
    std::string fixed, moving, fixed_mask, moving_mask, keypoints, config;
    std::string out_field, out_warped, report;
    std::optional<int> levels;
    std::optional<std::uint64_t> seed;
    bool deterministic = false;
    bool float32 = false;
};

struct EvaluateOptions {
    std::string field, fixed_mask, moving_mask, keypoints, report;
};

struct JacobianOptions {
    std::string field, mask, out, report;
};

struct PhantomOptions {
    std::string spec, out_dir;
    std::optional<std::uint64_t> seed;
};

struct WarpOptions {
    std::string field, input, out;
    bool float32 = false;
};

ElementType float_type(bool float32) { return float32 ? ElementType::Float32 : ElementType::Float64; }

// Masks that come from different sources may use different label ranges.
void align_label_counts(LabelVolume &a, LabelVolume &b) {
    const int k = std::max(a.label_count(), b.label_count());
    if (a.label_count() != k) a = LabelVolume(a.grid(), {a.data().begin(), a.data().end()}, k);
    if (b.label_count() != k) b = LabelVolume(b.grid(), {b.data().begin(), b.data().end()}, k);
}

void emit_report(const ReportDocument &doc, const std::string &path, std::ostream &out) {
    const std::string text = render_report(doc);
    if (path.empty()) out << text;
    else write_text_atomic(path, text);
}

ReportDocument header(const char *command) {
    ReportDocument doc;
    doc["tool"] = "lungreg";
    doc["version"] = std::string(kToolVersion);
    doc["command"] = command;
    return doc;
}

int run_register(const RegisterOptions &o, std::ostream &out, std::ostream &err) {
    RegistrationConfig cfg = o.config.empty()
                                 ? RegistrationConfig::defaults(o.levels.value_or(3))
                                 : read_config(o.config, o.levels);
    if (o.seed) cfg.seed = *o.seed;
    if (o.deterministic) cfg.deterministic = true;
    cfg.validate();

    const ScalarVolume fixed = read_scalar_volume(o.fixed);
    const ScalarVolume moving = read_scalar_volume(o.moving);
    std::optional<LabelVolume> fixed_mask, moving_mask;
    if (!o.fixed_mask.empty()) fixed_mask = read_label_volume(o.fixed_mask);
    if (!o.moving_mask.empty()) moving_mask = read_label_volume(o.moving_mask);
    if (fixed_mask && moving_mask) align_label_counts(*fixed_mask, *moving_mask);
    std::optional<KeypointPairSet> keypoints;
    if (!o.keypoints.empty()) keypoints = read_keypoints(o.keypoints);

    RegistrationInputs in;
    in.fixed = &fixed;
    in.moving = &moving;
    in.fixed_mask = fixed_mask ? &*fixed_mask : nullptr;
    in.moving_mask = moving_mask ? &*moving_mask : nullptr;
    in.keypoints = keypoints ? &*keypoints : nullptr;

    const auto start = std::chrono::steady_clock::now();
    const RegistrationResult result = register_multilevel(in, cfg, [&](const LevelSummary &s) {
        err << "level " << s.level << ": " << s.config.iterations << " iterations, distance "
            << format_number(s.fullres_distance) << '\n';
    });
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (const auto &w : result.warnings) err << "warning: " << w << '\n';

    if (!o.out_field.empty()) write_volume(result.field, o.out_field, float_type(o.float32));
    if (!o.out_warped.empty()) {
        write_volume(warp_image(moving, result.field), o.out_warped, float_type(o.float32));
    }

    ReportDocument doc = header("register");
    doc["fixed"] = o.fixed;
    doc["moving"] = o.moving;
    doc["fixed_mask"] = o.fixed_mask;
    doc["moving_mask"] = o.moving_mask;
    doc["keypoints"] = o.keypoints;
    doc["config_file"] = o.config;
    doc["out_field"] = o.out_field;
    doc["seed"] = cfg.seed;
    doc["deterministic"] = cfg.deterministic;
    doc["levels"] = cfg.levels;
    const RegistrationSummary &s = result.summary;
    doc["initial_distance"] = s.initial_distance;
    doc["final_distance"] = s.final_distance;
    doc["folding_fraction"] = s.folding_fraction;
    doc["min_jacobian"] = s.min_jacobian;
    doc["max_jacobian"] = s.max_jacobian;
    if (s.initial_tre_mean) doc["initial_tre"] = *s.initial_tre_mean;
    if (s.final_tre_mean) doc["final_tre"] = *s.final_tre_mean;
    if (!cfg.deterministic) doc["seconds"] = seconds;
    doc["config"] = config_to_text(cfg);

    ReportDocument levels = ReportDocument::array();
    for (const LevelSummary &ls : result.levels) {
        ReportDocument l;
        l["level"] = ls.level;
        l["dims"] = {ls.grid.dim(0), ls.grid.dim(1), ls.grid.dim(2)};
        l["spacing"] = {ls.grid.spacing().x, ls.grid.spacing().y, ls.grid.spacing().z};
        l["iterations"] = ls.config.iterations;
        l["fullres_distance"] = ls.fullres_distance;
        if (!cfg.deterministic) l["seconds"] = ls.seconds;
        ReportDocument hist = ReportDocument::array();
        for (const LossReport &r : ls.history) hist.push_back(to_json(r));
        l["history"] = hist;
        levels.push_back(l);
    }
    doc["level_summaries"] = levels;
    doc["warnings"] = result.warnings;
    emit_report(doc, o.report, out);
    return kOk;
}

int run_evaluate(const EvaluateOptions &o, std::ostream &out, std::ostream &) {
    const DisplacementField u = read_field(o.field);
    std::optional<LabelVolume> fixed_mask, moving_mask;
    if (!o.fixed_mask.empty()) fixed_mask = read_label_volume(o.fixed_mask);
    if (!o.moving_mask.empty()) moving_mask = read_label_volume(o.moving_mask);
    if (fixed_mask.has_value() != moving_mask.has_value()) {
        throw std::invalid_argument("evaluate: --fixed-mask and --moving-mask go together");
    }
    if (fixed_mask) align_label_counts(*fixed_mask, *moving_mask);
    std::optional<KeypointPairSet> keypoints;
    if (!o.keypoints.empty()) keypoints = read_keypoints(o.keypoints);

    const MetricsReport m = evaluate_registration(u, fixed_mask ? &*fixed_mask : nullptr,
                                                  moving_mask ? &*moving_mask : nullptr,
                                                  keypoints ? &*keypoints : nullptr);
    ReportDocument doc = header("evaluate");
    doc["field"] = o.field;
    if (fixed_mask) doc["mean_dice"] = m.mean_dice;
    if (m.mean_asd) doc["mean_asd"] = *m.mean_asd;
    if (m.mean_hausdorff) doc["mean_hausdorff"] = *m.mean_hausdorff;
    if (m.tre_before) doc["tre_before_mean"] = m.tre_before->mean;
    if (m.tre_after) doc["tre_after_mean"] = m.tre_after->mean;
    doc["folding_fraction"] = m.folding.fraction;
    doc["metrics"] = to_json(m);
    emit_report(doc, o.report, out);
    return kOk;
}

int run_jacobian(const JacobianOptions &o, std::ostream &out, std::ostream &) {
    const DisplacementField u = read_field(o.field);
    const ScalarVolume det = jacobian_det_field(u);
    std::optional<ScalarVolume> mask;
    if (!o.mask.empty()) mask = read_scalar_volume(o.mask);
    const FoldingStats fs = folding_stats(det, mask ? &*mask : nullptr);
    if (!o.out.empty()) write_volume(det, o.out);

    ReportDocument doc = header("jacobian");
    doc["field"] = o.field;
    doc["folding_fraction"] = fs.fraction;
    doc["min_jacobian"] = fs.min;
    doc["max_jacobian"] = fs.max;
    doc["folding"] = to_json(fs);
    emit_report(doc, o.report, out);
    return kOk;
}

int run_phantom(const PhantomOptions &o, std::ostream &out, std::ostream &) {
    PhantomSpec spec = o.spec.empty() ? PhantomSpec{} : read_phantom_spec(o.spec);
    if (o.seed) spec.seed = *o.seed;
    const PhantomCase pc = gen_phantom_pair(spec);

    const fs::path dir(o.out_dir);
    fs::create_directories(dir);
    write_volume(pc.fixed, dir / "fixed.mha");
    write_volume(pc.moving, dir / "moving.mha");
    write_volume(pc.fixed_mask, dir / "fixed_mask.mha");
    write_volume(pc.moving_mask, dir / "moving_mask.mha");
    write_volume(pc.ground_truth, dir / "ground_truth.mha");
    write_keypoints(pc.keypoints, dir / "keypoints.txt");
    write_keypoints(pc.landmarks, dir / "landmarks.txt");
    write_text_atomic(dir / "spec.txt", phantom_spec_to_text(spec));
    out << "wrote phantom case (seed " << spec.seed << ") to " << dir.string() << '\n';
    return kOk;
}

int run_warp(const WarpOptions &o, std::ostream &, std::ostream &) {
    const DisplacementField u = read_field(o.field);
    AnyVolume in = read_volume(o.input);
    if (auto *labels = std::get_if<LabelVolume>(&in)) {
        write_volume(warp_labels_argmax(*labels, u), o.out);
    } else if (auto *scalar = std::get_if<ScalarVolume>(&in)) {
        write_volume(warp_image(*scalar, u), o.out, float_type(o.float32));
    } else {
        throw FormatError(FormatErrorKind::UnsupportedType,
                          o.input + ": warp applies to scalar or label volumes");
    }
    return kOk;
}

} // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Deformable lung CT registration", "lungreg"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    RegisterOptions reg;
    auto *c_reg = app.add_subcommand("register", "Register a moving image onto a fixed image");
    c_reg->add_option("--fixed", reg.fixed, "Fixed image volume")->required();
    c_reg->add_option("--moving", reg.moving, "Moving image volume")->required();
    c_reg->add_option("--fixed-mask", reg.fixed_mask, "Fixed lobe label volume");
    c_reg->add_option("--moving-mask", reg.moving_mask, "Moving lobe label volume");
    c_reg->add_option("--keypoints", reg.keypoints, "Keypoint pairs (fx fy fz mx my mz per line)");
    c_reg->add_option("--config", reg.config, "Registration config file");
    c_reg->add_option("--out-field", reg.out_field, "Output displacement field (mm)");
    c_reg->add_option("--out-warped", reg.out_warped, "Output warped moving image");
    c_reg->add_option("--report", reg.report, "Run manifest path (stdout if omitted)");
    c_reg->add_option("--levels", reg.levels, "Pyramid levels, overrides the config")->check(CLI::Range(1, 4));
    c_reg->add_option("--seed", reg.seed, "Seed recorded in the manifest");
    c_reg->add_flag("--deterministic", reg.deterministic, "Byte-stable outputs (no timings)");
    c_reg->add_flag("--float32", reg.float32, "Store output volumes as float32");

    EvaluateOptions ev;
    auto *c_ev = app.add_subcommand("evaluate", "Overlap, surface, TRE and folding metrics of a field");
    c_ev->add_option("--field", ev.field, "Displacement field")->required();
    c_ev->add_option("--fixed-mask", ev.fixed_mask, "Fixed label volume");
    c_ev->add_option("--moving-mask", ev.moving_mask, "Moving label volume");
    c_ev->add_option("--keypoints", ev.keypoints, "Keypoint pairs");
    c_ev->add_option("--report", ev.report, "Report path (stdout if omitted)");

    JacobianOptions jac;
    auto *c_jac = app.add_subcommand("jacobian", "Jacobian determinant volume and folding statistics");
    c_jac->add_option("--field", jac.field, "Displacement field")->required();
    c_jac->add_option("--mask", jac.mask, "Restrict statistics to nonzero voxels");
    c_jac->add_option("--out", jac.out, "Output determinant volume");
    c_jac->add_option("--report", jac.report, "Report path (stdout if omitted)");

    PhantomOptions ph;
    auto *c_ph = app.add_subcommand("phantom", "Write a synthetic registration case");
    c_ph->add_option("--spec", ph.spec, "Phantom parameter file");
    c_ph->add_option("--seed", ph.seed, "Seed, overrides the value in the phantom file");
    c_ph->add_option("--out-dir", ph.out_dir, "Output directory")->required();

    WarpOptions wp;
    auto *c_wp = app.add_subcommand("warp", "Apply a displacement field to a volume");
    c_wp->add_option("--field", wp.field, "Displacement field")->required();
    c_wp->add_option("--input", wp.input, "Scalar or label volume")->required();
    c_wp->add_option("--out", wp.out, "Output volume")->required();
    c_wp->add_flag("--float32", wp.float32, "Store scalar output as float32");

    std::vector<std::string> storage{"lungreg"};
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<char *> argv;
    for (auto &s : storage) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::Success &e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError &e) {
        err << "error: " << e.what() << "\n\n";
        CLI::App *shown = &app;
        for (CLI::App *sub : app.get_subcommands()) shown = sub;
        err << shown->help();
        return kInputError;
    }

    try {
        if (c_reg->parsed()) return run_register(reg, out, err);
        if (c_ev->parsed()) return run_evaluate(ev, out, err);
        if (c_jac->parsed()) return run_jacobian(jac, out, err);
        if (c_ph->parsed()) return run_phantom(ph, out, err);
        if (c_wp->parsed()) return run_warp(wp, out, err);
    } catch (const NonFiniteLossError &e) {
        err << "error: " << e.what() << '\n';
        return kNonFiniteLoss;
    } catch (const FormatError &e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::invalid_argument &e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kInputError;
}

} // namespace lungreg::cli

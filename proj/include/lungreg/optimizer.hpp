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

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lungreg/losses.hpp"
#include "lungreg/volume.hpp"

namespace lungreg {

/// Settings of one pyramid level.
struct LevelConfig {
    int iterations = 100;
    double step_size = 0.5; // mm per update at the start of the moment estimates
    double t = 0.2;         // barrier parameter
    double delta = 0.0;     // keypoint weight
};

struct RegistrationConfig {
    int levels = 3;
    std::vector<LevelConfig> level_configs; // coarsest first, size == levels
    LossWeights weights;                    // alpha, beta, gamma, epsilon; t/delta come per level
    std::uint64_t seed = 0;
    bool deterministic = false; // computation is always reproducible; this only drops timings from reports

    /// Default schedule for 1..4 levels: t halves from 0.2 per finer level,
    /// delta is 0 on the coarsest level of a multilevel run and 1e7 elsewhere.
    static RegistrationConfig defaults(int levels = 3);

    int total_iterations() const;
    void validate() const;
};

/// Moment-estimate (Adam) update rule used for instance optimization.
struct AdamSettings {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double stabilizer = 1e-8;
};

struct LevelInputs {
    const ScalarVolume *fixed = nullptr;
    const ScalarVolume *moving = nullptr; // already warped by the current estimate
    const ChannelVolume *fixed_mask = nullptr;
    const ChannelVolume *moving_mask = nullptr; // already warped
    const KeypointPairSet *keypoints = nullptr;
    const DisplacementField *prior = nullptr; // estimate applied to the moving side
};

struct LevelResult {
    DisplacementField residual;
    std::vector<LossReport> history; // one entry per iteration plus the final state
    std::vector<std::string> warnings;
};

/// Runs cfg.iterations Adam steps on a zero-initialized residual field.
/// Throws NonFiniteLossError if the objective becomes non-finite.
LevelResult optimize_level(const LevelInputs &inputs, const LevelConfig &cfg,
                           const LossWeights &weights, int level_index = 0);

struct LevelSummary {
    int level = 0; // 1 = finest
    WorldGrid grid;
    LevelConfig config;
    std::vector<LossReport> history;
    double fullres_distance = 0.0; // masked NGF of M(u_acc) vs F after this level
    double seconds = 0.0;
};

struct RegistrationSummary {
    double initial_distance = 0.0;
    double final_distance = 0.0;
    double folding_fraction = 0.0;
    double min_jacobian = 0.0;
    double max_jacobian = 0.0;
    std::optional<double> initial_tre_mean;
    std::optional<double> final_tre_mean;
};

struct RegistrationResult {
    DisplacementField field; // on the fixed grid, mm
    std::vector<LevelSummary> levels; // in execution order (coarsest first)
    RegistrationSummary summary;
    std::vector<std::string> warnings;
};

struct RegistrationInputs {
    const ScalarVolume *fixed = nullptr;
    const ScalarVolume *moving = nullptr;
    const LabelVolume *fixed_mask = nullptr;
    const LabelVolume *moving_mask = nullptr;
    const KeypointPairSet *keypoints = nullptr;
};

using LevelCallback = std::function<void(const LevelSummary &)>;

/// Coarse-to-fine registration: at each level the moving image and mask are
/// warped at full resolution with the accumulated field, downsampled, and a
/// residual is optimized and composed onto the accumulated field.
RegistrationResult register_multilevel(const RegistrationInputs &inputs,
                                       const RegistrationConfig &cfg,
                                       const LevelCallback &on_level = {});

// ---------------------------------------------------------------------------
// Ablation

struct AblationToggle {
    enum class Kind { Baseline, NoMask, NoVcc, NoKeypoints, Levels };
    Kind kind = Kind::Baseline;
    int levels = 0;

    static AblationToggle baseline() { return {}; }
    static AblationToggle no_mask() { return {Kind::NoMask, 0}; }
    static AblationToggle no_vcc() { return {Kind::NoVcc, 0}; }
    static AblationToggle no_keypoints() { return {Kind::NoKeypoints, 0}; }
    static AblationToggle with_levels(int n) { return {Kind::Levels, n}; }

    std::string name() const;
};

/// Config for one ablation arm. Weight toggles zero the weight; a level
/// toggle keeps the first (coarsest) n level configs with iterations rescaled to the
/// base total budget.
RegistrationConfig apply_toggle(const RegistrationConfig &base, const AblationToggle &toggle);

struct AblationRow {
    std::string name;
    RegistrationConfig config;
    RegistrationResult result;
    double mean_dice = 0.0;      // NaN without masks
    double tre_mean = 0.0;       // NaN without evaluation landmarks
    double folding_percent = 0.0;
};

/// Baseline first, then one row per toggle.
std::vector<AblationRow> ablation_run(const RegistrationInputs &inputs,
                                      const RegistrationConfig &base,
                                      const std::vector<AblationToggle> &toggles,
                                      const KeypointPairSet *evaluation_landmarks = nullptr);

} // namespace lungreg

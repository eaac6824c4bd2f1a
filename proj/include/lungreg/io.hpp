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

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "lungreg/errors.hpp"
#include "lungreg/optimizer.hpp"
#include "lungreg/phantom.hpp"
#include "lungreg/volume.hpp"

namespace lungreg {

// ---------------------------------------------------------------------------
// Volumes: MetaImage-style text header plus raw little-endian payload. A
// ".mha" file carries the payload after the header (ElementDataFile = LOCAL);
// a ".mhd" header names a sibling ".raw" file.

enum class ElementType { Float32, Float64, Int16, UInt8 };

std::string_view element_type_name(ElementType type); // MET_FLOAT, ...
std::size_t element_size(ElementType type);

struct VolumeHeader {
    Dims dims{1, 1, 1};
    Vec3 spacing{1.0, 1.0, 1.0};
    Vec3 origin{};
    ElementType type = ElementType::Float64;
    int channels = 1;
    std::string data_file = "LOCAL";
    std::size_t payload_offset = 0; // byte offset of the payload when LOCAL

    WorldGrid grid() const { return {dims, spacing, origin}; }
    std::size_t payload_bytes() const;
};

/// Parses and validates the header. Throws FormatError whose kind() tells a
/// missing key, unsupported ElementType, big-endian declaration or malformed
/// line apart.
VolumeHeader read_volume_header(const std::filesystem::path &path);

/// 3-channel float volumes load as DisplacementField, integer volumes as
/// LabelVolume, single-channel float volumes as ScalarVolume.
using AnyVolume = std::variant<ScalarVolume, LabelVolume, DisplacementField>;
AnyVolume read_volume(const std::filesystem::path &path);

// Typed readers; integer volumes convert to scalars, anything else that does
// not match throws FormatError(UnsupportedType).
ScalarVolume read_scalar_volume(const std::filesystem::path &path);
LabelVolume read_label_volume(const std::filesystem::path &path);
DisplacementField read_field(const std::filesystem::path &path);

/// Writers are atomic (temporary file plus rename) and reject zero-voxel
/// volumes. Scalars and fields default to float64; float32 must be asked for.
/// Integer element types require integral in-range values.
void write_volume(const ScalarVolume &vol, const std::filesystem::path &path,
                  ElementType type = ElementType::Float64);
void write_volume(const LabelVolume &vol, const std::filesystem::path &path,
                  ElementType type = ElementType::Int16);
void write_volume(const DisplacementField &field, const std::filesystem::path &path,
                  ElementType type = ElementType::Float64);

// ---------------------------------------------------------------------------
// Keypoints: one pair per line "fx fy fz mx my mz" in mm, '#' starts a comment.

KeypointPairSet parse_keypoints(std::string_view text, const std::string &source = "<text>");
KeypointPairSet read_keypoints(const std::filesystem::path &path);
void write_keypoints(const KeypointPairSet &pairs, const std::filesystem::path &path);

/// Shortest decimal text that parses back to the same double, independent of
/// the global locale.
std::string format_number(double v);
double parse_number(std::string_view text); // throws std::invalid_argument

// ---------------------------------------------------------------------------
// Config: "key = value" lines; per-level settings live in [level.N] sections
// with N = 1 the finest level. Unknown keys are errors.
//
//   levels = 3
//   alpha = 10
//   [level.3]
//   iterations = 300

/// When levels_override is set it replaces the file's level count and
/// sections for levels beyond it are ignored.
RegistrationConfig parse_config(std::string_view text, const std::string &source = "<text>",
                                std::optional<int> levels_override = std::nullopt);
RegistrationConfig read_config(const std::filesystem::path &path,
                               std::optional<int> levels_override = std::nullopt);
std::string config_to_text(const RegistrationConfig &cfg);

// Phantom spec files use the same syntax without sections.
PhantomSpec parse_phantom_spec(std::string_view text, const std::string &source = "<text>");
PhantomSpec read_phantom_spec(const std::filesystem::path &path);
std::string phantom_spec_to_text(const PhantomSpec &spec);

// ---------------------------------------------------------------------------

/// Writes text to path through a temporary sibling and a rename.
void write_text_atomic(const std::filesystem::path &path, std::string_view text);
std::string read_text(const std::filesystem::path &path);

inline constexpr std::string_view kToolVersion = "0.1.0";

} // namespace lungreg

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

#include <string>
#include <string_view>

#include <json.hpp>

#include "lungreg/metrics.hpp"
#include "lungreg/optimizer.hpp"

namespace lungreg {

using ReportDocument = nlohmann::ordered_json;

/// Report text: one "key: value" line per top-level scalar of doc, then a
/// "--- json" marker and the whole document as indented JSON.
std::string render_report(const ReportDocument &doc);

/// Parses the JSON block of a rendered report. Throws FormatError.
ReportDocument parse_report(std::string_view text);

/// The config snapshot stored under "config" by the register command.
RegistrationConfig config_from_report(std::string_view text);

ReportDocument to_json(const DistanceStats &s);
ReportDocument to_json(const FoldingStats &s);
ReportDocument to_json(const LossReport &r);
ReportDocument to_json(const MetricsReport &m);

} // namespace lungreg

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
#include "lungreg/report.hpp"

#include <cmath>

#include "lungreg/io.hpp"

namespace lungreg {

namespace {

constexpr std::string_view kJsonMarker = "--- json\n";

ReportDocument number(double v) {
    // JSON has no infinities; keep them readable instead of silently null.
    if (std::isfinite(v)) return v;
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

} // namespace

std::string render_report(const ReportDocument &doc) {
    std::string out;
    for (const auto &[key, value] : doc.items()) {
        std::string text;
        if (value.is_number_float()) text = format_number(value.get<double>());
        else if (value.is_number_integer() || value.is_boolean()) text = value.dump();
        else if (value.is_string() && value.get<std::string>().find('\n') == std::string::npos)
            text = value.get<std::string>();
        else continue;
        out += key + ": " + text + '\n';
    }
    out += '\n';
    out += kJsonMarker;
    out += doc.dump(2);
    out += '\n';
    return out;
}

ReportDocument parse_report(std::string_view text) {
    const auto at = text.find(kJsonMarker);
    if (at == std::string_view::npos) {
        throw FormatError(FormatErrorKind::Malformed, "report: missing json block");
    }
    try {
        return ReportDocument::parse(text.substr(at + kJsonMarker.size()));
    } catch (const nlohmann::json::exception &e) {
        throw FormatError(FormatErrorKind::Malformed, std::string("report: ") + e.what());
    }
}

RegistrationConfig config_from_report(std::string_view text) {
    const ReportDocument doc = parse_report(text);
    if (!doc.contains("config") || !doc["config"].is_string()) {
        throw FormatError(FormatErrorKind::MissingKey, "report: no config snapshot");
    }
    return parse_config(doc["config"].get<std::string>(), "report config");
}

ReportDocument to_json(const DistanceStats &s) {
    return {{"mean", number(s.mean)}, {"std", number(s.std)}, {"p25", number(s.p25)},
            {"p50", number(s.p50)},   {"p75", number(s.p75)}, {"max", number(s.max)}};
}

ReportDocument to_json(const FoldingStats &s) {
    ReportDocument hist = ReportDocument::array();
    for (std::size_t c : s.histogram) hist.push_back(c);
    ReportDocument edges = ReportDocument::array();
    for (int b = 0; b <= kFoldingHistogramBins; ++b) edges.push_back(folding_bin_edge(b));
    return {{"fraction", number(s.fraction)},
            {"min", number(s.min)},
            {"max", number(s.max)},
            {"voxels", s.voxels},
            {"folded", s.folded},
            {"histogram_underflow", s.underflow},
            {"histogram_edges", edges},
            {"histogram", hist}};
}

ReportDocument to_json(const LossReport &r) {
    return {{"total", number(r.total)},
            {"distance", number(r.distance)},
            {"curvature", number(r.curvature)},
            {"vcc", number(r.vcc)},
            {"mask", number(r.mask)},
            {"keypoint", number(r.keypoint)},
            {"folding_fraction", number(r.folding_fraction)}};
}

ReportDocument to_json(const MetricsReport &m) {
    ReportDocument doc;
    if (!m.labels.empty()) {
        ReportDocument labels = ReportDocument::array();
        for (const auto &l : m.labels) {
            ReportDocument e{{"label", l.label}, {"dice", number(l.dice)}};
            e["asd"] = l.asd ? number(*l.asd) : ReportDocument();
            e["hausdorff"] = l.hausdorff ? number(*l.hausdorff) : ReportDocument();
            labels.push_back(e);
        }
        doc["labels"] = labels;
        doc["mean_dice"] = number(m.mean_dice);
        if (m.mean_asd) doc["mean_asd"] = number(*m.mean_asd);
        if (m.mean_hausdorff) doc["mean_hausdorff"] = number(*m.mean_hausdorff);
    }
    if (m.tre_before) doc["tre_before"] = to_json(*m.tre_before);
    if (m.tre_after) doc["tre_after"] = to_json(*m.tre_after);
    doc["folding"] = to_json(m.folding);
    return doc;
}

} // namespace lungreg

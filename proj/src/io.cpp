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
#include "lungreg/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <vector>

namespace lungreg {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (char &c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

[[noreturn]] void fail(FormatErrorKind kind, const fs::path &path, const std::string &msg) {
    throw FormatError(kind, path.string() + ": " + msg);
}

std::int64_t parse_int(std::string_view s) {
    std::int64_t v = 0;
    const auto *end = s.data() + s.size();
    const auto r = std::from_chars(s.data(), end, v);
    if (r.ec != std::errc() || r.ptr != end) {
        throw std::invalid_argument("not an integer: '" + std::string(s) + "'");
    }
    return v;
}

bool parse_bool(std::string_view s) {
    const std::string v = lower(s);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::invalid_argument("not a boolean: '" + std::string(s) + "'");
}

// ---------------------------------------------------------------- element types

std::optional<ElementType> element_type_from(std::string_view name) {
    const std::string n = lower(name);
    if (n == "met_float" || n == "float32") return ElementType::Float32;
    if (n == "met_double" || n == "float64") return ElementType::Float64;
    if (n == "met_short" || n == "int16") return ElementType::Int16;
    if (n == "met_uchar" || n == "uint8") return ElementType::UInt8;
    return std::nullopt;
}

bool is_integer_type(ElementType t) { return t == ElementType::Int16 || t == ElementType::UInt8; }

template <class T>
void put_le(std::vector<char> &out, T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    out.insert(out.end(), b, b + sizeof(T));
}

template <class T>
T get_le(const char *p) {
    char b[sizeof(T)];
    std::memcpy(b, p, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
}

void encode(std::vector<char> &out, double v, ElementType type) {
    switch (type) {
    case ElementType::Float32: put_le(out, static_cast<float>(v)); break;
    case ElementType::Float64: put_le(out, v); break;
    case ElementType::Int16: put_le(out, static_cast<std::int16_t>(v)); break;
    case ElementType::UInt8: put_le(out, static_cast<std::uint8_t>(v)); break;
    }
}

double decode(const char *p, ElementType type) {
    switch (type) {
    case ElementType::Float32: return get_le<float>(p);
    case ElementType::Float64: return get_le<double>(p);
    case ElementType::Int16: return get_le<std::int16_t>(p);
    case ElementType::UInt8: return get_le<std::uint8_t>(p);
    }
    return 0.0;
}

void check_representable(double v, ElementType type, const fs::path &path) {
    if (!is_integer_type(type)) return;
    const double lo = type == ElementType::Int16 ? -32768.0 : 0.0;
    const double hi = type == ElementType::Int16 ? 32767.0 : 255.0;
    if (!(v == std::floor(v) && v >= lo && v <= hi)) {
        throw std::invalid_argument(path.string() + ": value " + format_number(v) + " does not fit " +
                                    std::string(element_type_name(type)));
    }
}

// ---------------------------------------------------------------- file helpers

std::vector<char> read_bytes(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(FormatErrorKind::Io, path, "cannot open for reading");
    std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) fail(FormatErrorKind::Io, path, "read failed");
    return data;
}

fs::path temp_sibling(const fs::path &path) {
    static std::mt19937_64 rng(std::random_device{}());
    std::ostringstream name;
    name << '.' << path.filename().string() << ".tmp" << std::hex << rng();
    return path.parent_path() / name.str();
}

void write_bytes_atomic(const fs::path &path, std::string_view header, const std::vector<char> *payload) {
    const fs::path tmp = temp_sibling(path);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(FormatErrorKind::Io, path, "cannot open for writing");
        out.write(header.data(), static_cast<std::streamsize>(header.size()));
        if (payload) out.write(payload->data(), static_cast<std::streamsize>(payload->size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            fail(FormatErrorKind::Io, path, "write failed");
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        fail(FormatErrorKind::Io, path, "rename failed: " + ec.message());
    }
}

// ---------------------------------------------------------------- volume io

struct RawVolume {
    VolumeHeader header;
    std::vector<double> values; // channel-interleaved, x fastest
};

RawVolume load_raw(const fs::path &path) {
    RawVolume rv;
    rv.header = read_volume_header(path);
    const VolumeHeader &h = rv.header;
    std::vector<char> bytes;
    std::size_t offset = 0;
    if (h.data_file == "LOCAL") {
        bytes = read_bytes(path);
        offset = h.payload_offset;
    } else {
        bytes = read_bytes(path.parent_path() / h.data_file);
    }
    const std::size_t expected = h.payload_bytes();
    const std::size_t actual = bytes.size() - std::min(offset, bytes.size());
    if (actual != expected) {
        fail(FormatErrorKind::SizeMismatch, path,
             "payload has " + std::to_string(actual) + " bytes, header declares " +
                 std::to_string(expected));
    }
    const std::size_t es = element_size(h.type);
    const std::size_t count = expected / es;
    rv.values.resize(count);
    for (std::size_t n = 0; n < count; ++n) rv.values[n] = decode(bytes.data() + offset + n * es, h.type);
    return rv;
}

std::string header_text(const WorldGrid &g, ElementType type, int channels,
                         const std::string &data_file) {
    std::ostringstream h;
    auto triple = [&](const Vec3 &v) {
        return format_number(v.x) + ' ' + format_number(v.y) + ' ' + format_number(v.z);
    };
    h << "ObjectType = Image\n"
      << "NDims = 3\n"
      << "BinaryData = True\n"
      << "BinaryDataByteOrderMSB = False\n"
      << "CompressedData = False\n"
      << "DimSize = " << g.dim(0) << ' ' << g.dim(1) << ' ' << g.dim(2) << '\n'
      << "ElementSpacing = " << triple(g.spacing()) << '\n'
      << "Offset = " << triple(g.origin()) << '\n'
      << "ElementNumberOfChannels = " << channels << '\n'
      << "ElementType = " << element_type_name(type) << '\n'
      << "ElementDataFile = " << data_file << '\n';
    return h.str();
}

void write_payload(const WorldGrid &g, const fs::path &path, ElementType type, int channels,
                   const std::vector<char> &payload) {
    const std::size_t expected = g.voxel_count() * static_cast<std::size_t>(channels) * element_size(type);
    if (payload.empty() || payload.size() != expected) {
        throw std::invalid_argument(path.string() + ": refusing to write a zero-voxel or inconsistent volume");
    }
    const std::string ext = lower(path.extension().string());
    if (ext == ".mhd") {
        fs::path raw = path;
        raw.replace_extension(".raw");
        write_bytes_atomic(raw, {}, &payload);
        write_bytes_atomic(path, header_text(g, type, channels, raw.filename().string()), nullptr);
    } else {
        write_bytes_atomic(path, header_text(g, type, channels, "LOCAL"), &payload);
    }
}

// ---------------------------------------------------------------- key/value text

struct Entry {
    std::string section;
    std::string key;
    std::string value;
    int line = 0;
};

std::vector<Entry> parse_key_values(std::string_view text, const std::string &source,
                                    bool allow_sections) {
    std::vector<Entry> out;
    std::string section;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = source + ":" + std::to_string(line_no);
        if (line.front() == '[') {
            if (!allow_sections || line.back() != ']') {
                throw FormatError(FormatErrorKind::Malformed, where + ": unexpected section header");
            }
            section = std::string(trim(line.substr(1, line.size() - 2)));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw FormatError(FormatErrorKind::Malformed, where + ": expected 'key = value'");
        }
        Entry e{section, std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))),
                line_no};
        if (e.key.empty() || e.value.empty()) {
            throw FormatError(FormatErrorKind::Malformed, where + ": empty key or value");
        }
        out.push_back(std::move(e));
    }
    return out;
}

template <class Fn>
void apply_entry(const Entry &e, const std::string &source, Fn &&fn) {
    try {
        if (!fn(e)) {
            throw FormatError(FormatErrorKind::Malformed, source + ":" + std::to_string(e.line) +
                                                              ": unknown key '" + e.key + "'");
        }
    } catch (const std::invalid_argument &ex) {
        throw FormatError(FormatErrorKind::Malformed,
                          source + ":" + std::to_string(e.line) + ": " + e.key + ": " + ex.what());
    }
}

} // namespace

// --------------------------------------------------------------------------- numbers

std::string format_number(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

double parse_number(std::string_view text) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    const auto *end = text.data() + text.size();
    const auto r = std::from_chars(text.data(), end, v);
    if (text.empty() || r.ec != std::errc() || r.ptr != end) {
        throw std::invalid_argument("not a number: '" + std::string(text) + "'");
    }
    return v;
}

// --------------------------------------------------------------------------- volumes

std::string_view element_type_name(ElementType type) {
    switch (type) {
    case ElementType::Float32: return "MET_FLOAT";
    case ElementType::Float64: return "MET_DOUBLE";
    case ElementType::Int16: return "MET_SHORT";
    case ElementType::UInt8: return "MET_UCHAR";
    }
    return "MET_UNKNOWN";
}

std::size_t element_size(ElementType type) {
    switch (type) {
    case ElementType::Float32: return 4;
    case ElementType::Float64: return 8;
    case ElementType::Int16: return 2;
    case ElementType::UInt8: return 1;
    }
    return 0;
}

std::size_t VolumeHeader::payload_bytes() const {
    return static_cast<std::size_t>(dims[0] * dims[1] * dims[2]) * static_cast<std::size_t>(channels) *
           element_size(type);
}

VolumeHeader read_volume_header(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(FormatErrorKind::Io, path, "cannot open for reading");

    std::map<std::string, std::string> keys;
    std::size_t consumed = 0;
    bool done = false;
    std::string line;
    while (!done && std::getline(in, line)) {
        consumed += line.size() + 1;
        const std::string_view l = trim(line);
        if (l.empty()) continue;
        const auto eq = l.find('=');
        if (eq == std::string_view::npos) fail(FormatErrorKind::Malformed, path, "bad header line '" + line + "'");
        std::string key(trim(l.substr(0, eq)));
        keys[key] = std::string(trim(l.substr(eq + 1)));
        done = key == "ElementDataFile";
        if (consumed > (1u << 16)) fail(FormatErrorKind::Malformed, path, "header too long");
    }

    auto need = [&](const char *k) -> const std::string & {
        const auto it = keys.find(k);
        if (it == keys.end()) fail(FormatErrorKind::MissingKey, path, std::string("missing header key ") + k);
        return it->second;
    };

    VolumeHeader h;
    try {
        if (parse_int(need("NDims")) != 3) {
            fail(FormatErrorKind::UnsupportedType, path, "only NDims = 3 is supported");
        }
        const auto dims = split_ws(need("DimSize"));
        const auto spacing = split_ws(need("ElementSpacing"));
        const auto offset = split_ws(need("Offset"));
        if (dims.size() != 3 || spacing.size() != 3 || offset.size() != 3) {
            fail(FormatErrorKind::Malformed, path, "DimSize, ElementSpacing and Offset need 3 values");
        }
        for (int a = 0; a < 3; ++a) {
            h.dims[a] = parse_int(dims[a]);
            h.spacing[a] = parse_number(spacing[a]);
            h.origin[a] = parse_number(offset[a]);
            if (h.dims[a] <= 0 || !(h.spacing[a] > 0.0) || !std::isfinite(h.spacing[a]) ||
                !std::isfinite(h.origin[a])) {
                fail(FormatErrorKind::Malformed, path, "dims and spacing must be positive");
            }
        }
        const auto type = element_type_from(need("ElementType"));
        if (!type) fail(FormatErrorKind::UnsupportedType, path, "unsupported ElementType " + keys["ElementType"]);
        h.type = *type;
        if (const auto it = keys.find("ElementNumberOfChannels"); it != keys.end()) {
            h.channels = static_cast<int>(parse_int(it->second));
        }
        if (h.channels != 1 && h.channels != 3) {
            fail(FormatErrorKind::UnsupportedType, path, "ElementNumberOfChannels must be 1 or 3");
        }
        h.data_file = need("ElementDataFile");
    } catch (const std::invalid_argument &e) {
        fail(FormatErrorKind::Malformed, path, e.what());
    }
    for (const char *k : {"BinaryDataByteOrderMSB", "ElementByteOrderMSB"}) {
        if (const auto it = keys.find(k); it != keys.end() && lower(it->second) == "true") {
            fail(FormatErrorKind::ByteOrder, path, "big-endian payloads are not supported");
        }
    }
    if (const auto it = keys.find("CompressedData"); it != keys.end() && lower(it->second) == "true") {
        fail(FormatErrorKind::UnsupportedType, path, "compressed payloads are not supported");
    }
    if (h.data_file == "LOCAL") h.payload_offset = consumed;
    return h;
}

AnyVolume read_volume(const fs::path &path) {
    RawVolume rv = load_raw(path);
    const VolumeHeader &h = rv.header;
    const WorldGrid grid = h.grid();
    if (h.channels == 3) {
        if (is_integer_type(h.type)) {
            fail(FormatErrorKind::UnsupportedType, path, "3-channel volumes must be floating point");
        }
        DisplacementField u(grid);
        for (std::size_t n = 0; n < u.size(); ++n) {
            u[n] = {rv.values[3 * n], rv.values[3 * n + 1], rv.values[3 * n + 2]};
        }
        return u;
    }
    if (is_integer_type(h.type)) {
        std::vector<std::int32_t> labels(rv.values.size());
        int max_label = 0;
        for (std::size_t n = 0; n < labels.size(); ++n) {
            labels[n] = static_cast<std::int32_t>(rv.values[n]);
            if (labels[n] < 0) fail(FormatErrorKind::Malformed, path, "negative label");
            max_label = std::max(max_label, labels[n]);
        }
        return LabelVolume(grid, std::move(labels), max_label);
    }
    return ScalarVolume(grid, std::move(rv.values));
}

ScalarVolume read_scalar_volume(const fs::path &path) {
    // Decoded directly so that signed integer images (e.g. Hounsfield units)
    // do not go through label validation.
    RawVolume rv = load_raw(path);
    if (rv.header.channels != 1) fail(FormatErrorKind::UnsupportedType, path, "expected a single-channel volume");
    return ScalarVolume(rv.header.grid(), std::move(rv.values));
}

LabelVolume read_label_volume(const fs::path &path) {
    AnyVolume v = read_volume(path);
    if (auto *l = std::get_if<LabelVolume>(&v)) return std::move(*l);
    fail(FormatErrorKind::UnsupportedType, path, "expected an integer label volume");
}

DisplacementField read_field(const fs::path &path) {
    AnyVolume v = read_volume(path);
    if (auto *u = std::get_if<DisplacementField>(&v)) return std::move(*u);
    fail(FormatErrorKind::UnsupportedType, path, "expected a 3-channel displacement field");
}

void write_volume(const ScalarVolume &vol, const fs::path &path, ElementType type) {
    std::vector<char> payload;
    payload.reserve(vol.size() * element_size(type));
    for (std::size_t n = 0; n < vol.size(); ++n) {
        check_representable(vol[n], type, path);
        encode(payload, vol[n], type);
    }
    write_payload(vol.grid(), path, type, 1, payload);
}

void write_volume(const LabelVolume &vol, const fs::path &path, ElementType type) {
    if (!is_integer_type(type)) {
        throw std::invalid_argument(path.string() + ": label volumes need an integer element type");
    }
    std::vector<char> payload;
    payload.reserve(vol.size() * element_size(type));
    for (std::size_t n = 0; n < vol.size(); ++n) {
        check_representable(vol[n], type, path);
        encode(payload, vol[n], type);
    }
    write_payload(vol.grid(), path, type, 1, payload);
}

void write_volume(const DisplacementField &field, const fs::path &path, ElementType type) {
    if (is_integer_type(type)) {
        throw std::invalid_argument(path.string() + ": displacement fields need a float element type");
    }
    std::vector<char> payload;
    payload.reserve(field.size() * 3 * element_size(type));
    for (std::size_t n = 0; n < field.size(); ++n) {
        for (int a = 0; a < 3; ++a) encode(payload, field[n][a], type);
    }
    write_payload(field.grid(), path, type, 3, payload);
}

// --------------------------------------------------------------------------- keypoints

KeypointPairSet parse_keypoints(std::string_view text, const std::string &source) {
    KeypointPairSet set;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const auto fields = split_ws(line);
        if (fields.empty()) continue;
        const std::string where = source + ":" + std::to_string(line_no);
        if (fields.size() != 6) {
            throw FormatError(FormatErrorKind::Malformed,
                              where + ": expected 6 numbers, found " + std::to_string(fields.size()));
        }
        double v[6];
        for (int i = 0; i < 6; ++i) {
            try {
                v[i] = parse_number(fields[static_cast<std::size_t>(i)]);
            } catch (const std::invalid_argument &e) {
                throw FormatError(FormatErrorKind::Malformed, where + ": " + e.what());
            }
            if (!std::isfinite(v[i])) {
                throw FormatError(FormatErrorKind::Malformed, where + ": non-finite coordinate");
            }
        }
        set.pairs.push_back({{v[0], v[1], v[2]}, {v[3], v[4], v[5]}});
    }
    return set;
}

KeypointPairSet read_keypoints(const fs::path &path) {
    return parse_keypoints(read_text(path), path.string());
}

void write_keypoints(const KeypointPairSet &pairs, const fs::path &path) {
    std::string out = "# fx fy fz mx my mz (mm)\n";
    for (const auto &p : pairs.pairs) {
        out += format_number(p.fixed.x) + ' ' + format_number(p.fixed.y) + ' ' + format_number(p.fixed.z) +
               ' ' + format_number(p.moving.x) + ' ' + format_number(p.moving.y) + ' ' +
               format_number(p.moving.z) + '\n';
    }
    write_text_atomic(path, out);
}

// --------------------------------------------------------------------------- config

RegistrationConfig parse_config(std::string_view text, const std::string &source,
                                std::optional<int> levels_override) {
    const std::vector<Entry> entries = parse_key_values(text, source, true);

    int levels = 3;
    for (const Entry &e : entries) {
        if (e.section.empty() && e.key == "levels") {
            apply_entry(e, source, [&](const Entry &x) {
                levels = static_cast<int>(parse_int(x.value));
                return true;
            });
        }
    }
    if (levels_override) levels = *levels_override;
    RegistrationConfig cfg;
    try {
        cfg = RegistrationConfig::defaults(levels);
    } catch (const std::invalid_argument &e) {
        throw FormatError(FormatErrorKind::Malformed, source + ": " + e.what());
    }

    for (const Entry &e : entries) {
        if (e.section.empty()) {
            apply_entry(e, source, [&](const Entry &x) {
                LossWeights &w = cfg.weights;
                if (x.key == "levels") return true;
                if (x.key == "alpha") w.alpha = parse_number(x.value);
                else if (x.key == "beta") w.beta = parse_number(x.value);
                else if (x.key == "gamma") w.gamma = parse_number(x.value);
                else if (x.key == "epsilon") w.epsilon = parse_number(x.value);
                else if (x.key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(x.value));
                else if (x.key == "deterministic") cfg.deterministic = parse_bool(x.value);
                else return false;
                return true;
            });
            continue;
        }
        const std::string where = source + ":" + std::to_string(e.line);
        if (e.section.rfind("level.", 0) != 0) {
            throw FormatError(FormatErrorKind::Malformed, where + ": unknown section [" + e.section + "]");
        }
        int n = 0;
        try {
            n = static_cast<int>(parse_int(std::string_view(e.section).substr(6)));
        } catch (const std::invalid_argument &) {
            throw FormatError(FormatErrorKind::Malformed, where + ": bad section [" + e.section + "]");
        }
        if (n < 1 || n > levels) {
            if (levels_override && n > levels) continue;
            throw FormatError(FormatErrorKind::Malformed,
                              where + ": section [" + e.section + "] outside 1.." + std::to_string(levels));
        }
        LevelConfig &lc = cfg.level_configs[static_cast<std::size_t>(levels - n)];
        apply_entry(e, source, [&](const Entry &x) {
            if (x.key == "iterations") lc.iterations = static_cast<int>(parse_int(x.value));
            else if (x.key == "step_size") lc.step_size = parse_number(x.value);
            else if (x.key == "t") lc.t = parse_number(x.value);
            else if (x.key == "delta") lc.delta = parse_number(x.value);
            else return false;
            return true;
        });
    }
    try {
        cfg.validate();
    } catch (const std::invalid_argument &e) {
        throw FormatError(FormatErrorKind::Malformed, source + ": " + e.what());
    }
    return cfg;
}

RegistrationConfig read_config(const fs::path &path, std::optional<int> levels_override) {
    return parse_config(read_text(path), path.string(), levels_override);
}

std::string config_to_text(const RegistrationConfig &cfg) {
    std::ostringstream o;
    o << "levels = " << cfg.levels << '\n'
      << "alpha = " << format_number(cfg.weights.alpha) << '\n'
      << "beta = " << format_number(cfg.weights.beta) << '\n'
      << "gamma = " << format_number(cfg.weights.gamma) << '\n'
      << "epsilon = " << format_number(cfg.weights.epsilon) << '\n'
      << "seed = " << cfg.seed << '\n'
      << "deterministic = " << (cfg.deterministic ? "true" : "false") << '\n';
    for (int l = 0; l < cfg.levels; ++l) {
        const LevelConfig &lc = cfg.level_configs[static_cast<std::size_t>(l)];
        o << "\n[level." << cfg.levels - l << "]\n"
          << "iterations = " << lc.iterations << '\n'
          << "step_size = " << format_number(lc.step_size) << '\n'
          << "t = " << format_number(lc.t) << '\n'
          << "delta = " << format_number(lc.delta) << '\n';
    }
    return o.str();
}

// --------------------------------------------------------------------------- phantom spec

PhantomSpec parse_phantom_spec(std::string_view text, const std::string &source) {
    PhantomSpec spec;
    for (const Entry &e : parse_key_values(text, source, false)) {
        apply_entry(e, source, [&](const Entry &x) {
            if (x.key == "dims" || x.key == "spacing") {
                const auto parts = split_ws(x.value);
                if (parts.size() != 3) throw std::invalid_argument("expected 3 values");
                for (int a = 0; a < 3; ++a) {
                    if (x.key == "dims") spec.dims[a] = parse_int(parts[static_cast<std::size_t>(a)]);
                    else spec.spacing[a] = parse_number(parts[static_cast<std::size_t>(a)]);
                }
            }
            else if (x.key == "bumps") spec.bumps = static_cast<int>(parse_int(x.value));
            else if (x.key == "max_amplitude") spec.max_amplitude = parse_number(x.value);
            else if (x.key == "bump_sigma") spec.bump_sigma = parse_number(x.value);
            else if (x.key == "structures") spec.structures = static_cast<int>(parse_int(x.value));
            else if (x.key == "structure_min_radius") spec.structure_min_radius = parse_number(x.value);
            else if (x.key == "structure_max_radius") spec.structure_max_radius = parse_number(x.value);
            else if (x.key == "lobes") spec.lobes = static_cast<int>(parse_int(x.value));
            else if (x.key == "keypoints") spec.keypoints = static_cast<int>(parse_int(x.value));
            else if (x.key == "landmarks") spec.landmarks = static_cast<int>(parse_int(x.value));
            else if (x.key == "seed") spec.seed = static_cast<std::uint64_t>(parse_int(x.value));
            else return false;
            return true;
        });
    }
    try {
        spec.validate();
    } catch (const std::invalid_argument &e) {
        throw FormatError(FormatErrorKind::Malformed, source + ": " + e.what());
    }
    return spec;
}

PhantomSpec read_phantom_spec(const fs::path &path) {
    return parse_phantom_spec(read_text(path), path.string());
}

std::string phantom_spec_to_text(const PhantomSpec &s) {
    std::ostringstream o;
    o << "dims = " << s.dims[0] << ' ' << s.dims[1] << ' ' << s.dims[2] << '\n'
      << "spacing = " << format_number(s.spacing.x) << ' ' << format_number(s.spacing.y) << ' '
      << format_number(s.spacing.z) << '\n'
      << "bumps = " << s.bumps << '\n'
      << "max_amplitude = " << format_number(s.max_amplitude) << '\n'
      << "bump_sigma = " << format_number(s.bump_sigma) << '\n'
      << "structures = " << s.structures << '\n'
      << "structure_min_radius = " << format_number(s.structure_min_radius) << '\n'
      << "structure_max_radius = " << format_number(s.structure_max_radius) << '\n'
      << "lobes = " << s.lobes << '\n'
      << "keypoints = " << s.keypoints << '\n'
      << "landmarks = " << s.landmarks << '\n'
      << "seed = " << s.seed << '\n';
    return o.str();
}

// --------------------------------------------------------------------------- text files

void write_text_atomic(const fs::path &path, std::string_view text) {
    write_bytes_atomic(path, text, nullptr);
}

std::string read_text(const fs::path &path) {
    const std::vector<char> bytes = read_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

} // namespace lungreg

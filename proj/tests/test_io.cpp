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

#include "io_cases.hpp"
#include "lungreg/io.hpp"

using namespace lungreg;
using io_cases::ScratchDir;

namespace {

void write_raw_file(const std::filesystem::path &path, const std::string &header, std::size_t payload_bytes) {
    std::ofstream out(path, std::ios::binary);
    out << header;
    const std::string zeros(payload_bytes, '\0');
    out.write(zeros.data(), static_cast<std::streamsize>(zeros.size()));
}

std::string header(const std::string &dims, const std::string &type, const std::string &extra = "") {
    return "ObjectType = Image\nNDims = 3\nBinaryData = True\n" + extra + "DimSize = " + dims +
           "\nElementSpacing = 1 1 1\nOffset = 0 0 0\nElementType = " + type + "\nElementDataFile = LOCAL\n";
}

FormatErrorKind read_error_kind(const std::filesystem::path &path) {
    try {
        (void)read_volume(path);
    } catch (const FormatError &e) {
        return e.kind();
    }
    FAIL("no FormatError for " << path.string());
    return FormatErrorKind::Io;
}

std::string slurp(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace

TEST_SUITE("io") {

TEST_CASE("2x2x2 float32 volume of zeros with a 32 byte payload") {
    ScratchDir dir("io");
    write_raw_file(dir / "z.mha", header("2 2 2", "MET_FLOAT"), 32);
    const AnyVolume v = read_volume(dir / "z.mha");
    REQUIRE(std::holds_alternative<ScalarVolume>(v));
    const auto &s = std::get<ScalarVolume>(v);
    CHECK(s.size() == 8);
    for (std::size_t n = 0; n < s.size(); ++n) CHECK(s[n] == 0.0);
}

TEST_CASE("declared size larger than payload is a size mismatch") {
    ScratchDir dir("io");
    write_raw_file(dir / "m.mha", header("4 4 4", "MET_UCHAR"), 100);
    CHECK(read_error_kind(dir / "m.mha") == FormatErrorKind::SizeMismatch);
    write_raw_file(dir / "long.mha", header("2 2 2", "MET_FLOAT"), 33);
    CHECK(read_error_kind(dir / "long.mha") == FormatErrorKind::SizeMismatch);
}

TEST_CASE("header errors are told apart") {
    ScratchDir dir("io");
    write_raw_file(dir / "nokey.mha",
                   "NDims = 3\nElementSpacing = 1 1 1\nOffset = 0 0 0\nElementType = MET_FLOAT\n"
                   "ElementDataFile = LOCAL\n",
                   32);
    CHECK(read_error_kind(dir / "nokey.mha") == FormatErrorKind::MissingKey);

    write_raw_file(dir / "type.mha", header("2 2 2", "MET_LONG"), 64);
    CHECK(read_error_kind(dir / "type.mha") == FormatErrorKind::UnsupportedType);

    write_raw_file(dir / "zip.mha", header("2 2 2", "MET_FLOAT", "CompressedData = True\n"), 32);
    CHECK(read_error_kind(dir / "zip.mha") == FormatErrorKind::UnsupportedType);

    write_raw_file(dir / "be.mha", header("2 2 2", "MET_FLOAT", "BinaryDataByteOrderMSB = True\n"), 32);
    CHECK(read_error_kind(dir / "be.mha") == FormatErrorKind::ByteOrder);

    write_raw_file(dir / "ch.mha", header("2 2 2", "MET_FLOAT", "ElementNumberOfChannels = 2\n"), 64);
    CHECK(read_error_kind(dir / "ch.mha") == FormatErrorKind::UnsupportedType);

    write_raw_file(dir / "dim.mha", header("2 0 2", "MET_FLOAT"), 0);
    CHECK(read_error_kind(dir / "dim.mha") == FormatErrorKind::Malformed);

    CHECK(read_error_kind(dir / "absent.mha") == FormatErrorKind::Io);

    try {
        (void)read_volume(dir / "be.mha");
    } catch (const FormatError &e) {
        CHECK(std::string(e.what()).find("be.mha") != std::string::npos);
    }
}

TEST_CASE("detached payload file must exist and match") {
    ScratchDir dir("io");
    std::ofstream(dir / "d.mhd") << "NDims = 3\nDimSize = 2 2 2\nElementSpacing = 1 1 1\nOffset = 0 0 0\n"
                                    "ElementType = MET_SHORT\nElementDataFile = d.raw\n";
    CHECK(read_error_kind(dir / "d.mhd") == FormatErrorKind::Io);
    write_raw_file(dir / "d.raw", "", 16);
    const LabelVolume l = read_label_volume(dir / "d.mhd");
    CHECK(l.size() == 8);
    write_raw_file(dir / "d.raw", "", 15);
    CHECK(read_error_kind(dir / "d.mhd") == FormatErrorKind::SizeMismatch);
}

TEST_CASE("write then read round-trips bit-identically for every type and layout") {
    ScratchDir dir("io");
    for (int n = 0; n < 20; ++n) {
        const io_cases::Outcome r = io_cases::round_trip(n, dir.path());
        INFO(r.detail);
        CHECK(r.ok);
    }
}

TEST_CASE("mhd writer produces a sibling raw payload") {
    ScratchDir dir("io");
    ScalarVolume v(WorldGrid({3, 2, 1}, {1, 1, 1}), 2.5);
    write_volume(v, dir / "a.mhd", ElementType::Float32);
    CHECK(std::filesystem::file_size(dir / "a.raw") == 6 * 4);
    CHECK(slurp(dir / "a.mhd").find("ElementDataFile = a.raw") != std::string::npos);
}

TEST_CASE("header keys come out in a fixed order") {
    ScratchDir dir("io");
    DisplacementField u(WorldGrid({2, 3, 4}, {0.5, 1.5, 2}, {-1, 0, 7.25}));
    write_volume(u, dir / "u.mhd");
    CHECK(slurp(dir / "u.mhd") ==
          "ObjectType = Image\n"
          "NDims = 3\n"
          "BinaryData = True\n"
          "BinaryDataByteOrderMSB = False\n"
          "CompressedData = False\n"
          "DimSize = 2 3 4\n"
          "ElementSpacing = 0.5 1.5 2\n"
          "Offset = -1 0 7.25\n"
          "ElementNumberOfChannels = 3\n"
          "ElementType = MET_DOUBLE\n"
          "ElementDataFile = u.raw\n");
    CHECK(std::filesystem::file_size(dir / "u.raw") == 24 * 3 * 8);
}

TEST_CASE("volume readers dispatch on channels and element type") {
    ScratchDir dir("io");
    const WorldGrid g({2, 2, 2}, {1, 1, 1});
    write_volume(DisplacementField(g, Vec3{1, 2, 3}), dir / "f.mha");
    write_volume(LabelVolume(g, 2), dir / "l.mha");
    write_volume(ScalarVolume(g, -3.0), dir / "s.mha");
    CHECK(std::holds_alternative<DisplacementField>(read_volume(dir / "f.mha")));
    CHECK(std::holds_alternative<LabelVolume>(read_volume(dir / "l.mha")));
    CHECK(std::holds_alternative<ScalarVolume>(read_volume(dir / "s.mha")));
    CHECK_THROWS_AS(read_field(dir / "s.mha"), FormatError);
    CHECK_THROWS_AS(read_label_volume(dir / "s.mha"), FormatError);
    CHECK_THROWS_AS(read_scalar_volume(dir / "f.mha"), FormatError);
}

TEST_CASE("signed integer images load as scalars") {
    ScratchDir dir("io");
    const WorldGrid g({2, 1, 1}, {1, 1, 1});
    ScalarVolume hu(g, std::vector<double>{-1000.0, 40.0});
    write_volume(hu, dir / "hu.mha", ElementType::Int16);
    const ScalarVolume r = read_scalar_volume(dir / "hu.mha");
    CHECK(r[0] == -1000.0);
    CHECK(r[1] == 40.0);
}

TEST_CASE("writers reject what the format cannot hold") {
    ScratchDir dir("io");
    CHECK_THROWS_AS(write_volume(ScalarVolume{}, dir / "e.mha"), std::invalid_argument);
    CHECK_THROWS_AS(write_volume(LabelVolume{}, dir / "e.mha"), std::invalid_argument);
    CHECK_THROWS_AS(write_volume(DisplacementField{}, dir / "e.mha"), std::invalid_argument);
    CHECK_FALSE(std::filesystem::exists(dir / "e.mha"));

    const WorldGrid g({2, 1, 1}, {1, 1, 1});
    CHECK_THROWS_AS(write_volume(ScalarVolume(g, 0.5), dir / "x.mha", ElementType::Int16), std::invalid_argument);
    CHECK_THROWS_AS(write_volume(ScalarVolume(g, 256.0), dir / "x.mha", ElementType::UInt8), std::invalid_argument);
    CHECK_THROWS_AS(write_volume(LabelVolume(g, 1), dir / "x.mha", ElementType::Float32), std::invalid_argument);
    CHECK_THROWS_AS(write_volume(DisplacementField(g), dir / "x.mha", ElementType::Int16), std::invalid_argument);
    CHECK_THROWS_AS(write_volume(ScalarVolume(g), dir / "missing_dir" / "x.mha"), FormatError);
}

TEST_CASE("writes leave no temporary files behind") {
    ScratchDir dir("io");
    write_volume(ScalarVolume(WorldGrid({2, 2, 2}, {1, 1, 1})), dir / "t.mha");
    write_keypoints({}, dir / "k.txt");
    int files = 0;
    for (const auto &entry : std::filesystem::directory_iterator(dir.path())) {
        (void)entry;
        ++files;
    }
    CHECK(files == 2);
}

TEST_CASE("keypoint text parsing") {
    const KeypointPairSet one = parse_keypoints("0 0 0 1 2 3");
    REQUIRE(one.size() == 1);
    const Vec3 d = one.pairs[0].moving - one.pairs[0].fixed;
    CHECK(d.x == 1.0);
    CHECK(d.y == 2.0);
    CHECK(d.z == 3.0);

    CHECK(parse_keypoints("").empty());
    CHECK(parse_keypoints("# only a comment\n\n   \n").empty());

    const KeypointPairSet mixed = parse_keypoints("# header\n1 2 3 4 5 6 # trailing\n\n-1.5e1\t0 0 +2 0 0\n");
    REQUIRE(mixed.size() == 2);
    CHECK(mixed.pairs[1].fixed.x == -15.0);
    CHECK(mixed.pairs[1].moving.x == 2.0);

    auto error_text = [](const std::string &text) {
        try {
            (void)parse_keypoints(text, "kp.txt");
        } catch (const FormatError &e) {
            CHECK(e.kind() == FormatErrorKind::Malformed);
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(error_text("0 0 0 1 2 3\n1 2 3\n").find("kp.txt:2") != std::string::npos);
    CHECK(error_text("0 0 0 1 2 3\n\n\n0 0 x 1 2 3\n").find("kp.txt:4") != std::string::npos);
    CHECK(error_text("0 0 0 1 2 nan\n").find("kp.txt:1") != std::string::npos);
}

TEST_CASE("keypoint files round-trip to 1e-9") {
    ScratchDir dir("io");
    CHECK(read_keypoints([&] {
              write_keypoints({}, dir / "empty.txt");
              return dir / "empty.txt";
          }())
              .empty());
    for (int n = 0; n < 5; ++n) {
        const io_cases::Outcome r = io_cases::round_trip(100 + n, dir.path());
        INFO(r.detail);
        CHECK(r.ok);
    }
}

TEST_CASE("number formatting is shortest round-trip and locale independent") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(2.0) == "2");
    CHECK(format_number(-1e-7) == "-1e-07");
    oracle::Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.uniform(-1.0, 1.0) * std::pow(10.0, rng.integer(-30, 30));
        CHECK(parse_number(format_number(v)) == v);
    }
    CHECK(parse_number(" +3.5 ") == 3.5);
    CHECK_THROWS_AS(parse_number("1,5"), std::invalid_argument);
    CHECK_THROWS_AS(parse_number(""), std::invalid_argument);
    CHECK_THROWS_AS(parse_number("2x"), std::invalid_argument);
}

TEST_CASE("config text parsing and round trip") {
    const RegistrationConfig d = parse_config("");
    CHECK(d.levels == 3);
    CHECK(d.level_configs[0].iterations == RegistrationConfig::defaults(3).level_configs[0].iterations);

    const RegistrationConfig c = parse_config(
        "levels = 2\nalpha = 5\ngamma = 0  # no barrier\nseed = 42\ndeterministic = true\n"
        "[level.2]\niterations = 7\n[level.1]\nstep_size = 0.25\ndelta = 0\n");
    CHECK(c.levels == 2);
    CHECK(c.weights.alpha == 5.0);
    CHECK(c.weights.gamma == 0.0);
    CHECK(c.seed == 42);
    CHECK(c.deterministic);
    CHECK(c.level_configs[0].iterations == 7); // [level.2] is the coarsest of two
    CHECK(c.level_configs[1].step_size == 0.25);
    CHECK(c.level_configs[1].delta == 0.0);

    const RegistrationConfig back = parse_config(config_to_text(c));
    CHECK(config_to_text(back) == config_to_text(c));
    CHECK(back.level_configs[0].iterations == 7);
    CHECK(back.weights.alpha == 5.0);
}

TEST_CASE("config errors carry source and line") {
    auto message = [](const std::string &text) {
        try {
            (void)parse_config(text, "run.cfg");
        } catch (const FormatError &e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(message("alpha = 1\nfoo = 2\n").find("run.cfg:2") != std::string::npos);
    CHECK(message("alpha = 1\nfoo = 2\n").find("foo") != std::string::npos);
    CHECK(message("[level.4]\niterations = 1\n").find("run.cfg:2") != std::string::npos);
    CHECK(message("[other]\niterations = 1\n").find("other") != std::string::npos);
    CHECK(message("alpha = abc\n").find("run.cfg:1") != std::string::npos);
    CHECK(message("alpha\n").find("run.cfg:1") != std::string::npos);
    CHECK(message("levels = 9\n") != "no error");
    CHECK(message("[level.1]\niterations = -1\n") != "no error");
}

TEST_CASE("levels override replaces the file's level count") {
    const std::string text = "levels = 3\n[level.3]\niterations = 11\n[level.1]\niterations = 13\n";
    const RegistrationConfig one = parse_config(text, "<text>", 1);
    CHECK(one.levels == 1);
    REQUIRE(one.level_configs.size() == 1);
    CHECK(one.level_configs[0].iterations == 13);
    const RegistrationConfig defaults1 = RegistrationConfig::defaults(1);
    CHECK(one.level_configs[0].t == defaults1.level_configs[0].t);
}

TEST_CASE("phantom spec text round trip") {
    PhantomSpec s;
    s.dims = {32, 30, 28};
    s.spacing = {2.0, 2.5, 3.0};
    s.bumps = 2;
    s.max_amplitude = 4.5;
    s.seed = 77;
    const PhantomSpec back = parse_phantom_spec(phantom_spec_to_text(s));
    CHECK(phantom_spec_to_text(back) == phantom_spec_to_text(s));
    CHECK(back.dims[1] == 30);
    CHECK(back.spacing.y == 2.5);
    CHECK(back.seed == 77);
    CHECK_THROWS_AS(parse_phantom_spec("[level.1]\n"), FormatError);
    CHECK_THROWS_AS(parse_phantom_spec("dims = 1 2\n"), FormatError);
    CHECK_THROWS_AS(parse_phantom_spec("unknown = 1\n"), FormatError);
    CHECK_THROWS_AS(parse_phantom_spec("keypoints = -1\n"), FormatError);
}

} // TEST_SUITE

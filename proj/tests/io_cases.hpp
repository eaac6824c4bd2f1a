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

// Random write/read round-trip cases for volumes and keypoint files, shared
// by the unit tests and the acceptance binary.

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>
#include <string>

#include "lungreg/io.hpp"
#include "oracles.hpp"

namespace io_cases {

using namespace lungreg;

struct Outcome {
    bool ok = true;
    std::string detail;
};

/// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string &tag) {
        static std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("lungreg_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir &) = delete;
    ScratchDir &operator=(const ScratchDir &) = delete;
    const std::filesystem::path &path() const { return path_; }
    std::filesystem::path operator/(const std::string &name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

inline bool same_grid(const WorldGrid &a, const WorldGrid &b) {
    for (int d = 0; d < 3; ++d) {
        if (a.dim(d) != b.dim(d)) return false;
        if (!same_bits(a.spacing()[d], b.spacing()[d]) || !same_bits(a.origin()[d], b.origin()[d])) return false;
    }
    return true;
}

inline WorldGrid random_grid(oracle::Rng &rng) {
    const Dims dims{rng.integer(1, 9), rng.integer(1, 9), rng.integer(1, 9)};
    // Arbitrary doubles exercise the shortest round-trip header formatting.
    return WorldGrid(dims, rng.vec(0.1, 3.0), rng.vec(-200.0, 200.0));
}

/// Case n writes one random volume of a type chosen by n, reads it back and
/// compares bit patterns; then does the same for a random keypoint file.
inline Outcome round_trip(int n, const std::filesystem::path &dir) {
    oracle::Rng rng(0x10c45e + static_cast<std::uint64_t>(n));
    const WorldGrid g = random_grid(rng);
    const char *ext = (n % 2 == 0) ? ".mha" : ".mhd";
    const std::filesystem::path path = dir / ("case" + std::to_string(n) + ext);
    Outcome out;
    auto mismatch = [&](const std::string &what) {
        out.ok = false;
        out.detail = path.string() + ": " + what;
    };

    switch (n % 5) {
    case 0:
    case 1: {
        const ElementType type = n % 5 == 0 ? ElementType::Float64 : ElementType::Float32;
        ScalarVolume v(g);
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double x = rng.uniform(-1500.0, 1500.0) * std::pow(10.0, rng.integer(-6, 6));
            v[i] = type == ElementType::Float32 ? static_cast<double>(static_cast<float>(x)) : x;
        }
        write_volume(v, path, type);
        const ScalarVolume r = read_scalar_volume(path);
        if (!same_grid(r.grid(), g)) mismatch("grid");
        for (std::size_t i = 0; out.ok && i < v.size(); ++i)
            if (!same_bits(r[i], v[i])) mismatch("voxel " + std::to_string(i));
        break;
    }
    case 2:
    case 3: {
        const ElementType type = n % 5 == 2 ? ElementType::Int16 : ElementType::UInt8;
        const int k = rng.integer(0, type == ElementType::Int16 ? 300 : 255);
        std::vector<std::int32_t> labels(g.voxel_count());
        for (auto &l : labels) l = rng.integer(0, k);
        const LabelVolume v(g, labels, k);
        write_volume(v, path, type);
        const LabelVolume r = read_label_volume(path);
        if (!same_grid(r.grid(), g)) mismatch("grid");
        for (std::size_t i = 0; out.ok && i < v.size(); ++i)
            if (r[i] != v[i]) mismatch("label " + std::to_string(i));
        break;
    }
    default: {
        const ElementType type = (n / 5) % 2 == 0 ? ElementType::Float64 : ElementType::Float32;
        DisplacementField u(g);
        for (std::size_t i = 0; i < u.size(); ++i) {
            for (int a = 0; a < 3; ++a) {
                const double x = rng.uniform(-30.0, 30.0);
                u[i][a] = type == ElementType::Float32 ? static_cast<double>(static_cast<float>(x)) : x;
            }
        }
        write_volume(u, path, type);
        const DisplacementField r = read_field(path);
        if (!same_grid(r.grid(), g)) mismatch("grid");
        for (std::size_t i = 0; out.ok && i < u.size(); ++i)
            for (int a = 0; a < 3; ++a)
                if (!same_bits(r[i][a], u[i][a])) mismatch("vector " + std::to_string(i));
        break;
    }
    }
    if (!out.ok) return out;

    KeypointPairSet pairs;
    const int count = rng.integer(0, 40);
    for (int i = 0; i < count; ++i) pairs.pairs.push_back({rng.vec(-300.0, 300.0), rng.vec(-300.0, 300.0)});
    const std::filesystem::path kp = dir / ("case" + std::to_string(n) + "_keypoints.txt");
    write_keypoints(pairs, kp);
    const KeypointPairSet back = read_keypoints(kp);
    if (back.size() != pairs.size()) {
        out.ok = false;
        out.detail = kp.string() + ": pair count";
        return out;
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        for (int a = 0; a < 3; ++a) {
            if (std::abs(back.pairs[i].fixed[a] - pairs.pairs[i].fixed[a]) > 1e-9 ||
                std::abs(back.pairs[i].moving[a] - pairs.pairs[i].moving[a]) > 1e-9) {
                out.ok = false;
                out.detail = kp.string() + ": pair " + std::to_string(i);
                return out;
            }
        }
    }
    return out;
}

} // namespace io_cases

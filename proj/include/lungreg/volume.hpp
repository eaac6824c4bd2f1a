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
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lungreg/geometry.hpp"

namespace lungreg {

/// Dense voxel container on a WorldGrid. Element (i,j,k) lives at
/// grid().index(i,j,k).
template <class T>
class Volume {
public:
    using value_type = T;

    Volume() = default;
    explicit Volume(const WorldGrid &grid, T fill = T{})
        : grid_(grid), data_(grid.voxel_count(), fill) {}
    Volume(const WorldGrid &grid, std::vector<T> data) : grid_(grid), data_(std::move(data)) {
        if (data_.size() != grid_.voxel_count()) {
            throw std::invalid_argument("Volume: data length does not match grid dims");
        }
    }

    const WorldGrid &grid() const { return grid_; }
    std::size_t size() const { return data_.size(); }

    T &operator[](std::size_t n) { return data_[n]; }
    const T &operator[](std::size_t n) const { return data_[n]; }
    T &at(std::int64_t i, std::int64_t j, std::int64_t k) { return data_[grid_.index(i, j, k)]; }
    const T &at(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return data_[grid_.index(i, j, k)];
    }

    std::span<T> data() { return data_; }
    std::span<const T> data() const { return data_; }
    std::vector<T> &storage() { return data_; }
    const std::vector<T> &storage() const { return data_; }

private:
    WorldGrid grid_;
    std::vector<T> data_;
};

using ScalarVolume = Volume<double>;

/// Per-voxel displacement u(x) in world mm; the deformation is y(x) = x + u(x).
using DisplacementField = Volume<Vec3>;

/// Integer labels in {0..k}, 0 being background.
class LabelVolume {
public:
    LabelVolume() = default;
    LabelVolume(const WorldGrid &grid, int label_count)
        : labels_(grid, 0), label_count_(label_count) {
        if (label_count < 0) {
            throw std::invalid_argument("LabelVolume: negative label count");
        }
    }
    LabelVolume(const WorldGrid &grid, std::vector<std::int32_t> labels, int label_count);

    const WorldGrid &grid() const { return labels_.grid(); }
    int label_count() const { return label_count_; }
    std::size_t size() const { return labels_.size(); }

    std::int32_t operator[](std::size_t n) const { return labels_[n]; }
    void set(std::size_t n, std::int32_t label);
    std::span<const std::int32_t> data() const { return labels_.data(); }

    // Binary indicator of a single label (1.0 where labels == label).
    ScalarVolume channel(int label) const;
    // Indicator of any foreground label.
    ScalarVolume foreground() const;

private:
    Volume<std::int32_t> labels_;
    int label_count_ = 0;
};

/// k real-valued channels on one grid, channel-major. Holds one-hot label
/// maps and their warped/downsampled soft versions; channel c corresponds to
/// label c + 1.
class ChannelVolume {
public:
    ChannelVolume() = default;
    ChannelVolume(const WorldGrid &grid, int channels)
        : grid_(grid), channels_(channels),
          data_(grid.voxel_count() * static_cast<std::size_t>(channels), 0.0) {}

    static ChannelVolume one_hot(const LabelVolume &labels);

    const WorldGrid &grid() const { return grid_; }
    int channels() const { return channels_; }
    std::size_t voxel_count() const { return grid_.voxel_count(); }

    std::span<double> channel(int c) {
        return {data_.data() + static_cast<std::size_t>(c) * voxel_count(), voxel_count()};
    }
    std::span<const double> channel(int c) const {
        return {data_.data() + static_cast<std::size_t>(c) * voxel_count(), voxel_count()};
    }
    double operator()(int c, std::size_t n) const {
        return data_[static_cast<std::size_t>(c) * voxel_count() + n];
    }
    double &operator()(int c, std::size_t n) {
        return data_[static_cast<std::size_t>(c) * voxel_count() + n];
    }

    ScalarVolume channel_volume(int c) const;
    // Sum over channels per voxel (soft foreground).
    ScalarVolume sum() const;

private:
    WorldGrid grid_;
    int channels_ = 0;
    std::vector<double> data_;
};

struct KeypointPair {
    Vec3 fixed;   // k_F, world mm
    Vec3 moving;  // k_M, world mm
};

struct KeypointPairSet {
    std::vector<KeypointPair> pairs;

    std::size_t size() const { return pairs.size(); }
    bool empty() const { return pairs.empty(); }
};

DisplacementField zero_field(const WorldGrid &grid);

} // namespace lungreg

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
#include "lungreg/volume.hpp"

#include <string>

namespace lungreg {

LabelVolume::LabelVolume(const WorldGrid &grid, std::vector<std::int32_t> labels, int label_count)
    : labels_(grid, std::move(labels)), label_count_(label_count) {
    if (label_count < 0) {
        throw std::invalid_argument("LabelVolume: negative label count");
    }
    for (std::int32_t l : labels_.data()) {
        if (l < 0 || l > label_count) {
            throw std::invalid_argument("LabelVolume: label " + std::to_string(l) +
                                        " outside [0, " + std::to_string(label_count) + "]");
        }
    }
}

void LabelVolume::set(std::size_t n, std::int32_t label) {
    if (label < 0 || label > label_count_) {
        throw std::invalid_argument("LabelVolume::set: label out of range");
    }
    labels_[n] = label;
}

ScalarVolume LabelVolume::channel(int label) const {
    ScalarVolume out(grid(), 0.0);
    for (std::size_t n = 0; n < size(); ++n) {
        out[n] = labels_[n] == label ? 1.0 : 0.0;
    }
    return out;
}

ScalarVolume LabelVolume::foreground() const {
    ScalarVolume out(grid(), 0.0);
    for (std::size_t n = 0; n < size(); ++n) {
        out[n] = labels_[n] > 0 ? 1.0 : 0.0;
    }
    return out;
}

ChannelVolume ChannelVolume::one_hot(const LabelVolume &labels) {
    ChannelVolume out(labels.grid(), labels.label_count());
    for (std::size_t n = 0; n < labels.size(); ++n) {
        const int l = labels[n];
        if (l > 0) out(l - 1, n) = 1.0;
    }
    return out;
}

ScalarVolume ChannelVolume::channel_volume(int c) const {
    auto ch = channel(c);
    return ScalarVolume(grid_, std::vector<double>(ch.begin(), ch.end()));
}

ScalarVolume ChannelVolume::sum() const {
    ScalarVolume out(grid_, 0.0);
    for (int c = 0; c < channels_; ++c) {
        auto ch = channel(c);
        for (std::size_t n = 0; n < ch.size(); ++n) out[n] += ch[n];
    }
    return out;
}

DisplacementField zero_field(const WorldGrid &grid) { return DisplacementField(grid, Vec3{}); }

} // namespace lungreg

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
#include "lungreg/interpolation.hpp"

namespace lungreg {

double sample_trilinear(const ScalarVolume &vol, const Vec3 &p) {
    const auto s = make_stencil(vol.grid(), p);
    return s.apply(vol.data().data());
}

double sample_trilinear(const ScalarVolume &vol, const Vec3 &p, Vec3 &gradient) {
    const auto s = make_stencil(vol.grid(), p, true);
    const double *v = vol.data().data();
    gradient = {};
    double value = 0.0;
    for (int c = 0; c < 8; ++c) {
        value += v[s.index[c]] * s.weight[c];
        gradient += s.dweight[c] * v[s.index[c]];
    }
    return value;
}

Vec3 sample_trilinear(const DisplacementField &u, const Vec3 &p) {
    const auto s = make_stencil(u.grid(), p);
    return s.apply(u.data().data());
}

Vec3 sample_trilinear(const DisplacementField &u, const Vec3 &p, Mat3 &jacobian) {
    const auto s = make_stencil(u.grid(), p, true);
    const Vec3 *v = u.data().data();
    jacobian = Mat3{};
    Vec3 value{};
    for (int c = 0; c < 8; ++c) {
        const Vec3 &node = v[s.index[c]];
        value += node * s.weight[c];
        for (int r = 0; r < 3; ++r) {
            for (int a = 0; a < 3; ++a) jacobian(r, a) += node[r] * s.dweight[c][a];
        }
    }
    return value;
}

} // namespace lungreg

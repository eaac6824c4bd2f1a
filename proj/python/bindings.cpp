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
#include <algorithm>
#include <optional>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lungreg/barrier.hpp"
#include "lungreg/field_ops.hpp"
#include "lungreg/io.hpp"
#include "lungreg/losses.hpp"
#include "lungreg/metrics.hpp"
#include "lungreg/optimizer.hpp"
#include "lungreg/phantom.hpp"

namespace py = pybind11;
using namespace lungreg;

namespace {

// Volumes cross the boundary as C-ordered (z, y, x) arrays, which matches the
// x-fastest voxel layout; fields carry a trailing axis of 3 (x, y, z in mm).
using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IntArray = py::array_t<std::int32_t, py::array::c_style | py::array::forcecast>;

WorldGrid grid_for(const py::buffer_info &info, const Vec3 &spacing, const Vec3 &origin) {
    if (info.ndim < 3) throw std::invalid_argument("expected a 3D (z, y, x) array");
    return WorldGrid({info.shape[2], info.shape[1], info.shape[0]}, spacing, origin);
}

std::vector<py::ssize_t> shape_of(const WorldGrid &g) { return {g.dim(2), g.dim(1), g.dim(0)}; }

ScalarVolume to_scalar(const Array &a, const Vec3 &spacing, const Vec3 &origin) {
    const auto info = a.request();
    if (info.ndim != 3) throw std::invalid_argument("expected a 3D (z, y, x) array");
    const auto *p = static_cast<const double *>(info.ptr);
    const WorldGrid g = grid_for(info, spacing, origin);
    return ScalarVolume(g, std::vector<double>(p, p + g.voxel_count()));
}

LabelVolume to_labels(const IntArray &a, const Vec3 &spacing, const Vec3 &origin) {
    const auto info = a.request();
    if (info.ndim != 3) throw std::invalid_argument("expected a 3D (z, y, x) label array");
    const auto *p = static_cast<const std::int32_t *>(info.ptr);
    const WorldGrid g = grid_for(info, spacing, origin);
    std::vector<std::int32_t> labels(p, p + g.voxel_count());
    int k = 0;
    for (auto l : labels) k = std::max(k, static_cast<int>(l));
    return LabelVolume(g, std::move(labels), k);
}

DisplacementField to_field(const Array &a, const Vec3 &spacing, const Vec3 &origin) {
    const auto info = a.request();
    if (info.ndim != 4 || info.shape[3] != 3) throw std::invalid_argument("expected a (z, y, x, 3) field array");
    const auto *p = static_cast<const double *>(info.ptr);
    DisplacementField u(grid_for(info, spacing, origin));
    for (std::size_t n = 0; n < u.size(); ++n) u[n] = {p[3 * n], p[3 * n + 1], p[3 * n + 2]};
    return u;
}

Array from_scalar(const ScalarVolume &v) {
    Array out(shape_of(v.grid()));
    std::copy(v.data().begin(), v.data().end(), out.mutable_data());
    return out;
}

IntArray from_labels(const LabelVolume &v) {
    IntArray out(shape_of(v.grid()));
    std::copy(v.data().begin(), v.data().end(), out.mutable_data());
    return out;
}

Array from_field(const DisplacementField &u) {
    auto shape = shape_of(u.grid());
    shape.push_back(3);
    Array out(shape);
    double *p = out.mutable_data();
    for (std::size_t n = 0; n < u.size(); ++n)
        for (int a = 0; a < 3; ++a) p[3 * n + a] = u[n][a];
    return out;
}

Array from_pairs(const KeypointPairSet &s) {
    Array out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(s.size()), 6});
    double *p = out.mutable_data();
    for (const auto &pair : s.pairs) {
        for (int a = 0; a < 3; ++a) p[a] = pair.fixed[a];
        for (int a = 0; a < 3; ++a) p[3 + a] = pair.moving[a];
        p += 6;
    }
    return out;
}

KeypointPairSet to_pairs(const Array &a) {
    const auto info = a.request();
    if (info.ndim != 2 || info.shape[1] != 6) throw std::invalid_argument("expected an (n, 6) keypoint array");
    const auto *p = static_cast<const double *>(info.ptr);
    KeypointPairSet s;
    for (py::ssize_t i = 0; i < info.shape[0]; ++i) {
        const double *r = p + 6 * i;
        s.pairs.push_back({{r[0], r[1], r[2]}, {r[3], r[4], r[5]}});
    }
    return s;
}

} // namespace

PYBIND11_MODULE(_lungreg, m) {
    m.doc() = "Deformable lung CT registration engine";
    m.attr("__version__") = std::string(kToolVersion);

    m.def(
        "psi_t",
        [](double z, double t) {
            const BarrierValue b = psi_t(z, t);
            return py::make_tuple(b.value, b.derivative);
        },
        py::arg("z"), py::arg("t"), "Barrier value and derivative");

    m.def(
        "jacobian_determinant",
        [](const Array &field, std::tuple<double, double, double> spacing) {
            const auto [sx, sy, sz] = spacing;
            return from_scalar(jacobian_det_field(to_field(field, {sx, sy, sz}, {})));
        },
        py::arg("field"), py::arg("spacing") = std::make_tuple(1.0, 1.0, 1.0));

    m.def(
        "warp_image",
        [](const Array &image, const Array &field, std::tuple<double, double, double> spacing) {
            const auto [sx, sy, sz] = spacing;
            const Vec3 s{sx, sy, sz};
            return from_scalar(warp_image(to_scalar(image, s, {}), to_field(field, s, {})));
        },
        py::arg("image"), py::arg("field"), py::arg("spacing") = std::make_tuple(1.0, 1.0, 1.0));

    m.def(
        "dice",
        [](const IntArray &a, const IntArray &b, int label) {
            return dice(to_labels(a, {1, 1, 1}, {}), to_labels(b, {1, 1, 1}, {}), label);
        },
        py::arg("a"), py::arg("b"), py::arg("label"));

    m.def(
        "generate_phantom",
        [](std::tuple<int, int, int> dims, std::tuple<double, double, double> spacing, double max_amplitude,
           int bumps, double bump_sigma, int structures, int keypoints, int landmarks, std::uint64_t seed) {
            PhantomSpec spec;
            spec.dims = {std::get<0>(dims), std::get<1>(dims), std::get<2>(dims)};
            spec.spacing = {std::get<0>(spacing), std::get<1>(spacing), std::get<2>(spacing)};
            spec.max_amplitude = max_amplitude;
            spec.bumps = bumps;
            spec.bump_sigma = bump_sigma;
            spec.structures = structures;
            spec.keypoints = keypoints;
            spec.landmarks = landmarks;
            spec.seed = seed;
            const PhantomCase pc = gen_phantom_pair(spec);
            py::dict d;
            d["fixed"] = from_scalar(pc.fixed);
            d["moving"] = from_scalar(pc.moving);
            d["fixed_mask"] = from_labels(pc.fixed_mask);
            d["moving_mask"] = from_labels(pc.moving_mask);
            d["ground_truth"] = from_field(pc.ground_truth);
            d["keypoints"] = from_pairs(pc.keypoints);
            d["landmarks"] = from_pairs(pc.landmarks);
            d["spacing"] = spacing;
            return d;
        },
        py::arg("dims") = std::make_tuple(96, 80, 96), py::arg("spacing") = std::make_tuple(2.0, 2.0, 2.0),
        py::arg("max_amplitude") = 16.0, py::arg("bumps") = 3, py::arg("bump_sigma") = 32.0,
        py::arg("structures") = 300, py::arg("keypoints") = 200, py::arg("landmarks") = 100,
        py::arg("seed") = 0);

    m.def(
        "register",
        [](const Array &fixed, const Array &moving, std::tuple<double, double, double> spacing,
           std::optional<IntArray> fixed_mask, std::optional<IntArray> moving_mask, std::optional<Array> keypoints,
           int levels, std::optional<std::string> config_text) {
            const auto [sx, sy, sz] = spacing;
            const Vec3 s{sx, sy, sz};
            const ScalarVolume f = to_scalar(fixed, s, {});
            const ScalarVolume mv = to_scalar(moving, s, {});
            std::optional<LabelVolume> bf, bm;
            if (fixed_mask) bf = to_labels(*fixed_mask, s, {});
            if (moving_mask) bm = to_labels(*moving_mask, s, {});
            if (bf && bm && bf->label_count() != bm->label_count()) {
                const int k = std::max(bf->label_count(), bm->label_count());
                bf = LabelVolume(bf->grid(), {bf->data().begin(), bf->data().end()}, k);
                bm = LabelVolume(bm->grid(), {bm->data().begin(), bm->data().end()}, k);
            }
            std::optional<KeypointPairSet> kp;
            if (keypoints) kp = to_pairs(*keypoints);
            const RegistrationConfig cfg =
                config_text ? parse_config(*config_text, "<config>", levels) : RegistrationConfig::defaults(levels);

            RegistrationInputs in;
            in.fixed = &f;
            in.moving = &mv;
            in.fixed_mask = bf ? &*bf : nullptr;
            in.moving_mask = bm ? &*bm : nullptr;
            in.keypoints = kp ? &*kp : nullptr;
            RegistrationResult r;
            {
                py::gil_scoped_release release;
                r = register_multilevel(in, cfg);
            }
            py::dict summary;
            summary["initial_distance"] = r.summary.initial_distance;
            summary["final_distance"] = r.summary.final_distance;
            summary["folding_fraction"] = r.summary.folding_fraction;
            summary["min_jacobian"] = r.summary.min_jacobian;
            summary["max_jacobian"] = r.summary.max_jacobian;
            summary["initial_tre"] = r.summary.initial_tre_mean ? py::cast(*r.summary.initial_tre_mean) : py::none();
            summary["final_tre"] = r.summary.final_tre_mean ? py::cast(*r.summary.final_tre_mean) : py::none();
            summary["warnings"] = r.warnings;
            return py::make_tuple(from_field(r.field), summary);
        },
        py::arg("fixed"), py::arg("moving"), py::arg("spacing") = std::make_tuple(1.0, 1.0, 1.0),
        py::arg("fixed_mask") = py::none(), py::arg("moving_mask") = py::none(), py::arg("keypoints") = py::none(),
        py::arg("levels") = 3, py::arg("config_text") = py::none(),
        "Multilevel registration; returns (field, summary)");

    m.def(
        "tre",
        [](const Array &keypoints, const Array &field, std::tuple<double, double, double> spacing) {
            const auto [sx, sy, sz] = spacing;
            return tre(to_pairs(keypoints), to_field(field, {sx, sy, sz}, {})).mean;
        },
        py::arg("keypoints"), py::arg("field"), py::arg("spacing") = std::make_tuple(1.0, 1.0, 1.0));

    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<NonFiniteLossError>(m, "NonFiniteLossError", PyExc_ArithmeticError);
}

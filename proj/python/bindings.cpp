#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <string>
#include <vector>

#include "pointdc/classifier.hpp"
#include "pointdc/config.hpp"
#include "pointdc/detector.hpp"
#include "pointdc/encoder.hpp"
#include "pointdc/evalkit.hpp"
#include "pointdc/nn.hpp"
#include "pointdc/runners.hpp"
#include "pointdc/synthdata.hpp"

namespace py = pybind11;
using namespace pointdc;

namespace {

using CArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor tensor_from_array(const CArray& arr) {
    std::vector<int> shape(static_cast<std::size_t>(arr.ndim()));
    for (py::ssize_t i = 0; i < arr.ndim(); ++i)
        shape[static_cast<std::size_t>(i)] = static_cast<int>(arr.shape(i));
    std::vector<double> data(arr.data(), arr.data() + arr.size());
    return Tensor(std::move(shape), std::move(data));
}

py::array_t<double> array_from_tensor(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
    py::array_t<double> out(shape);
    std::copy(t.data(), t.data() + t.size(), out.mutable_data());
    return out;
}

std::vector<Point> points_from_array(const CArray& arr, const char* what) {
    if (arr.ndim() != 2 || arr.shape(1) < 2)
        throw ShapeError(std::string(what) + " must be an [N,>=2] array");
    std::vector<Point> pts(static_cast<std::size_t>(arr.shape(0)));
    for (py::ssize_t i = 0; i < arr.shape(0); ++i)
        pts[static_cast<std::size_t>(i)] = {arr.at(i, 0), arr.at(i, 1)};
    return pts;
}

struct DatasetHandle {
    LoadedDataset ds;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "point-based nuclei detection and classification core";
    m.attr("__version__") = "0.1.0";

    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            const std::string msg = "[" + e.category() + "] " + e.what();
            PyErr_SetString(PyExc_RuntimeError, msg.c_str());
        }
    });

    py::class_<DatasetHandle>(m, "Dataset")
        .def("__len__", [](const DatasetHandle& h) { return h.ds.samples.size(); })
        .def_property_readonly(
            "classes", [](const DatasetHandle& h) { return h.ds.manifest.spec.classes; })
        .def_property_readonly(
            "height", [](const DatasetHandle& h) { return h.ds.manifest.spec.height; })
        .def_property_readonly(
            "width", [](const DatasetHandle& h) { return h.ds.manifest.spec.width; })
        .def("image",
             [](const DatasetHandle& h, int i) {
                 return array_from_tensor(h.ds.samples.at(static_cast<std::size_t>(i)).image);
             },
             py::arg("index"), "image as a [3,H,W] float64 array in [0,1]")
        .def("annotations",
             [](const DatasetHandle& h, int i) {
                 std::vector<std::tuple<double, double, int>> out;
                 for (const auto& a : h.ds.samples.at(static_cast<std::size_t>(i)).annotations)
                     out.emplace_back(a.p.x, a.p.y, a.cls);
                 return out;
             },
             py::arg("index"), "list of (x, y, class) tuples")
        .def("split",
             [](const DatasetHandle& h, int i) {
                 return h.ds.samples.at(static_cast<std::size_t>(i)).split;
             },
             py::arg("index"))
        .def("split_indices",
             [](const DatasetHandle& h, const std::string& s) { return h.ds.split_indices(s); },
             py::arg("split"));

    m.def("load_dataset",
          [](const std::string& dir) { return DatasetHandle{load_dataset(dir)}; },
          py::arg("dir"));

    m.def(
        "generate_dataset",
        [](const std::string& dir, std::uint64_t seed, int n_train, int n_test, int height,
           int width, int classes, double mean_count, double min_separation, double radius_min,
           double radius_max, int style, double noise, double cue, double contrast) {
            SceneSpec spec;
            spec.height = height;
            spec.width = width;
            spec.classes = classes;
            spec.mean_count = mean_count;
            spec.min_separation = min_separation;
            spec.radius_min = radius_min;
            spec.radius_max = radius_max;
            spec.style = style;
            spec.noise = noise;
            spec.cue = cue;
            spec.contrast = contrast;
            const DatasetManifest man = generate_dataset(spec, seed, n_train, n_test, dir);
            py::dict out;
            out["images"] = man.entries.size();
            out["total_nuclei"] = man.total_nuclei;
            return out;
        },
        py::arg("dir"), py::arg("seed") = 1, py::arg("n_train") = 200, py::arg("n_test") = 50,
        py::arg("height") = 64, py::arg("width") = 64, py::arg("classes") = 3,
        py::arg("mean_count") = 8.0, py::arg("min_separation") = 8.0,
        py::arg("radius_min") = 3.0, py::arg("radius_max") = 5.0, py::arg("style") = 0,
        py::arg("noise") = 0.02, py::arg("cue") = 0.08, py::arg("contrast") = 0.2);

    m.def(
        "conv2d",
        [](const CArray& input, const CArray& weight, const CArray& bias, int stride, int pad) {
            return array_from_tensor(conv2d(tensor_from_array(input),
                                            tensor_from_array(weight),
                                            tensor_from_array(bias), stride, pad));
        },
        py::arg("input"), py::arg("weight"), py::arg("bias"), py::arg("stride") = 1,
        py::arg("pad") = 0, "input [Cin,H,W], weight [Cout,Cin,k,k], bias [Cout]");

    m.def(
        "bilinear_sample",
        [](const CArray& values, double stride, double x, double y) {
            FeatureMap f;
            f.values = tensor_from_array(values);
            f.stride = stride;
            if (f.values.ndim() != 3)
                throw ShapeError("feature map must be [C,H,W]");
            const auto v = bilinear_sample(f, {x, y});
            py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
            std::copy(v.begin(), v.end(), out.mutable_data());
            return out;
        },
        py::arg("values"), py::arg("stride"), py::arg("x"), py::arg("y"));

    m.def(
        "decode",
        [](const CArray& scores, const CArray& offsets, int stride, double tau) {
            const Tensor s = tensor_from_array(scores);
            const Tensor o = tensor_from_array(offsets);
            if (s.ndim() != 2) throw ShapeError("scores must be [gh,gw]");
            GridSpec grid;
            grid.stride = stride;
            grid.gh = s.dim(0);
            grid.gw = s.dim(1);
            std::vector<std::tuple<double, double, double>> out;
            for (const auto& d : decode(s, o, grid, tau))
                out.emplace_back(d.p.x, d.p.y, d.score);
            return out;
        },
        py::arg("scores"), py::arg("offsets"), py::arg("stride") = 4, py::arg("tau") = 0.5,
        "returns (x, y, score) for every grid cell whose score exceeds tau");

    m.def(
        "match_one_to_one",
        [](const CArray& preds, const CArray& gts, double radius) {
            return match_one_to_one(points_from_array(preds, "preds"),
                                    points_from_array(gts, "gts"), radius);
        },
        py::arg("preds"), py::arg("gts"), py::arg("radius") = 6.0,
        "one-to-one matches as (gt_index, pred_index) pairs");

    m.def(
        "f1_report",
        [](const CArray& preds, const CArray& gts, double radius, int classes) {
            if ((preds.size() > 0 && (preds.ndim() != 2 || preds.shape(1) < 3)) ||
                (gts.size() > 0 && (gts.ndim() != 2 || gts.shape(1) < 3)))
                throw ShapeError("predictions and ground truth must be [N,3] (x, y, class)");
            PredictionSet ps;
            for (py::ssize_t i = 0; preds.size() > 0 && i < preds.shape(0); ++i)
                ps.push_back({{preds.at(i, 0), preds.at(i, 1)},
                              static_cast<int>(preds.at(i, 2)), 1.0, 1.0});
            std::vector<PointAnnotation> gt;
            for (py::ssize_t i = 0; gts.size() > 0 && i < gts.shape(0); ++i)
                gt.push_back({{gts.at(i, 0), gts.at(i, 1)}, static_cast<int>(gts.at(i, 2))});
            const MatchReport r = f1_report(ps, gt, radius, classes);
            py::dict out;
            out["radius"] = r.radius;
            out["det_f1"] = r.det_f1;
            out["avg_f1"] = r.avg_f1;
            out["f1"] = r.f1;
            out["tp"] = r.counts.tp;
            out["fp"] = r.counts.fp;
            out["fn"] = r.counts.fn;
            out["det_tp"] = r.counts.det_tp;
            out["det_fp"] = r.counts.det_fp;
            out["det_fn"] = r.counts.det_fn;
            return out;
        },
        py::arg("preds"), py::arg("gts"), py::arg("radius") = 6.0, py::arg("classes") = 3);

    m.def(
        "run",
        [](const std::string& command, const py::dict& options) {
            std::vector<std::pair<std::string, std::string>> overrides;
            std::string config_path;
            for (const auto& item : options) {
                const auto key = py::cast<std::string>(item.first);
                const auto value = py::cast<std::string>(py::str(item.second));
                if (key == "config")
                    config_path = value;
                else
                    overrides.emplace_back(key, value);
            }
            run_command(command, parse_config(config_path, overrides));
        },
        py::arg("command"), py::arg("options") = py::dict(),
        "run a CLI command; option keys mirror config keys");
}

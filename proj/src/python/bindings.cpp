// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "qrsnap/config.hpp"
#include "qrsnap/dataset.hpp"
#include "qrsnap/distortion.hpp"
#include "qrsnap/ensemble.hpp"
#include "qrsnap/error.hpp"
#include "qrsnap/eval.hpp"
#include "qrsnap/parallel.hpp"
#include "qrsnap/report.hpp"
#include "qrsnap/rqmixup.hpp"
#include "qrsnap/schedule.hpp"
#include "qrsnap/trainer.hpp"

namespace py = pybind11;
using namespace qrsnap;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Image to_image(const Array& a) {
  if (a.ndim() != 3) throw InvalidArgument("expected an HxWxC array");
  const auto* p = a.data();
  return Image(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
               static_cast<std::size_t>(a.shape(2)), std::vector<double>(p, p + a.size()));
}

Array to_array(const Image& img) {
  Array out({img.height(), img.width(), img.channels()});
  std::copy(img.pixels().begin(), img.pixels().end(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_qrsnap, m) {
  m.doc() = "Quality-resilient snapshot ensembles: RQMixup, cyclic schedules, distortion sweeps";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  m.def("set_thread_count", &set_thread_count, py::arg("threads"));

  py::class_<SchedulePlan>(m, "SchedulePlan")
      .def(py::init([](double alpha0, std::int64_t total, std::int64_t cycles) {
             SchedulePlan p{alpha0, total, cycles};
             p.validate();
             return p;
           }),
           py::arg("alpha0"), py::arg("total_iterations"), py::arg("cycles"))
      .def_readonly("alpha0", &SchedulePlan::alpha0)
      .def_readonly("total_iterations", &SchedulePlan::total_iterations)
      .def_readonly("cycles", &SchedulePlan::cycles);
  m.def("lr_at", &lr_at, py::arg("t"), py::arg("plan"));
  m.def("snapshot_points", &snapshot_points, py::arg("plan"));

  m.def("blur_sigma", &blur_sigma, py::arg("kernel"));
  m.def("gaussian_kernel_1d", &gaussian_kernel_1d, py::arg("kernel"));
  m.def("apply_blur", [](const Array& img, int k) { return to_array(apply_blur(to_image(img), k)); },
        py::arg("image"), py::arg("kernel"));
  m.def(
      "apply_noise",
      [](const Array& img, double sigma255, std::uint64_t seed) {
        RngStream stream(seed);
        return to_array(apply_noise(to_image(img), sigma255, stream));
      },
      py::arg("image"), py::arg("sigma255"), py::arg("seed"));
  m.def(
      "mix_pair",
      [](const Array& clean_x, std::vector<double> clean_y, const Array& noisy_x, std::vector<double> noisy_y,
         double lambda) {
        const Sample out = mix_pair({to_image(clean_x), std::move(clean_y)}, {to_image(noisy_x), std::move(noisy_y)},
                                    lambda);
        return py::make_tuple(to_array(out.x), out.y);
      },
      py::arg("clean_x"), py::arg("clean_y"), py::arg("noisy_x"), py::arg("noisy_y"), py::arg("lam"));

  m.def(
      "generate_synthetic",
      [](std::size_t per_class, std::uint64_t seed) {
        SynthConfig cfg;
        cfg.per_class = per_class;
        cfg.seed = seed;
        const Dataset d = generate_synthetic(cfg);
        const Image& first = d.images.front();
        py::array_t<double> x({d.size(), first.height(), first.width(), first.channels()});
        double* dst = x.mutable_data();
        for (const Image& img : d.images) dst = std::copy(img.pixels().begin(), img.pixels().end(), dst);
        return py::make_tuple(x, d.labels, d.class_names);
      },
      py::arg("per_class") = 500, py::arg("seed") = 7);

  py::class_<EnsembleModel>(m, "EnsembleModel")
      .def_static("load", &load_ensemble, py::arg("manifest"))
      .def("__len__", &EnsembleModel::size)
      .def_property_readonly("architecture", [](const EnsembleModel& e) { return e.architecture().to_string(); })
      .def_property_readonly("specialties",
                             [](const EnsembleModel& e) {
                               std::vector<std::string> out;
                               for (std::size_t i : e.canonical_order()) {
                                 out.emplace_back(to_string(e.snapshots()[i].specialty));
                               }
                               return out;
                             })
      .def("predict", [](const EnsembleModel& e, const Array& img) { return predict_ensemble(e, to_image(img)); },
           py::arg("image"));
  m.def("top_k", [](std::vector<double> dist, std::size_t k) { return top_k(dist, k); }, py::arg("dist"),
        py::arg("k"));

  m.def(
      "train_synthetic",
      [](const std::string& config_text, bool baseline, const std::filesystem::path& out_dir) {
        RunConfig cfg = parse_run_config(config_text);
        cfg.train.plan = cfg.plan(baseline);
        const Dataset data = generate_synthetic(cfg.synth);
        const Dataset train = split(data, cfg.test_fraction, cfg.seed).first;
        std::vector<double> lrs;
        TrainHooks hooks;
        hooks.on_step = [&](const TrainLogRow& r) { lrs.push_back(r.lr); };
        EnsembleModel model;
        {
          py::gil_scoped_release release;
          model = baseline ? train_baseline(train, cfg.train, hooks) : train_gspecialist(train, cfg.train, hooks);
        }
        return py::make_tuple(save_ensemble(model, out_dir), lrs);
      },
      py::arg("config_text"), py::arg("baseline"), py::arg("out_dir"));

  m.def(
      "read_sweep_csv",
      [](const std::string& text) {
        std::istringstream in(text);
        py::list rows;
        for (const SweepRow& r : read_sweep_csv(in)) {
          rows.append(py::make_tuple(r.model, r.family, r.level, r.top1, r.topk, r.n));
        }
        return rows;
      },
      py::arg("text"));
  m.def(
      "render_sweep_svg",
      [](const std::string& text) {
        std::istringstream in(text);
        return render_sweep_svg(read_sweep_csv(in));
      },
      py::arg("csv_text"));
}

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "vcmbench/augmentation.hpp"
#include "vcmbench/bd.hpp"
#include "vcmbench/cli.hpp"
#include "vcmbench/codec_orchestrator.hpp"
#include "vcmbench/datamodel.hpp"
#include "vcmbench/detection_metrics.hpp"
#include "vcmbench/error.hpp"
#include "vcmbench/geometry.hpp"
#include "vcmbench/quality_metrics.hpp"
#include "vcmbench/rd_pipeline.hpp"
#include "vcmbench/selftest.hpp"

namespace py = pybind11;
using namespace vcmbench;

namespace {

using Box = std::tuple<double, double, double, double>;
using Pt = std::tuple<double, double, double>;  // qp, bpp, metric

BBox to_bbox(const Box& b) { return {std::get<0>(b), std::get<1>(b), std::get<2>(b), std::get<3>(b)}; }

RleMask rle_from_str(const std::string& s) { return rle_from_json(nlohmann::json::parse(s)); }

RdCurve to_curve(const std::vector<Pt>& pts, const std::string& name) {
  RdCurve c;
  c.method = name;
  for (const auto& [qp, bpp, m] : pts) c.points.push_back({qp, bpp, 0.0, m, 0});
  std::sort(c.points.begin(), c.points.end(), [](const RdPoint& a, const RdPoint& b) { return a.bpp < b.bpp; });
  return c;
}

Image to_image(const py::array& arr, int bit_depth) {
  auto a = py::array_t<std::uint16_t, py::array::c_style | py::array::forcecast>::ensure(arr);
  if (!a) throw DataError("psnr: expected a numeric array");
  if (a.ndim() != 2 && !(a.ndim() == 3 && a.shape(2) == 3)) throw DataError("psnr: expected HxW or HxWx3");
  const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  const int c = a.ndim() == 3 ? 3 : 1;
  Image img = make_image(c == 3 ? ColorModel::rgb : ColorModel::gray, w, h, bit_depth);
  const auto* p = a.data();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int k = 0; k < c; ++k)
        img.planes[k].samples[static_cast<std::size_t>(y) * w + x] = p[(static_cast<std::size_t>(y) * w + x) * c + k];
  return img;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "vcm-bench core bindings";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<CodecError>(m, "CodecError", PyExc_RuntimeError);

  m.def("bbox_iou", [](const Box& a, const Box& b) { return bbox_iou(to_bbox(a), to_bbox(b)); });

  m.def("rle_encode", [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> a) {
    if (a.ndim() != 2) throw DataError("rle_encode: expected a 2-D array");
    const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
    Bitmask bm(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) bm.set(x, y, a.at(y, x) != 0);
    return rle_to_json(rle_encode(bm)).dump();
  });
  m.def("rle_decode", [](const std::string& rle) {
    const Bitmask bm = rle_decode(rle_from_str(rle));
    py::array_t<std::uint8_t> out({bm.height, bm.width});
    auto v = out.mutable_unchecked<2>();
    for (int y = 0; y < bm.height; ++y)
      for (int x = 0; x < bm.width; ++x) v(y, x) = bm.at(x, y) ? 1 : 0;
    return out;
  });
  m.def("mask_iou", [](const std::string& a, const std::string& b) { return mask_iou(rle_from_str(a), rle_from_str(b)); });
  m.def("rasterize_polygon", [](const std::vector<std::pair<double, double>>& pts, int width, int height) {
    Polygon poly;
    for (const auto& [x, y] : pts) poly.push_back({x, y});
    auto r = rasterize_polygon(poly, width, height);
    return py::make_tuple(rle_to_json(r.mask).dump(), r.warnings);
  });

  m.def(
      "evaluate",
      [](const std::string& gt_json, const std::string& dets_json, const std::string& kind,
         const std::string& weight_mode, double min_gt_area) {
        const auto gt = parse_ground_truth(gt_json);
        const auto dets = parse_detections(dets_json, gt.classes);
        EvalConfig cfg;
        cfg.kind = iou_kind_from_string(kind);
        cfg.weight_mode = weight_mode_from_string(weight_mode);
        cfg.min_gt_area = min_gt_area;
        const auto br = ap_per_class(gt, dets, cfg);
        const auto w = class_weights(gt, cfg.weight_mode, cfg.min_gt_area, cfg.kind);
        return metrics_to_json(br, w, weighted_ap(br, w), cfg).dump();
      },
      py::arg("gt_json"), py::arg("dets_json"), py::arg("kind") = "box", py::arg("weight_mode") = "instances",
      py::arg("min_gt_area") = 0.0);

  m.def(
      "psnr",
      [](const py::array& a, const py::array& b, int bit_depth, const std::string& policy) {
        return psnr(to_image(a, bit_depth), to_image(b, bit_depth), psnr_policy_from_string(policy));
      },
      py::arg("original"), py::arg("decoded"), py::arg("bit_depth") = 8, py::arg("policy") = "luma");

  m.def("bitrate_of_run", [](const std::vector<std::uint64_t>& bytes, const std::vector<std::pair<int, int>>& dims) {
    std::vector<ImageDims> d;
    for (const auto& [w, h] : dims) d.push_back({w, h});
    const auto s = bitrate_of_run(bytes, d);
    return py::make_tuple(s.mean_bpp, s.mean_kbit_per_image);
  });

  m.def(
      "bd_metric",
      [](const std::vector<Pt>& anchor, const std::vector<Pt>& test, const std::string& interp) {
        return bd_metric(to_curve(anchor, "anchor"), to_curve(test, "test"), interpolation_from_string(interp)).value;
      },
      py::arg("anchor"), py::arg("test"), py::arg("interp") = "cubic");
  m.def(
      "bd_rate",
      [](const std::vector<Pt>& anchor, const std::vector<Pt>& test, const std::string& interp) {
        return bd_rate(to_curve(anchor, "anchor"), to_curve(test, "test"), interpolation_from_string(interp)).value;
      },
      py::arg("anchor"), py::arg("test"), py::arg("interp") = "cubic");
  m.def("select_qp_subset", [](const std::vector<Pt>& pts, const std::string& subset) {
    std::vector<Pt> out;
    for (const auto& p : select_qp_subset(to_curve(pts, "c"), qp_subset_from_string(subset)).points) {
      out.emplace_back(p.quality_param, p.bpp, p.metric);
    }
    return out;
  });

  m.def("render_command", [](const std::string& tmpl, const Bindings& b) { return render_command(tmpl, b); });

  m.def("iteration_defaults", [](const std::string& detector) {
    const auto& d = iteration_defaults(detector);
    return py::make_tuple(d.classic, d.augmentation, d.finetune);
  });
  m.def("default_finetune_schedule", [](const std::string& detector) {
    return schedule_to_json(default_finetune_schedule(detector, ImageSelector{false, true, "", {}})).dump();
  });
  m.def("build_manifest", [](const std::string& mode, const std::string& pristine_dir, const std::string& runs_json,
                             const std::string& detector) {
    const auto pristine = pristine_records_from_dir(pristine_dir);
    const auto runs = runs_from_json(nlohmann::json::parse(runs_json));
    AugmentOptions o;
    o.detector = detector;
    if (mode == "augment") return serialize_manifest(build_augmented_manifest(pristine, runs, o));
    if (mode == "finetune") return serialize_manifest(build_finetune_manifest(pristine, runs, o));
    throw DataError("mode must be augment or finetune");
  });

  m.def(
      "run_selftest",
      [](const std::string& out_dir, const std::string& codec_dir, int n_images) {
        SelftestOptions o;
        o.out_dir = out_dir;
        o.codec_dir = codec_dir;
        o.n_images = n_images;
        py::gil_scoped_release nogil;
        return report_to_json(run_selftest(o).report).dump();
      },
      py::arg("out_dir"), py::arg("codec_dir") = "", py::arg("n_images") = 8);

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  });
}

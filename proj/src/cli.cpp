#include "vcmbench/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "vcmbench/augmentation.hpp"
#include "vcmbench/bd.hpp"
#include "vcmbench/codec_orchestrator.hpp"
#include "vcmbench/datamodel.hpp"
#include "vcmbench/error.hpp"
#include "vcmbench/process.hpp"
#include "vcmbench/rd_pipeline.hpp"
#include "vcmbench/selftest.hpp"

namespace vcmbench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kConfigSchemaVersion = 1;

// Shared JSON config. Relative paths resolve against the config file.
struct Config {
  json j = json::object();
  fs::path base;

  bool has(const char* key) const { return j.contains(key) && !j[key].is_null(); }
  fs::path path(const char* key) const {
    fs::path p = j.at(key).get<std::string>();
    return p.is_absolute() ? p : base / p;
  }
};

Config load_config(const std::string& file) {
  Config c;
  if (file.empty()) return c;
  try {
    c.j = json::parse(read_file(file));
  } catch (const json::parse_error& e) {
    throw DataError("config " + file + ": " + e.what());
  }
  if (!c.j.is_object()) throw DataError("config " + file + ": expected an object");
  const int version = c.j.value("schema_version", kConfigSchemaVersion);
  if (version != kConfigSchemaVersion) {
    throw DataError("config " + file + ": unsupported schema_version " + std::to_string(version));
  }
  c.base = fs::path(file).parent_path();
  return c;
}

// Flag value if given, else the config entry, else the fallback.
std::string pick(const std::string& flag, const Config& cfg, const char* key, std::string fallback = {}) {
  if (!flag.empty()) return flag;
  if (cfg.has(key)) return cfg.j[key].is_string() ? cfg.j[key].get<std::string>() : cfg.j[key].dump();
  return fallback;
}

fs::path pick_path(const std::string& flag, const Config& cfg, const char* key) {
  if (!flag.empty()) return flag;
  if (cfg.has(key)) return cfg.path(key);
  return {};
}

std::vector<double> pick_qps(const std::vector<double>& flag, const Config& cfg) {
  if (!flag.empty()) return flag;
  if (cfg.has("qps")) return cfg.j["qps"].get<std::vector<double>>();
  return {kDefaultQpGrid.begin(), kDefaultQpGrid.end()};
}

// Cell files named on the command line or in the config; directories expand
// to their *.json files in name order.
std::vector<fs::path> cell_files(const std::vector<std::string>& flag, const Config& cfg) {
  std::vector<fs::path> roots(flag.begin(), flag.end());
  if (roots.empty() && cfg.has("cells")) {
    for (const auto& v : cfg.j["cells"]) {
      fs::path p = v.get<std::string>();
      roots.push_back(p.is_absolute() ? p : cfg.base / p);
    }
  }
  if (roots.empty() && cfg.has("cells_dir")) roots.push_back(cfg.path("cells_dir"));
  if (roots.empty()) throw UsageError("no evaluation cells given (--cells or config \"cells\")");
  std::vector<fs::path> files;
  for (const auto& r : roots) {
    if (fs::is_directory(r)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(r)) {
        if (e.is_regular_file() && e.path().extension() == ".json") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::exists(r)) {
      files.push_back(r);
    } else {
      throw DataError("cell path not found: " + r.string());
    }
  }
  if (files.empty()) throw DataError("no cell files found");
  return files;
}

std::vector<EvaluationCell> load_cells(const std::vector<fs::path>& files) {
  std::vector<EvaluationCell> cells;
  for (const auto& f : files) cells.push_back(read_cell(f));
  return cells;
}

std::vector<CompressionRun> load_runs(const fs::path& p) {
  const fs::path file = fs::is_directory(p) ? p / "runs.json" : p;
  try {
    return runs_from_json(json::parse(read_file(file)));
  } catch (const json::exception& e) {
    throw DataError(file.string() + ": " + e.what());
  }
}

void write_or_print(const fs::path& out_file, const std::string& text, std::ostream& out) {
  if (out_file.empty()) {
    out << text;
  } else {
    write_file_atomic(out_file, text);
    out << "wrote " << out_file.string() << "\n";
  }
}

// Median per-image quality reaching each target PSNR.
std::vector<double> qualities_for_targets(const std::vector<fs::path>& images, const CodecProfile& profile,
                                          const std::vector<double>& targets, const fs::path& out_dir,
                                          std::ostream& out) {
  json log = json::array();
  std::vector<double> qualities;
  for (double target : targets) {
    TargetSearchOptions so;
    so.target_db = target;
    std::vector<double> found;
    json per_image = json::array();
    for (const auto& img : images) {
      const auto r = search_quality_for_target_psnr(img, profile, so, out_dir / "search");
      found.push_back(r.quality);
      per_image.push_back({{"image", img.filename().string()},
                           {"quality", r.quality},
                           {"psnr", r.psnr},
                           {"iterations", r.iterations},
                           {"converged", r.converged}});
    }
    std::sort(found.begin(), found.end());
    const double q = found[(found.size() - 1) / 2];
    out << "target " << target << " dB -> quality " << format_quality(q) << "\n";
    qualities.push_back(q);
    log.push_back({{"target_db", target}, {"quality", q}, {"images", per_image}});
  }
  write_file_atomic(out_dir / "target_search.json", log.dump(1) + "\n");
  return qualities;
}

struct CompressArgs {
  std::string config, profile, in, out;
  std::vector<double> qps, targets;
  int jobs = 0;
  bool strict = false;
};

int cmd_compress(const CompressArgs& a, std::ostream& out) {
  const Config cfg = load_config(a.config);
  const fs::path profile_path = pick_path(a.profile, cfg, "profile");
  const fs::path in = pick_path(a.in, cfg, "images");
  const fs::path out_dir = pick_path(a.out, cfg, "runs_dir");
  if (profile_path.empty()) throw UsageError("--profile is required");
  if (in.empty()) throw UsageError("--in is required");
  if (out_dir.empty()) throw UsageError("--out is required");
  const CodecProfile profile = parse_codec_profile(read_file(profile_path));
  const auto images = list_images(in);
  if (images.empty()) throw DataError("no PNG images in " + in.string());

  SweepOptions so;
  so.out_dir = out_dir;
  so.strict = a.strict || cfg.j.value("strict", false);
  so.parallelism = a.jobs > 0 ? a.jobs : cfg.j.value("parallelism", 1);
  fs::create_directories(out_dir);
  so.qps = a.targets.empty() ? pick_qps(a.qps, cfg) : qualities_for_targets(images, profile, a.targets, out_dir, out);

  SweepStats stats;
  const auto runs = run_sweep(images, profile, so, &stats);
  write_file_atomic(out_dir / "runs.json", runs_to_json(runs).dump(1) + "\n");
  out << "runs: " << runs.size() << ", executed: " << stats.executed << ", cached: " << stats.cache_hits
      << ", failed: " << stats.failures << "\n";
  for (const auto& run : runs) {
    for (const auto& it : run.items) {
      if (it.status == ItemStatus::failed) out << "failed " << it.stem << " @ " << format_quality(run.quality_param) << ": " << it.diagnostics << "\n";
    }
  }
  return kExitOk;
}

struct ManifestArgs {
  std::string config, mode, pristine, detector, name, out;
  std::vector<std::string> runs;
  long long iterations = 0;
};

int cmd_manifest(const ManifestArgs& a, std::ostream& out) {
  const Config cfg = load_config(a.config);
  const fs::path pristine = pick_path(a.pristine, cfg, "images");
  if (pristine.empty()) throw UsageError("--pristine is required");
  std::vector<fs::path> run_files(a.runs.begin(), a.runs.end());
  if (run_files.empty() && cfg.has("runs_dir")) run_files.push_back(cfg.path("runs_dir"));
  std::vector<CompressionRun> runs;
  for (const auto& f : run_files) {
    auto more = load_runs(f);
    runs.insert(runs.end(), more.begin(), more.end());
  }

  AugmentOptions ao;
  ao.detector = pick(a.detector, cfg, "detector", "faster_rcnn");
  ao.iterations = a.iterations;
  const auto records = pristine_records_from_dir(pristine);
  DatasetManifest m;
  if (a.mode == "augment") {
    ao.name = a.name.empty() ? "augmented" : a.name;
    m = build_augmented_manifest(records, runs, ao);
  } else {
    ao.name = a.name.empty() ? "finetune" : a.name;
    m = build_finetune_manifest(records, runs, ao);
  }
  const auto report = validate_manifest(m);
  if (!report.ok()) {
    std::string msg = "manifest invalid:";
    for (const auto& v : report.violations) msg += "\n  " + v.kind + ": " + v.message;
    throw DataError(msg);
  }
  write_or_print(a.out, serialize_manifest(m) + "\n", out);
  return kExitOk;
}

struct ScoreArgs {
  std::string config, gt, dets, kind, method, detector, qp, runs, weight_mode, out;
  double min_gt_area = -1.0;
};

int cmd_score(const ScoreArgs& a, std::ostream& out) {
  const Config cfg = load_config(a.config);
  const fs::path gt_path = pick_path(a.gt, cfg, "gt");
  if (gt_path.empty()) throw UsageError("--gt is required");
  if (a.dets.empty()) throw UsageError("--dets is required");
  const GroundTruthSet gt = parse_ground_truth(read_file(gt_path));
  const DetectionSet dets = parse_detections(read_file(a.dets), gt.classes);

  ScoreRequest req;
  req.method = a.method.empty() ? "default" : a.method;
  req.detector = pick(a.detector, cfg, "detector", "default");
  req.detections_path = a.dets;
  req.eval.kind = iou_kind_from_string(pick(a.kind, cfg, "kind", "box"));
  req.eval.weight_mode = weight_mode_from_string(pick(a.weight_mode, cfg, "weight_mode", "instances"));
  req.eval.min_gt_area = a.min_gt_area >= 0.0 ? a.min_gt_area : cfg.j.value("min_gt_area", 0.0);
  if (!a.qp.empty() && a.qp != "none") {
    try {
      req.qp = std::stod(a.qp);
    } catch (const std::exception&) {
      throw UsageError("--qp expects a number or 'none', got '" + a.qp + "'");
    }
    const fs::path runs_path = pick_path(a.runs, cfg, "runs_dir");
    if (!runs_path.empty()) {
      const auto runs = load_runs(runs_path);
      const auto it = std::find_if(runs.begin(), runs.end(), [&](const CompressionRun& r) { return r.quality_param == *req.qp; });
      if (it == runs.end()) throw DataError("no compression run for qp " + format_quality(*req.qp));
      req.bitrate = it->bitrate();
    }
  }
  const EvaluationCell cell = score_cell(gt, dets, req);
  if (a.out.empty()) {
    out << cell_to_json(cell).dump(1) << "\n";
  } else {
    write_cell(a.out, cell);
    out << "weighted AP " << format_metric(cell.weighted_ap) << " -> " << a.out << "\n";
  }
  return kExitOk;
}

struct BdArgs {
  std::string config, anchor, subset, interp, out;
  std::vector<std::string> cells;
};

ComparisonReport build_report(const Config& cfg, const std::string& anchor_flag, const std::string& interp_flag,
                              const std::vector<std::string>& cells_flag) {
  const std::string anchor = pick(anchor_flag, cfg, "anchor");
  if (anchor.empty()) throw UsageError("--anchor is required");
  const Interpolation interp = interpolation_from_string(pick(interp_flag, cfg, "interpolation", "cubic"));
  const auto cells = load_cells(cell_files(cells_flag, cfg));
  return compare_cells(cells, anchor, interp);
}

int cmd_bd(const BdArgs& a, std::ostream& out) {
  const Config cfg = load_config(a.config);
  const ComparisonReport r = build_report(cfg, a.anchor, a.interp, a.cells);
  const std::string subset = pick(a.subset, cfg, "subset", "both");
  std::vector<QpSubset> subsets;
  if (subset == "both") {
    subsets = {QpSubset::standard, QpSubset::low_bitrate};
  } else {
    subsets = {qp_subset_from_string(subset)};
  }
  std::string text;
  for (bool rate : {false, true}) {
    for (QpSubset s : subsets) text += render_bd_table(r, s, rate) + "\n";
  }
  for (const auto& d : r.detectors) {
    for (const auto& f : d.flags) text += "warning: " + d.detector + ": " + f + "\n";
  }
  write_or_print(a.out, text, out);
  return kExitOk;
}

struct ReportArgs {
  std::string config, anchor, interp, format, out;
  std::vector<std::string> cells;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
  const Config cfg = load_config(a.config);
  const ComparisonReport r = build_report(cfg, a.anchor, a.interp, a.cells);
  const ReportFormat fmt = report_format_from_string(pick(a.format, cfg, "format", "md"));
  const fs::path dir = pick_path(a.out, cfg, "report_dir");
  if (dir.empty()) throw UsageError("--out is required");
  for (const auto& p : emit_report(r, fmt, dir)) out << "wrote " << p.string() << "\n";
  return kExitOk;
}

struct SelftestArgs {
  std::string out;
  int jobs = 1;
  int images = 8;
};

int cmd_selftest(const SelftestArgs& a, std::ostream& out) {
  SelftestOptions so;
  if (a.out.empty()) {
    std::string tmpl = (fs::temp_directory_path() / "vcm-bench-selftest-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw DataError("cannot create a temporary directory");
    so.out_dir = tmpl;
  } else {
    so.out_dir = a.out;
  }
  so.parallelism = a.jobs;
  so.n_images = a.images;
  const SelftestResult r = run_selftest(so);
  out << "codec items executed: " << r.executed << ", cached: " << r.cache_hits << "\n";
  for (const auto& f : r.report_files) out << "wrote " << f.string() << "\n";
  out << "\n" << render_markdown(r.report);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Benchmark toolkit for detection on compressed images", "vcm-bench"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "0.1.0");

  CompressArgs ca;
  auto* compress = app.add_subcommand("compress", "Encode and decode every image at every quality level");
  compress->add_option("--config", ca.config, "JSON config file")->check(CLI::ExistingFile);
  compress->add_option("--profile", ca.profile, "Codec profile JSON");
  compress->add_option("--qps", ca.qps, "Quality parameters (comma separated)")->delimiter(',');
  compress->add_option("--target-psnr", ca.targets, "Target PSNR values in dB; searched per image, median used")
      ->delimiter(',');
  compress->add_option("--in", ca.in, "Directory of PNG images");
  compress->add_option("--out", ca.out, "Output directory for bitstreams, decoded images and records");
  compress->add_option("-j,--jobs", ca.jobs, "Parallel codec invocations")->check(CLI::PositiveNumber);
  compress->add_flag("--strict", ca.strict, "Exit with an error if any item fails");

  ManifestArgs ma;
  auto* manifest = app.add_subcommand("manifest", "Build a training manifest and schedule");
  manifest->add_option("--config", ma.config, "JSON config file")->check(CLI::ExistingFile);
  manifest->add_option("--mode", ma.mode, "augment or finetune")->required()->check(CLI::IsMember({"augment", "finetune"}));
  manifest->add_option("--pristine", ma.pristine, "Directory of pristine PNG images");
  manifest->add_option("--runs", ma.runs, "runs.json file or compress output directory (repeatable)");
  manifest->add_option("--detector", ma.detector, "faster_rcnn or mask_rcnn");
  manifest->add_option("--name", ma.name, "Manifest name");
  manifest->add_option("--iterations", ma.iterations, "Mixed-phase iterations (augment mode, 0 = default)");
  manifest->add_option("--out", ma.out, "Output file (stdout if absent)");

  ScoreArgs sa;
  auto* score = app.add_subcommand("score", "Score detections against ground truth into an evaluation cell");
  score->add_option("--config", sa.config, "JSON config file")->check(CLI::ExistingFile);
  score->add_option("--gt", sa.gt, "Ground-truth JSON");
  score->add_option("--dets", sa.dets, "Detections JSON");
  score->add_option("--kind", sa.kind, "box or mask");
  score->add_option("--method", sa.method, "Training method label");
  score->add_option("--detector", sa.detector, "Detector label");
  score->add_option("--qp", sa.qp, "Quality parameter of the input, or 'none' for uncompressed");
  score->add_option("--runs", sa.runs, "runs.json used to attach the bitrate of --qp");
  score->add_option("--weight-mode", sa.weight_mode, "instances or images");
  score->add_option("--min-gt-area", sa.min_gt_area, "Ground truth smaller than this is ignored");
  score->add_option("--out", sa.out, "Cell output file (stdout if absent)");

  BdArgs ba;
  auto* bd = app.add_subcommand("bd", "Bjontegaard deltas of every method against an anchor");
  bd->add_option("--config", ba.config, "JSON config file")->check(CLI::ExistingFile);
  bd->add_option("--anchor", ba.anchor, "Anchor method label (required unless set in the config)");
  bd->add_option("--subset", ba.subset, "standard, low or both");
  bd->add_option("--cells", ba.cells, "Cell files or directories");
  bd->add_option("--interp", ba.interp, "cubic or pchip");
  bd->add_option("--out", ba.out, "Output file (stdout if absent)");

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "Write BD tables and plot data");
  report->add_option("--config", ra.config, "JSON config file")->check(CLI::ExistingFile);
  report->add_option("--format", ra.format, "md, csv, plotdata or json");
  report->add_option("--anchor", ra.anchor, "Anchor method label (required unless set in the config)");
  report->add_option("--cells", ra.cells, "Cell files or directories");
  report->add_option("--interp", ra.interp, "cubic or pchip");
  report->add_option("--out", ra.out, "Output directory");

  SelftestArgs ta;
  auto* selftest = app.add_subcommand("selftest", "Run the whole pipeline on synthetic data with the mock codec");
  selftest->add_option("--out", ta.out, "Output directory (a fresh temporary directory if absent)");
  selftest->add_option("-j,--jobs", ta.jobs, "Parallel codec invocations")->check(CLI::PositiveNumber);
  selftest->add_option("--images", ta.images, "Number of synthetic images")->check(CLI::PositiveNumber);

  CLI::App* active = &app;
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
    for (auto* sub : app.get_subcommands()) active = sub;
    if (compress->parsed()) return cmd_compress(ca, out);
    if (manifest->parsed()) return cmd_manifest(ma, out);
    if (score->parsed()) return cmd_score(sa, out);
    if (bd->parsed()) return cmd_bd(ba, out);
    if (report->parsed()) return cmd_report(ra, out);
    if (selftest->parsed()) return cmd_selftest(ta, out);
    return kExitUsage;
  } catch (const CLI::CallForHelp&) {
    for (auto* sub : app.get_subcommands()) active = sub;
    out << active->help();
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    for (auto* sub : app.get_subcommands()) active = sub;
    err << "error: " << e.what() << "\n\n" << active->help();
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << active->help();
    return kExitUsage;
  } catch (const CodecError& e) {
    err << "codec error: " << e.what() << "\n";
    return kExitCodec;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace vcmbench

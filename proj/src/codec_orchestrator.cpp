#include "vcmbench/codec_orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "vcmbench/error.hpp"
#include "vcmbench/image_io.hpp"
#include "vcmbench/process.hpp"

namespace vcmbench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kKnownPlaceholders{"input", "output", "qp", "quality", "width", "height"};

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream is{std::string(s)};
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::size_t count_of(const std::vector<std::string>& v, const std::string& x) {
  return static_cast<std::size_t>(std::count(v.begin(), v.end(), x));
}

void validate_template(const std::string& which, const std::string& tmpl) {
  const auto ph = template_placeholders(tmpl);
  for (const auto& p : ph) {
    if (!kKnownPlaceholders.count(p)) throw DataError(which + " template: unknown placeholder {" + p + "}");
  }
  for (const char* req : {"input", "output"}) {
    const auto n = count_of(ph, req);
    if (n != 1) {
      throw DataError(which + " template must reference {" + std::string(req) + "} exactly once (found " +
                      std::to_string(n) + ")");
    }
  }
}

std::string tail(const std::string& s, std::size_t n = 2000) { return s.size() <= n ? s : s.substr(s.size() - n); }

}  // namespace

std::vector<std::string> template_placeholders(std::string_view tmpl) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = tmpl.find('{', pos)) != std::string_view::npos) {
    const auto end = tmpl.find('}', pos);
    if (end == std::string_view::npos) throw DataError("unterminated placeholder in template");
    out.emplace_back(tmpl.substr(pos + 1, end - pos - 1));
    pos = end + 1;
  }
  return out;
}

std::vector<std::string> render_command(std::string_view tmpl, const Bindings& bindings) {
  std::vector<std::string> argv;
  for (const auto& tok : split_ws(tmpl)) {
    std::string out;
    std::size_t pos = 0;
    while (true) {
      const auto open = tok.find('{', pos);
      if (open == std::string::npos) {
        out += tok.substr(pos);
        break;
      }
      const auto close = tok.find('}', open);
      if (close == std::string::npos) throw DataError("unterminated placeholder in '" + tok + "'");
      out += tok.substr(pos, open - pos);
      const std::string name = tok.substr(open + 1, close - open - 1);
      if (!kKnownPlaceholders.count(name)) throw DataError("unknown placeholder {" + name + "}");
      const auto it = bindings.find(name);
      if (it == bindings.end()) throw DataError("unbound placeholder {" + name + "}");
      out += it->second;
      pos = close + 1;
    }
    argv.push_back(std::move(out));
  }
  if (argv.empty()) throw DataError("empty command template");
  return argv;
}

void validate_profile(const CodecProfile& p) {
  if (p.name.empty()) throw DataError("codec profile needs a name");
  validate_template("encode", p.encode_template);
  validate_template("decode", p.decode_template);
  const auto enc = template_placeholders(p.encode_template);
  const auto dec = template_placeholders(p.decode_template);
  const std::string want = p.quality_axis == QualityAxis::qp_integer ? "qp" : "quality";
  const std::string other = p.quality_axis == QualityAxis::qp_integer ? "quality" : "qp";
  if (count_of(enc, want) == 0) {
    throw DataError("encode template must use {" + want + "} for quality axis " + std::string(to_string(p.quality_axis)));
  }
  if (count_of(enc, other) || count_of(dec, other)) {
    throw DataError("{" + other + "} is inconsistent with quality axis " + std::string(to_string(p.quality_axis)));
  }
  if (!(p.quality_max > p.quality_min)) throw DataError("profile quality range is empty");
}

std::string_view to_string(QualityAxis a) { return a == QualityAxis::qp_integer ? "qp_integer" : "continuous_quality"; }

QualityAxis quality_axis_from_string(std::string_view s) {
  if (s == "qp_integer") return QualityAxis::qp_integer;
  if (s == "continuous_quality") return QualityAxis::continuous_quality;
  throw DataError("unknown quality axis '" + std::string(s) + "'");
}

CodecProfile parse_codec_profile(std::string_view bytes) {
  CodecProfile p;
  try {
    const json j = json::parse(bytes.begin(), bytes.end());
    p.name = j.at("name").get<std::string>();
    p.encode_template = j.at("encode").get<std::string>();
    p.decode_template = j.at("decode").get<std::string>();
    p.quality_axis = quality_axis_from_string(j.value("quality_axis", "qp_integer"));
    if (j.contains("quality_range")) {
      p.quality_min = j["quality_range"].at(0).get<double>();
      p.quality_max = j["quality_range"].at(1).get<double>();
    } else if (p.quality_axis == QualityAxis::continuous_quality) {
      p.quality_max = 100.0;
    }
    p.intra_only = j.value("intra_only", true);
    p.bitstream_ext = j.value("bitstream_ext", ".bin");
    p.decoded_ext = j.value("decoded_ext", ".png");
  } catch (const json::exception& e) {
    throw DataError(std::string("codec profile: ") + e.what());
  }
  validate_profile(p);
  return p;
}

json profile_to_json(const CodecProfile& p) {
  return {{"schema_version", 1},
          {"name", p.name},
          {"encode", p.encode_template},
          {"decode", p.decode_template},
          {"quality_axis", to_string(p.quality_axis)},
          {"quality_range", json::array({p.quality_min, p.quality_max})},
          {"intra_only", p.intra_only},
          {"bitstream_ext", p.bitstream_ext},
          {"decoded_ext", p.decoded_ext}};
}

std::string profile_hash(const CodecProfile& p) { return sha256_hex(profile_to_json(p).dump()); }

std::string format_quality(double q) {
  if (q == std::floor(q) && std::abs(q) < 1e15) return std::to_string(static_cast<long long>(q));
  std::ostringstream os;
  os.precision(17);
  os << q;
  return os.str();
}

std::string variant_name(const std::string& stem, const CodecProfile& p, double quality) {
  return stem + (p.quality_axis == QualityAxis::qp_integer ? "_qp" : "_q") + format_quality(quality);
}

bool CompressionRun::ok() const {
  return std::all_of(items.begin(), items.end(), [](const RunItem& i) { return i.status != ItemStatus::failed; });
}

BitrateStats CompressionRun::bitrate() const {
  std::vector<std::uint64_t> bytes;
  std::vector<ImageDims> dims;
  for (const auto& it : items) {
    if (it.status == ItemStatus::failed) continue;
    bytes.push_back(it.bitstream_bytes);
    dims.push_back({it.width, it.height});
  }
  return bitrate_of_run(bytes, dims);
}

std::vector<fs::path> list_images(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) throw DataError("'" + dir.string() + "' is not a directory");
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

std::string_view to_string(ItemStatus s) {
  switch (s) {
    case ItemStatus::ok: return "ok";
    case ItemStatus::cached: return "cached";
    case ItemStatus::failed: return "failed";
  }
  return "failed";
}

ItemStatus item_status_from_string(std::string_view s) {
  if (s == "ok") return ItemStatus::ok;
  if (s == "cached") return ItemStatus::cached;
  return ItemStatus::failed;
}

json item_to_json(const RunItem& it) {
  return {{"stem", it.stem},
          {"input", it.input_path},
          {"input_hash", it.input_hash},
          {"bitstream", it.bitstream_path},
          {"decoded", it.decoded_path},
          {"bitstream_hash", it.bitstream_hash},
          {"bytes", it.bitstream_bytes},
          {"width", it.width},
          {"height", it.height},
          {"wall_seconds", it.wall_seconds},
          {"status", to_string(it.status)},
          {"diagnostics", it.diagnostics}};
}

RunItem item_from_json(const json& j) {
  RunItem it;
  it.stem = j.at("stem").get<std::string>();
  it.input_path = j.value("input", "");
  it.input_hash = j.value("input_hash", "");
  it.bitstream_path = j.value("bitstream", "");
  it.decoded_path = j.value("decoded", "");
  it.bitstream_hash = j.value("bitstream_hash", "");
  it.bitstream_bytes = j.value("bytes", std::uint64_t{0});
  it.width = j.value("width", 0);
  it.height = j.value("height", 0);
  it.wall_seconds = j.value("wall_seconds", 0.0);
  it.status = item_status_from_string(j.value("status", "failed"));
  it.diagnostics = j.value("diagnostics", "");
  return it;
}

struct WorkItem {
  std::size_t image;
  std::size_t qp;
};

struct ItemPaths {
  fs::path bitstream, decoded, record, log;
};

ItemPaths paths_for(const fs::path& out_dir, const std::string& name, const CodecProfile& p) {
  return {out_dir / (name + p.bitstream_ext), out_dir / (name + p.decoded_ext), out_dir / (name + ".record.json"),
          out_dir / (name + ".log")};
}

Bindings bindings_for(const CodecProfile& p, double q, int w, int h) {
  Bindings b;
  b[p.quality_axis == QualityAxis::qp_integer ? "qp" : "quality"] = format_quality(q);
  if (w > 0) b["width"] = std::to_string(w);
  if (h > 0) b["height"] = std::to_string(h);
  return b;
}

// Runs one codec step; returns an empty string on success, diagnostics otherwise.
std::string run_step(const char* what, const std::string& tmpl, Bindings b, const fs::path& in, const fs::path& out,
                     const fs::path& log) {
  b["input"] = in.string();
  b["output"] = out.string();
  std::error_code ec;
  fs::remove(out, ec);
  try {
    const auto argv = render_command(tmpl, b);
    const ProcessResult r = run_process(argv, log);
    if (r.exit_code != 0) {
      return std::string(what) + " exited with code " + std::to_string(r.exit_code) + ": " + tail(r.output);
    }
  } catch (const std::exception& e) {
    return std::string(what) + ": " + e.what();
  }
  if (!fs::exists(out, ec) || fs::file_size(out, ec) == 0) {
    return std::string(what) + " produced no output at '" + out.string() + "'";
  }
  return {};
}

}  // namespace

json runs_to_json(const std::vector<CompressionRun>& runs) {
  json arr = json::array();
  for (const auto& r : runs) {
    json items = json::array();
    for (const auto& it : r.items) items.push_back(item_to_json(it));
    arr.push_back({{"profile", r.profile}, {"profile_hash", r.profile_hash}, {"quality", r.quality_param}, {"items", items}});
  }
  return {{"schema_version", 1}, {"runs", arr}};
}

std::vector<CompressionRun> runs_from_json(const json& j) {
  std::vector<CompressionRun> out;
  try {
    for (const auto& r : j.at("runs")) {
      CompressionRun run;
      run.profile = r.at("profile").get<std::string>();
      run.profile_hash = r.value("profile_hash", "");
      run.quality_param = r.at("quality").get<double>();
      for (const auto& it : r.at("items")) run.items.push_back(item_from_json(it));
      out.push_back(std::move(run));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("runs file: ") + e.what());
  }
  return out;
}

std::vector<CompressionRun> run_sweep(const std::vector<fs::path>& images, const CodecProfile& profile,
                                      const SweepOptions& opts, SweepStats* stats) {
  validate_profile(profile);
  if (opts.qps.empty()) throw DataError("sweep needs at least one quality value");
  for (double q : opts.qps) {
    if (profile.quality_axis == QualityAxis::qp_integer && q != std::floor(q)) {
      throw DataError("QP " + format_quality(q) + " is not an integer");
    }
    if (q < profile.quality_min || q > profile.quality_max) {
      throw DataError("quality " + format_quality(q) + " outside the profile range");
    }
  }
  fs::create_directories(opts.out_dir);
  const std::string phash = profile_hash(profile);

  std::vector<std::string> input_hashes(images.size());
  std::vector<std::pair<int, int>> dims(images.size(), {0, 0});
  for (std::size_t i = 0; i < images.size(); ++i) {
    input_hashes[i] = sha256_file(images[i]);
    if (images[i].extension() == ".png") dims[i] = png_dimensions(images[i]);
  }

  std::vector<WorkItem> work;
  for (std::size_t q = 0; q < opts.qps.size(); ++q) {
    for (std::size_t i = 0; i < images.size(); ++i) work.push_back({i, q});
  }
  std::vector<RunItem> results(work.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> executed{0}, hits{0};

  auto process = [&](const WorkItem& w) {
    const fs::path& input = images[w.image];
    const double q = opts.qps[w.qp];
    RunItem it;
    it.stem = input.stem().string();
    it.input_path = input.string();
    it.input_hash = input_hashes[w.image];
    it.width = dims[w.image].first;
    it.height = dims[w.image].second;
    const auto paths = paths_for(opts.out_dir, variant_name(it.stem, profile, q), profile);
    it.bitstream_path = paths.bitstream.string();
    it.decoded_path = paths.decoded.string();

    std::error_code ec;
    std::string previous_bitstream_hash;
    if (fs::exists(paths.record, ec)) {
      try {
        const json rec = json::parse(read_file(paths.record));
        const bool inputs_match = rec.value("input_hash", "") == it.input_hash &&
                                  rec.value("profile_hash", "") == phash && rec.value("quality", -1e300) == q;
        if (inputs_match) {
          previous_bitstream_hash = rec.value("bitstream_hash", "");
          if (fs::exists(paths.bitstream, ec) && fs::exists(paths.decoded, ec) &&
              sha256_file(paths.bitstream) == previous_bitstream_hash &&
              sha256_file(paths.decoded) == rec.value("decoded_hash", "")) {
            it.bitstream_hash = previous_bitstream_hash;
            it.bitstream_bytes = rec.value("bytes", std::uint64_t{0});
            it.wall_seconds = rec.value("wall_seconds", 0.0);
            it.status = ItemStatus::cached;
            ++hits;
            return it;
          }
        }
      } catch (const std::exception&) {
        // unreadable record: recompute
      }
    }

    ++executed;
    const auto t0 = std::chrono::steady_clock::now();
    const Bindings b = bindings_for(profile, q, it.width, it.height);
    std::string diag = run_step("encode", profile.encode_template, b, input, paths.bitstream, paths.log);
    if (diag.empty()) diag = run_step("decode", profile.decode_template, b, paths.bitstream, paths.decoded, paths.log);
    it.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!diag.empty()) {
      it.status = ItemStatus::failed;
      it.diagnostics = diag;
      fs::remove(paths.record, ec);
      return it;
    }
    it.bitstream_bytes = fs::file_size(paths.bitstream);
    it.bitstream_hash = sha256_file(paths.bitstream);
    it.status = ItemStatus::ok;
    if (!previous_bitstream_hash.empty() && previous_bitstream_hash != it.bitstream_hash) {
      it.diagnostics = "codec output differs from an earlier run with identical inputs (nondeterministic codec)";
    }
    const json rec{{"input_hash", it.input_hash},          {"profile_hash", phash},
                   {"quality", q},                         {"bitstream_hash", it.bitstream_hash},
                   {"decoded_hash", sha256_file(paths.decoded)}, {"bytes", it.bitstream_bytes},
                   {"wall_seconds", it.wall_seconds}};
    write_file_atomic(paths.record, rec.dump(1));
    return it;
  };

  auto worker = [&] {
    for (std::size_t k = next++; k < work.size(); k = next++) results[k] = process(work[k]);
  };
  const int n_workers = std::max(1, std::min<int>(opts.parallelism, static_cast<int>(work.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  }

  std::vector<CompressionRun> runs;
  std::size_t failures = 0;
  std::string first_failure;
  for (std::size_t q = 0; q < opts.qps.size(); ++q) {
    CompressionRun run;
    run.profile = profile.name;
    run.profile_hash = phash;
    run.quality_param = opts.qps[q];
    for (std::size_t i = 0; i < images.size(); ++i) {
      RunItem& it = results[q * images.size() + i];
      if (it.status == ItemStatus::failed) {
        ++failures;
        if (first_failure.empty()) first_failure = it.stem + " @ " + format_quality(opts.qps[q]) + ": " + it.diagnostics;
      }
      run.items.push_back(std::move(it));
    }
    runs.push_back(std::move(run));
  }
  if (stats) *stats = {executed.load(), hits.load(), failures};
  if (failures > 0 && opts.strict) {
    throw CodecError(std::to_string(failures) + " codec item(s) failed; first: " + first_failure);
  }
  return runs;
}

// Target-PSNR search -----------------------------------------------------------

namespace {

class Prober {
 public:
  Prober(const PsnrOracle& oracle, const QualityAxisRange& axis, const TargetSearchOptions& opts)
      : oracle_(oracle), axis_(axis), opts_(opts) {}

  double probe(double q) {
    for (const auto& h : history_) {
      if (h.quality == q) return h.psnr;
    }
    const double v = oracle_(q);
    history_.push_back({q, v});
    check_monotone();
    return v;
  }

  bool within(double psnr) const { return std::abs(psnr - opts_.target_db) <= opts_.tolerance_db; }
  int probes() const { return static_cast<int>(history_.size()); }
  bool budget_left() const { return probes() < opts_.max_iter; }

  TargetSearchResult finish(double q, double psnr, bool converged) const {
    return {q, psnr, probes(), converged, history_};
  }

  TargetSearchResult best() const {
    const auto it = std::min_element(history_.begin(), history_.end(), [&](const PsnrProbe& a, const PsnrProbe& b) {
      return std::abs(a.psnr - opts_.target_db) < std::abs(b.psnr - opts_.target_db);
    });
    return finish(it->quality, it->psnr, false);
  }

  std::string describe() const {
    std::ostringstream os;
    os << "probes:";
    for (const auto& h : history_) os << " (" << h.quality << " -> " << h.psnr << " dB)";
    return os.str();
  }

 private:
  void check_monotone() const {
    auto sorted = history_;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.quality < b.quality; });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
      const double d = sorted[i].psnr - sorted[i - 1].psnr;
      const bool bad = axis_.psnr_increases ? d < -1e-9 : d > 1e-9;
      if (bad) throw DataError("PSNR is not monotone in the quality parameter; " + describe());
    }
  }

  const PsnrOracle& oracle_;
  QualityAxisRange axis_;
  TargetSearchOptions opts_;
  std::vector<PsnrProbe> history_;
};

}  // namespace

TargetSearchResult search_quality_for_target_psnr(const PsnrOracle& oracle, const QualityAxisRange& axis,
                                                  const TargetSearchOptions& opts) {
  if (!(axis.hi > axis.lo)) throw DataError("quality axis range is empty");
  if (opts.max_iter < 1) throw DataError("max_iter must be positive");
  Prober pr(oracle, axis, opts);
  const double t = opts.target_db;
  auto mid = [&](double a, double b) {
    const double m = 0.5 * (a + b);
    return axis.integer ? std::floor(m) : m;
  };
  // Quality values that raise / lower PSNR.
  const double better_end = axis.psnr_increases ? axis.hi : axis.lo;
  const double worse_end = axis.psnr_increases ? axis.lo : axis.hi;

  const double q0 = mid(axis.lo, axis.hi);
  const double p0 = pr.probe(q0);
  if (pr.within(p0)) return pr.finish(q0, p0, true);
  if (!pr.budget_left()) return pr.best();

  // low: PSNR below target, high: PSNR above target.
  double low_q, high_q;
  if (p0 < t) {
    const double pe = pr.probe(better_end);
    if (pr.within(pe)) return pr.finish(better_end, pe, true);
    if (pe < t) throw DataError("target PSNR " + std::to_string(t) + " dB is above the axis range; " + pr.describe());
    low_q = q0;
    high_q = better_end;
  } else {
    const double pe = pr.probe(worse_end);
    if (pr.within(pe)) return pr.finish(worse_end, pe, true);
    if (pe > t) throw DataError("target PSNR " + std::to_string(t) + " dB is below the axis range; " + pr.describe());
    low_q = worse_end;
    high_q = q0;
  }
  while (pr.budget_left()) {
    const double lo = std::min(low_q, high_q), hi = std::max(low_q, high_q);
    const double m = mid(lo, hi);
    if (m <= lo || m >= hi) break;  // integer axis exhausted
    const double pm = pr.probe(m);
    if (pr.within(pm)) return pr.finish(m, pm, true);
    (pm < t ? low_q : high_q) = m;
  }
  return pr.best();
}

TargetSearchResult search_quality_for_target_psnr(const fs::path& image, const CodecProfile& profile,
                                                  const TargetSearchOptions& opts, const fs::path& work_dir,
                                                  PsnrPolicy policy) {
  validate_profile(profile);
  fs::create_directories(work_dir);
  const Image original = read_png(image);
  const std::string stem = image.stem().string();
  const PsnrOracle oracle = [&](double q) {
    const auto paths = paths_for(work_dir, stem + "_probe" + (profile.quality_axis == QualityAxis::qp_integer ? "_qp" : "_q") +
                                               format_quality(q), profile);
    const Bindings b = bindings_for(profile, q, original.width(), original.height());
    std::string diag = run_step("encode", profile.encode_template, b, image, paths.bitstream, paths.log);
    if (diag.empty()) diag = run_step("decode", profile.decode_template, b, paths.bitstream, paths.decoded, paths.log);
    if (!diag.empty()) throw CodecError(diag);
    return psnr(original, read_png(paths.decoded), policy);
  };
  QualityAxisRange axis{profile.quality_min, profile.quality_max, profile.quality_axis == QualityAxis::continuous_quality,
                        profile.quality_axis == QualityAxis::qp_integer};
  return search_quality_for_target_psnr(oracle, axis, opts);
}

}  // namespace vcmbench

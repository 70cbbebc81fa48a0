#include <algorithm>
#include <cstdio>
#include <sstream>

#include "vcmbench/codec_orchestrator.hpp"
#include "vcmbench/error.hpp"
#include "vcmbench/process.hpp"
#include "vcmbench/rd_pipeline.hpp"

namespace vcmbench {

namespace fs = std::filesystem;

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s = buf;
  if (s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string qp_list(const std::vector<double>& qps) {
  std::string s;
  for (std::size_t i = 0; i < qps.size(); ++i) {
    if (i) s += i + 1 == qps.size() ? " and " : ", ";
    s += format_quality(qps[i]);
  }
  return s;
}

const MethodComparison* find_row(const DetectorComparison& d, const std::string& method) {
  for (const auto& r : d.rows) {
    if (r.method == method) return &r;
  }
  return nullptr;
}

const BdResult& pick(const MethodComparison& row, QpSubset s) {
  return s == QpSubset::standard ? row.standard : row.low_bitrate;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string format_bd(double v) { return fixed(v, 2); }
std::string format_metric(double v) { return fixed(v, 4); }

ReportFormat report_format_from_string(std::string_view s) {
  if (s == "md" || s == "markdown") return ReportFormat::markdown;
  if (s == "csv") return ReportFormat::csv;
  if (s == "plotdata") return ReportFormat::plotdata;
  if (s == "json") return ReportFormat::json;
  throw DataError("unknown report format '" + std::string(s) + "'");
}

std::string render_bd_table(const ComparisonReport& r, QpSubset subset, bool rate) {
  const auto qps_span = subset_qps(subset);
  const std::vector<double> qps(qps_span.begin(), qps_span.end());
  std::ostringstream os;
  if (rate) {
    os << "BD rate in percent with " << r.anchor << " as anchor for QP " << qp_list(qps)
       << ". Negative values represent bitrate savings compared to the anchor.\n\n";
  } else {
    os << "BD weighted AP in percentage points of weighted AP with " << r.anchor << " as anchor for QP "
       << qp_list(qps) << ".\n\n";
  }
  os << "| Training method |";
  for (const auto& d : r.detectors) os << ' ' << d.detector << " |";
  os << "\n|:---|";
  for (std::size_t i = 0; i < r.detectors.size(); ++i) os << "---:|";
  os << '\n';
  for (const auto& m : r.methods) {
    os << "| " << m << " |";
    for (const auto& d : r.detectors) {
      const MethodComparison* row = find_row(d, m);
      std::optional<double> v;
      if (row) v = rate ? pick(*row, subset).bd_rate_pct : pick(*row, subset).bd_metric_pp;
      os << ' ' << (v ? format_bd(*v) : "n/a") << " |";
    }
    os << '\n';
  }
  return os.str();
}

std::string render_markdown(const ComparisonReport& r) {
  std::ostringstream os;
  os << "# Rate-accuracy comparison\n\n";
  os << "Anchor: " << r.anchor << ". Interpolation: " << to_string(r.interpolation)
     << ". Rate axis: mean bits per pixel.\n\n";
  os << "## BD weighted AP\n\n" << render_bd_table(r, QpSubset::standard, false) << '\n';
  os << "## BD rate\n\n" << render_bd_table(r, QpSubset::standard, true) << '\n';
  os << "## BD weighted AP, low bitrate\n\n" << render_bd_table(r, QpSubset::low_bitrate, false) << '\n';
  os << "## BD rate, low bitrate\n\n" << render_bd_table(r, QpSubset::low_bitrate, true) << '\n';

  os << "## Weighted AP over bitrate\n";
  for (const auto& d : r.detectors) {
    std::vector<double> qps;
    for (const auto& c : d.curves) {
      for (const auto& p : c.points) {
        if (std::find(qps.begin(), qps.end(), p.quality_param) == qps.end()) qps.push_back(p.quality_param);
      }
    }
    std::sort(qps.begin(), qps.end());
    os << "\n### " << d.detector << "\n\n| Method | uncompressed |";
    for (double q : qps) os << " QP " << format_quality(q) << " |";
    os << "\n|:---|---:|";
    for (std::size_t i = 0; i < qps.size(); ++i) os << "---:|";
    os << '\n';
    for (const auto& c : d.curves) {
      os << "| " << c.method << " | " << (c.baseline_uncompressed ? format_metric(*c.baseline_uncompressed) : "n/a")
         << " |";
      for (double q : qps) {
        const auto it = std::find_if(c.points.begin(), c.points.end(), [&](const RdPoint& p) { return p.quality_param == q; });
        os << ' ' << (it == c.points.end() ? "n/a" : format_metric(it->metric) + " @ " + fixed(it->bpp, 4) + " bpp")
           << " |";
      }
      os << '\n';
    }
  }

  std::vector<std::string> notes;
  for (const auto& d : r.detectors) {
    for (const auto& f : d.flags) notes.push_back(d.detector + ": " + f);
    for (const auto& row : d.rows) {
      for (const auto* res : {&row.standard, &row.low_bitrate}) {
        for (const auto& msg : res->diagnostics) {
          notes.push_back(d.detector + ", " + row.method + ", " + std::string(to_string(res->subset)) + ": " + msg);
        }
      }
    }
  }
  if (!notes.empty()) {
    os << "\n## Diagnostics\n\n";
    for (const auto& n : notes) os << "- " << n << '\n';
  }
  return os.str();
}

std::string render_csv(const ComparisonReport& r) {
  std::ostringstream os;
  os << "detector,method,anchor,subset,qps,bd_metric_pp,bd_rate_pct\n";
  for (const auto& d : r.detectors) {
    for (const auto& row : d.rows) {
      for (const auto* res : {&row.standard, &row.low_bitrate}) {
        std::string qps;
        for (double q : res->qps) qps += (qps.empty() ? "" : " ") + format_quality(q);
        os << csv_escape(d.detector) << ',' << csv_escape(row.method) << ',' << csv_escape(d.anchor) << ','
           << to_string(res->subset) << ',' << qps << ',' << (res->bd_metric_pp ? format_bd(*res->bd_metric_pp) : "")
           << ',' << (res->bd_rate_pct ? format_bd(*res->bd_rate_pct) : "") << '\n';
      }
    }
  }
  return os.str();
}

std::string render_plotdata(const ComparisonReport& r) {
  std::ostringstream os;
  os << "detector,method,qp,bpp,kbit_per_image,weighted_ap\n";
  for (const auto& d : r.detectors) {
    for (const auto& c : d.curves) {
      for (const auto& p : c.points) {
        os << csv_escape(d.detector) << ',' << csv_escape(c.method) << ',' << format_quality(p.quality_param) << ','
           << fixed(p.bpp, 6) << ',' << fixed(p.kbit_per_image, 3) << ',' << format_metric(p.metric) << '\n';
      }
      if (c.baseline_uncompressed) {
        os << csv_escape(d.detector) << ',' << csv_escape(c.method) << ",uncompressed,,,"
           << format_metric(*c.baseline_uncompressed) << '\n';
      }
    }
  }
  return os.str();
}

std::vector<fs::path> emit_report(const ComparisonReport& r, ReportFormat format, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create '" + out_dir.string() + "': " + ec.message());
  fs::path path;
  std::string body;
  switch (format) {
    case ReportFormat::markdown:
      path = out_dir / "report.md";
      body = render_markdown(r);
      break;
    case ReportFormat::csv:
      path = out_dir / "report.csv";
      body = render_csv(r);
      break;
    case ReportFormat::plotdata:
      path = out_dir / "plotdata.csv";
      body = render_plotdata(r);
      break;
    case ReportFormat::json:
      path = out_dir / "report.json";
      body = report_to_json(r).dump(1) + "\n";
      break;
  }
  write_file_atomic(path, body);
  return {path};
}

}  // namespace vcmbench

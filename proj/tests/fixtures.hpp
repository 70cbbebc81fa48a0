#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "vcmbench/bd.hpp"
#include "vcmbench/rd_pipeline.hpp"

namespace fixtures {

// A row of a published BD table: metric gain in pp and rate change in %.
struct BdTarget {
  std::string detector;
  double bd_metric_pp;
  double bd_rate_pct;
};

inline const std::vector<BdTarget>& fine_tuning_targets() {
  static const std::vector<BdTarget> t{{"faster_rcnn", 3.68, -47.98}, {"mask_rcnn", 3.57, -42.59}};
  return t;
}

// Anchor metric linear in log10(rate). A test curve that reaches the same
// metric at k times the rate has BD rate (k - 1) * 100 and BD metric
// -100 * slope * log10(k), so the slope is picked to hit both targets.
inline std::vector<vcmbench::EvaluationCell> published_bd_cells(const std::vector<BdTarget>& targets,
                                                        const std::string& test_method = "fine_tuning") {
  const std::vector<double> qps{22, 27, 32, 37, 42, 47};
  std::vector<vcmbench::EvaluationCell> cells;
  for (const auto& t : targets) {
    const double k = 1.0 + t.bd_rate_pct / 100.0;
    const double slope = (t.bd_metric_pp / 100.0) / -std::log10(k);
    for (const std::string method : {std::string("classic"), test_method}) {
      const double scale = method == "classic" ? 1.0 : k;
      vcmbench::EvaluationCell base;
      base.method = method;
      base.detector = t.detector;
      base.weighted_ap = method == "classic" ? 0.43 : 0.44;
      cells.push_back(base);
      for (std::size_t i = 0; i < qps.size(); ++i) {
        const double rate = 0.5 * std::pow(0.5, static_cast<double>(i));
        vcmbench::EvaluationCell c;
        c.method = method;
        c.detector = t.detector;
        c.qp = qps[i];
        c.weighted_ap = 0.40 + slope * std::log10(rate);
        c.bitrate = vcmbench::BitrateStats{rate * scale, rate * scale * 2048.0 * 1024.0 / 1000.0, 500};
        cells.push_back(c);
      }
    }
  }
  return cells;
}

}  // namespace fixtures

#include "hmdetect/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "hmdetect/errors.hpp"

namespace hmdetect {
namespace {

struct SweepStep {
  double threshold;
  std::uint64_t tp;  // cumulative, scores >= threshold
  std::uint64_t fp;
  std::uint64_t dtp;  // contributed by this tie group
  std::uint64_t dfp;
};

struct Sweep {
  std::uint64_t positives = 0;
  std::uint64_t negatives = 0;
  std::vector<SweepStep> steps;  // distinct thresholds, decreasing
};

// `flip` swaps the roles of the classes and reverses the ordering, which is
// the sweep for "clean is positive, low anomaly score ranks first".
Sweep sweep(const ScoreTable& t, bool flip = false) {
  Sweep s;
  for (const auto& e : t.entries) {
    if (!std::isfinite(e.score)) throw_validation("record '" + e.id + "': non-finite score");
    (e.is_adversarial != flip ? s.positives : s.negatives) += 1;
  }
  if (s.positives == 0 || s.negatives == 0) {
    throw_validation("score table needs both clean and adversarial entries");
  }
  std::vector<std::pair<double, bool>> keyed;
  keyed.reserve(t.entries.size());
  for (const auto& e : t.entries) {
    keyed.emplace_back(flip ? -e.score : e.score, e.is_adversarial != flip);
  }
  std::sort(keyed.begin(), keyed.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  std::uint64_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < keyed.size();) {
    const double value = keyed[i].first;
    std::uint64_t dtp = 0, dfp = 0;
    for (; i < keyed.size() && keyed[i].first == value; ++i) (keyed[i].second ? dtp : dfp) += 1;
    tp += dtp;
    fp += dfp;
    s.steps.push_back(SweepStep{flip ? -value : value, tp, fp, dtp, dfp});
  }
  return s;
}

double average_precision(const Sweep& s) {
  double acc = 0.0;
  for (const auto& step : s.steps) {
    if (step.dtp == 0) continue;
    acc += static_cast<double>(step.dtp) *
           (static_cast<double>(step.tp) / static_cast<double>(step.tp + step.fp));
  }
  return acc / static_cast<double>(s.positives);
}

void summarize(const std::vector<double>& xs, MetricSummary& out) {
  const double n = static_cast<double>(xs.size());
  out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.stddev = std::sqrt(ss / n);
}

nlohmann::json threshold_json(double t) {
  return std::isfinite(t) ? nlohmann::json(t) : nlohmann::json(nullptr);
}

}  // namespace

double auroc(const ScoreTable& t) {
  const Sweep s = sweep(t);
  // Twice the Mann-Whitney U: each clean entry scores 2 per adversarial
  // entry strictly above it and 1 per tie.
  std::uint64_t twice_u = 0;
  for (const auto& step : s.steps) {
    twice_u += step.dfp * (2 * (step.tp - step.dtp) + step.dtp);
  }
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(s.positives) *
                                         static_cast<double>(s.negatives));
}

double aupr(const ScoreTable& t, PrPositive positive) {
  return average_precision(sweep(t, positive == PrPositive::clean_out));
}

double fpr_at_tpr(const ScoreTable& t, double r) {
  if (!(r > 0.0 && r <= 1.0)) throw_validation("target TPR r must lie in (0, 1]");
  const Sweep s = sweep(t);
  const auto p = static_cast<double>(s.positives);
  for (const auto& step : s.steps) {
    if (static_cast<double>(step.tp) / p >= r) {
      return static_cast<double>(step.fp) / static_cast<double>(s.negatives);
    }
  }
  return 1.0;  // unreachable: the last step has TPR 1
}

double err(const ScoreTable& t) {
  const Sweep s = sweep(t);
  std::uint64_t best = s.positives;  // threshold +inf flags nothing
  for (const auto& step : s.steps) {
    best = std::min(best, (s.positives - step.tp) + step.fp);
  }
  return static_cast<double>(best) / static_cast<double>(s.positives + s.negatives);
}

std::vector<RocPoint> roc_curve(const ScoreTable& t) {
  const Sweep s = sweep(t);
  std::vector<RocPoint> out;
  out.reserve(s.steps.size() + 1);
  out.push_back(RocPoint{std::numeric_limits<double>::infinity(), 0.0, 0.0});
  for (const auto& step : s.steps) {
    out.push_back(RocPoint{step.threshold,
                           static_cast<double>(step.fp) / static_cast<double>(s.negatives),
                           static_cast<double>(step.tp) / static_cast<double>(s.positives)});
  }
  return out;
}

std::vector<PrPoint> pr_curve(const ScoreTable& t, PrPositive positive) {
  const Sweep s = sweep(t, positive == PrPositive::clean_out);
  std::vector<PrPoint> out;
  out.reserve(s.steps.size());
  for (const auto& step : s.steps) {
    out.push_back(PrPoint{step.threshold,
                          static_cast<double>(step.tp) / static_cast<double>(step.tp + step.fp),
                          static_cast<double>(step.tp) / static_cast<double>(s.positives)});
  }
  return out;
}

double roc_trapezoid_area(const std::vector<RocPoint>& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    area += (curve[i].fpr - curve[i - 1].fpr) * (curve[i].tpr + curve[i - 1].tpr) / 2.0;
  }
  return area;
}

DetectionReport full_report(const ScoreTable& t, double r) {
  DetectionReport rep;
  rep.r = r;
  rep.auroc = auroc(t);
  rep.fpr_at_r = fpr_at_tpr(t, r);
  rep.aupr_in = aupr(t, PrPositive::adversarial_in);
  rep.aupr_out = aupr(t, PrPositive::clean_out);
  rep.err = err(t);
  rep.roc_points = roc_curve(t);
  rep.pr_points = pr_curve(t);
  rep.metadata["n_adversarial"] = std::to_string(t.positives());
  rep.metadata["n_clean"] = std::to_string(t.negatives());
  return rep;
}

nlohmann::json to_json(const DetectionReport& report) {
  nlohmann::json j;
  j["auroc"] = report.auroc;
  j["fpr_at_r"] = report.fpr_at_r;
  j["r"] = report.r;
  j["aupr_in"] = report.aupr_in;
  j["aupr_out"] = report.aupr_out;
  j["err"] = report.err;
  auto& roc = j["roc_points"] = nlohmann::json::array();
  for (const auto& p : report.roc_points) {
    roc.push_back({{"threshold", threshold_json(p.threshold)}, {"fpr", p.fpr}, {"tpr", p.tpr}});
  }
  auto& pr = j["pr_points"] = nlohmann::json::array();
  for (const auto& p : report.pr_points) {
    pr.push_back({{"threshold", threshold_json(p.threshold)},
                  {"precision", p.precision},
                  {"recall", p.recall}});
  }
  j["metadata"] = report.metadata;
  return j;
}

DetectionReport report_from_json(const nlohmann::json& j) {
  DetectionReport rep;
  try {
    rep.auroc = j.at("auroc").get<double>();
    rep.fpr_at_r = j.at("fpr_at_r").get<double>();
    rep.r = j.at("r").get<double>();
    rep.aupr_in = j.at("aupr_in").get<double>();
    rep.aupr_out = j.at("aupr_out").get<double>();
    rep.err = j.at("err").get<double>();
    if (j.contains("metadata")) {
      rep.metadata = j["metadata"].get<std::map<std::string, std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw_format(std::string("malformed detection report: ") + e.what());
  }
  return rep;
}

std::string format_table_header() {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-24s %8s %8s %8s %8s %8s", "", "AUROC", "FPR", "AUPR-IN",
                "AUPR-OUT", "Err");
  return buf;
}

std::string format_table_row(const std::string& label, const DetectionReport& report) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-24s %8.1f %8.1f %8.1f %8.1f %8.1f", label.c_str(),
                100.0 * report.auroc, 100.0 * report.fpr_at_r, 100.0 * report.aupr_in,
                100.0 * report.aupr_out, 100.0 * report.err);
  return buf;
}

ReportSummary summarize_reports(const std::vector<DetectionReport>& reports) {
  if (reports.empty()) throw_validation("no reports to summarize");
  ReportSummary out;
  out.runs = reports.size();
  auto column = [&](double DetectionReport::*field) {
    std::vector<double> xs;
    for (const auto& r : reports) xs.push_back(r.*field);
    return xs;
  };
  summarize(column(&DetectionReport::auroc), out.auroc);
  summarize(column(&DetectionReport::fpr_at_r), out.fpr_at_r);
  summarize(column(&DetectionReport::aupr_in), out.aupr_in);
  summarize(column(&DetectionReport::aupr_out), out.aupr_out);
  summarize(column(&DetectionReport::err), out.err);
  return out;
}

}  // namespace hmdetect

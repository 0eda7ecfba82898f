#pragma once

// Threshold-free and threshold-based detection metrics over a ScoreTable.
//
// Adversarial entries are the positive class and an entry is flagged iff
// score >= threshold. Sweeping thresholds over the distinct scores in
// decreasing order yields cumulative counts TP(t), FP(t); tied scores enter
// the sweep together.
//
//   AUROC     P(adv > clean) + P(adv == clean) / 2, from integer pair counts
//   AUPR-IN   (1/P) sum_t [TP(t) - TP(t_prev)] * TP(t) / (TP(t) + FP(t))
//   AUPR-OUT  the same with clean as positive and the ordering reversed
//   FPR@r     FP(t*) / N for the largest t* with TP(t*) / P >= r
//   Err       min over t of (FN(t) + FP(t)) / (P + N), t = +inf included

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "hmdetect/score_table.hpp"

namespace hmdetect {

struct RocPoint {
  double threshold = 0.0;  // +inf for the (0, 0) starting point
  double fpr = 0.0;
  double tpr = 0.0;
};

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct DetectionReport {
  double auroc = 0.0;
  double fpr_at_r = 0.0;
  double aupr_in = 0.0;
  double aupr_out = 0.0;
  double err = 0.0;
  double r = 0.90;
  std::vector<RocPoint> roc_points;
  std::vector<PrPoint> pr_points;  // adversarial-positive curve
  std::map<std::string, std::string> metadata;
};

enum class PrPositive { adversarial_in, clean_out };

double auroc(const ScoreTable& t);
double aupr(const ScoreTable& t, PrPositive positive);
double fpr_at_tpr(const ScoreTable& t, double r);
double err(const ScoreTable& t);

std::vector<RocPoint> roc_curve(const ScoreTable& t);
std::vector<PrPoint> pr_curve(const ScoreTable& t, PrPositive positive = PrPositive::adversarial_in);

// Trapezoidal area under a ROC curve; equals auroc() up to rounding.
double roc_trapezoid_area(const std::vector<RocPoint>& curve);

DetectionReport full_report(const ScoreTable& t, double r = 0.90);

nlohmann::json to_json(const DetectionReport& report);

// One row in the column order AUROC, FPR, AUPR-IN, AUPR-OUT, Err, as
// percentages with one decimal.
std::string format_table_header();
std::string format_table_row(const std::string& label, const DetectionReport& report);

// Mean and population standard deviation of each metric across runs.
struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;
};

struct ReportSummary {
  std::size_t runs = 0;
  MetricSummary auroc, fpr_at_r, aupr_in, aupr_out, err;
};

ReportSummary summarize_reports(const std::vector<DetectionReport>& reports);
DetectionReport report_from_json(const nlohmann::json& j);

}  // namespace hmdetect

#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <unordered_map>

#include <CLI11.hpp>
#include <json.hpp>

#include "hmdetect/bench.hpp"
#include "hmdetect/depth_hm.hpp"
#include "hmdetect/detector.hpp"
#include "hmdetect/errors.hpp"
#include "hmdetect/ingest.hpp"
#include "hmdetect/metrics.hpp"
#include "hmdetect/scorers.hpp"
#include "hmdetect/transport.hpp"
#include "hmdetect/util.hpp"

namespace hmdetect::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kOutputDirEnv = "HMDETECT_OUTPUT_DIR";
constexpr const char* kToolVersion = "1.0.0";

struct Globals {
  int verbosity = 0;
  unsigned threads = 1;
  std::string output_dir;
};

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Content hash of a file, or of a directory as the hash of its sorted
// "name sha256" listing.
std::string content_hash(const fs::path& path) {
  if (!fs::is_directory(path)) return sha256_file(path);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::string listing;
  for (const auto& f : files) listing += f.filename().string() + " " + sha256_file(f) + "\n";
  return sha256_hex(listing);
}

// Per-run provenance record, written next to the primary output. The only
// place a timestamp appears.
class RunManifest {
 public:
  RunManifest(std::string command, const Globals& g) {
    doc_["command"] = std::move(command);
    doc_["tool_version"] = kToolVersion;
    doc_["threads"] = g.threads;
    doc_["parameters"] = json::object();
    doc_["inputs"] = json::object();
    doc_["outputs"] = json::object();
  }

  json& params() { return doc_["parameters"]; }
  void input(const fs::path& p) { doc_["inputs"][p.string()] = content_hash(p); }
  void output(const fs::path& p) { doc_["outputs"][p.string()] = content_hash(p); }

  void write(const fs::path& path) {
    doc_["created_utc"] = utc_timestamp();
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw_io("cannot write manifest " + path.string());
    out << doc_.dump(2) << '\n';
    if (!out) throw_io("cannot write manifest " + path.string());
  }

 private:
  json doc_;
};

fs::path manifest_path_for(const fs::path& output) {
  auto p = output;
  if (p.has_filename()) return p.string() + ".manifest.json";
  return p.parent_path().string() + ".manifest.json";
}

void write_text(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_io("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw_io("write failure on " + path.string());
}

void require_file(const fs::path& path, std::string_view what) {
  if (!fs::exists(path)) throw_io(std::string(what) + " not found: " + path.string());
}

// ------------------------------------------------------------------ split

struct SplitArgs {
  std::string input;
  std::size_t n1 = 0, n2 = 0;
  std::uint64_t seed = 0;
  std::string out_x1, out_x2;
};

int cmd_split(const SplitArgs& a, const Globals& g, std::ostream& out) {
  require_file(a.input, "input dataset");
  const auto ds = read_dataset(a.input);
  const auto split = scenario1_split(ds, SplitSpec{a.seed, a.n1, a.n2});
  write_dataset(split.x1, a.out_x1);
  write_dataset(split.x2, a.out_x2);

  RunManifest m("split", g);
  m.params() = {{"n1", a.n1}, {"n2", a.n2}, {"seed", a.seed}};
  m.input(a.input);
  m.output(a.out_x1);
  m.output(a.out_x2);
  m.write(manifest_path_for(a.out_x1));
  out << "x1: " << split.x1.records.size() << " records -> " << a.out_x1 << '\n'
      << "x2: " << split.x2.records.size() << " records -> " << a.out_x2 << '\n';
  return kExitOk;
}

// -------------------------------------------------------------------- fit

struct FitArgs {
  std::string scorer = "hm";
  std::string input;
  std::uint32_t k = 10000;
  std::uint32_t ns = 32;
  double lambda = 0.5;
  std::optional<double> ridge;
  std::uint64_t seed = 0;
  std::string model_out;
};

EmbeddingDataset training_subset(const EmbeddingDataset& ds) {
  EmbeddingDataset train{ds.d, ds.layer_tag, {}};
  for (const auto& r : ds.records) {
    if (r.tag == Tag::train) train.records.push_back(r);
  }
  if (train.records.empty()) throw_validation("input has no records tagged train");
  return train;
}

int cmd_fit(const FitArgs& a, const Globals& g, std::ostream& out) {
  require_file(a.input, "input dataset");
  const auto train = training_subset(read_dataset(a.input));

  RunManifest m("fit", g);
  m.params()["scorer"] = a.scorer;
  m.params()["seed"] = a.seed;
  m.params()["train_records"] = train.records.size();
  m.params()["layer_tag"] = train.layer_tag;

  if (a.scorer == "hm") {
    const HmHyperParams params{a.k, a.ns, a.lambda, a.seed};
    const auto model = fit_class_hm(train, params, HmFitOptions{g.threads, false});
    write_class_hm(model, a.model_out);
    m.params()["k"] = a.k;
    m.params()["ns"] = a.ns;
    m.params()["lambda"] = a.lambda;
    out << "fitted " << model.classes.size() << " class models (K=" << a.k << ", n_s=" << a.ns
        << ", lambda=" << format_double(a.lambda) << ") -> " << a.model_out << '\n';
  } else {
    const auto model = fit_mahalanobis(train, a.ridge);
    write_gaussian_model(model, a.model_out);
    if (a.ridge) {
      m.params()["ridge"] = *a.ridge;
    } else {
      m.params()["ridge"] = "relative:1e-6*trace/d";
    }
    json per_class = json::object();
    for (const auto& [label, cls] : model.classes) per_class[std::to_string(label)] = cls.ridge;
    m.params()["effective_ridge"] = per_class;
    out << "fitted " << model.classes.size() << " Gaussian class models -> " << a.model_out << '\n';
  }
  m.input(a.input);
  m.output(a.model_out);
  m.write(manifest_path_for(a.model_out));
  return kExitOk;
}

// ------------------------------------------------------------------ score

struct ScoreArgs {
  std::string scorer = "hm";
  std::string model;
  std::string input;
  std::string logprobs;
  std::string out;
};

ScoreTable score_lm_records(const ScoreArgs& a, RunManifest& m) {
  const auto records = read_logprobs(a.logprobs);
  m.input(a.logprobs);
  std::unordered_map<std::string, Tag> tags;
  if (!a.input.empty()) {
    const auto ds = read_dataset(a.input);
    m.input(a.input);
    for (const auto& r : ds.records) tags.emplace(r.id, r.tag);
  }
  ScoreTable table;
  bool warned = false;
  for (const auto& rec : records) {
    bool adversarial = false;
    if (!tags.empty()) {
      const auto it = tags.find(rec.id);
      if (it == tags.end()) throw_validation("log-prob record '" + rec.id + "' not in --input");
      if (it->second == Tag::train) continue;
      adversarial = it->second == Tag::adversarial;
    } else if (rec.tag) {
      adversarial = *rec.tag == Tag::adversarial;
    } else if (!warned) {
      log_warn("log-prob records carry no tag and no --input was given; flagging all as clean");
      warned = true;
    }
    table.entries.push_back(ScoreEntry{rec.id, score_lm(rec), adversarial});
  }
  return table;
}

int cmd_score(const ScoreArgs& a, const Globals& g, std::ostream& out) {
  RunManifest m("score", g);
  m.params()["scorer"] = a.scorer;
  ScoreTable table;
  if (a.scorer == "lm") {
    if (a.logprobs.empty()) throw_validation("--scorer lm requires --logprobs");
    require_file(a.logprobs, "log-prob file");
    table = score_lm_records(a, m);
  } else {
    if (a.model.empty() || a.input.empty()) {
      throw_validation("--scorer " + a.scorer + " requires --model and --input");
    }
    require_file(a.model, "model");
    require_file(a.input, "input dataset");
    const auto ds = read_dataset(a.input);
    if (a.scorer == "hm") {
      table = score_dataset(read_class_hm(a.model), ds, g.threads);
    } else {
      table = score_dataset(read_gaussian_model(a.model), ds);
    }
    m.input(a.model);
    m.input(a.input);
  }
  write_score_table(table, a.out);
  m.output(a.out);
  m.write(manifest_path_for(a.out));
  out << "scored " << table.entries.size() << " records (" << table.positives()
      << " adversarial) -> " << a.out << '\n';
  return kExitOk;
}

// ------------------------------------------------------------------- eval

struct EvalArgs {
  std::string scores;
  double r = 0.90;
  std::string out;
  std::string name;
  std::string curves_prefix;
};

int cmd_eval(const EvalArgs& a, const Globals& g, std::ostream& out) {
  require_file(a.scores, "score table");
  const auto table = read_score_table(a.scores);
  auto report = full_report(table, a.r);
  report.metadata["scorer"] = a.name.empty() ? fs::path(a.scores).stem().string() : a.name;
  report.metadata["scores_sha256"] = sha256_file(a.scores);

  RunManifest m("eval", g);
  m.params() = {{"r", a.r}, {"name", report.metadata["scorer"]}};
  m.input(a.scores);
  if (!a.out.empty()) {
    write_text(a.out, to_json(report).dump(2) + "\n");
    m.output(a.out);
  }
  if (!a.curves_prefix.empty()) {
    std::string roc = "threshold,fpr,tpr\n";
    for (const auto& p : report.roc_points) {
      roc += format_double(p.threshold) + ',' + format_double(p.fpr) + ',' + format_double(p.tpr) + '\n';
    }
    std::string pr = "threshold,precision,recall\n";
    for (const auto& p : report.pr_points) {
      pr += format_double(p.threshold) + ',' + format_double(p.precision) + ',' +
            format_double(p.recall) + '\n';
    }
    write_text(a.curves_prefix + "_roc.csv", roc);
    write_text(a.curves_prefix + "_pr.csv", pr);
    m.output(a.curves_prefix + "_roc.csv");
    m.output(a.curves_prefix + "_pr.csv");
  }
  if (!a.out.empty()) m.write(manifest_path_for(a.out));
  out << format_table_header() << '\n' << format_table_row(report.metadata["scorer"], report) << '\n';
  return kExitOk;
}

// ----------------------------------------------------------------- decide

struct DecideArgs {
  std::string scores;
  std::optional<double> gamma;
  std::optional<double> quantile;
  std::string out;
};

int cmd_decide(const DecideArgs& a, const Globals& g, std::ostream& out) {
  if (a.gamma.has_value() == a.quantile.has_value()) {
    throw_validation("give exactly one of --gamma or --calibrate-q");
  }
  require_file(a.scores, "score table");
  const auto table = read_score_table(a.scores);
  Threshold threshold;
  if (a.gamma) {
    threshold.gamma = *a.gamma;
  } else {
    std::vector<double> clean;
    for (const auto& e : table.entries) {
      if (!e.is_adversarial) clean.push_back(e.score);
    }
    threshold = calibrate_gamma(clean, *a.quantile);
  }
  const auto decisions = decide(table, threshold);
  write_text(a.out, encode_decisions_csv(decisions));

  RunManifest m("decide", g);
  m.params()["gamma"] = threshold.gamma;
  if (threshold.clean_quantile) m.params()["clean_quantile"] = *threshold.clean_quantile;
  m.input(a.scores);
  m.output(a.out);
  m.write(manifest_path_for(a.out));
  const auto flagged = std::count_if(decisions.begin(), decisions.end(),
                                     [](const Decision& d) { return d.flagged; });
  out << "gamma=" << format_double(threshold.gamma) << " flagged " << flagged << " of "
      << decisions.size() << " -> " << a.out << '\n';
  return kExitOk;
}

// ----------------------------------------------------------------- layers

struct LayersArgs {
  std::string manifest;
  std::string out;
};

PointCloud cloud_from(const EmbeddingDataset& ds, std::optional<Tag> only) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    if (!only || ds.records[i].tag == *only) rows.push_back(i);
  }
  return PointCloud{to_points(ds, rows)};
}

int cmd_layers(const LayersArgs& a, const Globals& g, std::ostream& out) {
  require_file(a.manifest, "layer manifest");
  const auto base = fs::path(a.manifest).parent_path();
  std::ifstream in(a.manifest);
  const json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.contains("layers") || !doc["layers"].is_array()) {
    throw_format("layer manifest must be a JSON object with a \"layers\" array");
  }

  RunManifest m("layers", g);
  m.input(a.manifest);
  std::vector<LayerClouds> layers;
  auto resolve = [&](const json& entry, const char* key) {
    const fs::path p = entry.at(key).get<std::string>();
    const fs::path full = p.is_absolute() ? p : base / p;
    require_file(full, "layer dataset");
    m.input(full);
    return read_dataset(full);
  };
  for (const auto& entry : doc["layers"]) {
    if (!entry.contains("tag")) throw_format("layer entry without \"tag\"");
    LayerClouds layer;
    layer.layer_tag = entry["tag"].get<std::string>();
    if (entry.contains("dataset")) {
      const auto ds = resolve(entry, "dataset");
      layer.clean = cloud_from(ds, Tag::clean);
      layer.adversarial = cloud_from(ds, Tag::adversarial);
    } else if (entry.contains("clean") && entry.contains("adversarial")) {
      layer.clean = cloud_from(resolve(entry, "clean"), std::nullopt);
      layer.adversarial = cloud_from(resolve(entry, "adversarial"), std::nullopt);
    } else {
      throw_format("layer '" + layer.layer_tag +
                   "' needs either \"dataset\" or both \"clean\" and \"adversarial\"");
    }
    layers.push_back(std::move(layer));
  }

  const auto distances = layer_discrimination(layers, g.threads);
  std::string csv = "layer_tag,w1\n";
  for (const auto& d : distances) csv += d.layer_tag + ',' + format_double(d.w1) + '\n';
  write_text(a.out, csv);
  m.output(a.out);
  m.write(manifest_path_for(a.out));
  out << csv;
  return kExitOk;
}

// ------------------------------------------------------------------ bench

struct BenchArgs {
  std::string grid = "desk";
  std::string out;
  std::optional<std::uint32_t> repeats;
  std::uint64_t seed = 0;
};

int cmd_bench(const BenchArgs& a, const Globals& g, std::ostream& out) {
  BenchGrid grid = a.grid == "paper" ? paper_grid() : desk_grid();
  if (a.repeats) grid.repeats = *a.repeats;
  grid.seed = a.seed;
  grid.threads = g.threads;
  validate(grid);

  const fs::path dir = a.out;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw_io("cannot create output directory " + dir.string() + ": " + ec.message());
  // Probe writability before spending minutes on the grid.
  write_text(dir / "timings.csv", "");

  const auto result = run_bench(grid);
  const auto summary = summarize(result.records);
  write_text(dir / "timings.csv", encode_timings_csv(result.records));
  write_text(dir / "summary.csv", encode_summary_csv(summary));

  const auto scaling = check_scaling(result.records);
  RunManifest m("bench", g);
  m.params() = {{"grid", a.grid},
                {"repeats", grid.repeats},
                {"seed", grid.seed},
                {"dims", grid.dims},
                {"sizes", grid.sizes},
                {"k_values", grid.k_values},
                {"n_s", grid.n_s},
                {"lambda", grid.lambda}};
  m.params()["skipped"] = result.skipped;
  m.output(dir / "timings.csv");
  m.output(dir / "summary.csv");
  m.write(dir / "bench.manifest.json");

  auto show = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("n/a"); };
  out << "records: " << result.records.size() << ", skipped cells: " << result.skipped.size() << '\n'
      << "hm score time ratio across n: " << show(scaling.score_ratio)
      << (scaling.score_ok ? " (ok)" : " (FAIL)") << '\n'
      << "hm fit time ratio K=1000/K=100: " << show(scaling.fit_ratio)
      << (scaling.fit_ok ? " (ok)" : " (FAIL)") << '\n';
  return kExitOk;
}

// -------------------------------------------------------------- summarize

int cmd_summarize(const std::vector<std::string>& paths, std::ostream& out) {
  std::vector<DetectionReport> reports;
  for (const auto& p : paths) {
    require_file(p, "report");
    std::ifstream in(p);
    const json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw_format("report " + p + " is not valid JSON");
    reports.push_back(report_from_json(doc));
  }
  const auto s = summarize_reports(reports);
  char buf[200];
  out << format_table_header() << '\n';
  std::snprintf(buf, sizeof buf, "%-24s %8.1f %8.1f %8.1f %8.1f %8.1f", "mean", 100 * s.auroc.mean,
                100 * s.fpr_at_r.mean, 100 * s.aupr_in.mean, 100 * s.aupr_out.mean, 100 * s.err.mean);
  out << buf << '\n';
  std::snprintf(buf, sizeof buf, "%-24s %8.1f %8.1f %8.1f %8.1f %8.1f", "stddev",
                100 * s.auroc.stddev, 100 * s.fpr_at_r.stddev, 100 * s.aupr_in.stddev,
                100 * s.aupr_out.stddev, 100 * s.err.stddev);
  out << buf << '\n';
  return kExitOk;
}

fs::path resolve_output(const Globals& g, const std::string& p) {
  if (p.empty() || g.output_dir.empty()) return p;
  const fs::path path = p;
  return path.is_absolute() ? path : fs::path(g.output_dir) / path;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Halfspace-mass depth detector for embedding anomalies", "hmdetect"};
  app.require_subcommand(1);

  Globals g;
  if (const char* env = std::getenv(kOutputDirEnv)) g.output_dir = env;
  app.add_flag("-v,--verbose", g.verbosity, "Increase diagnostic verbosity");
  app.add_option("--threads", g.threads, "Worker threads for fitting and scoring")
      ->check(CLI::Range(1u, 1024u));
  app.add_option("--output-dir", g.output_dir,
                 std::string("Base directory for relative output paths (default $") + kOutputDirEnv + ")");

  SplitArgs split;
  auto* s = app.add_subcommand("split", "Draw disjoint attack-source and clean subsets");
  s->add_option("--input", split.input, "Test-set dataset")->required();
  s->add_option("--n1", split.n1, "Size of the attack-source subset")->required();
  s->add_option("--n2", split.n2, "Size of the clean-evaluation subset")->required();
  s->add_option("--seed", split.seed, "Sampling seed");
  s->add_option("--out-x1", split.out_x1, "Output path for the attack-source subset")->required();
  s->add_option("--out-x2", split.out_x2, "Output path for the clean subset")->required();

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Fit a class-conditioned scorer on train-tagged records");
  f->add_option("--scorer", fit.scorer)->check(CLI::IsMember({"hm", "mahalanobis"}));
  f->add_option("--input", fit.input, "Training dataset")->required();
  f->add_option("--k", fit.k, "Number of random directions")->capture_default_str();
  f->add_option("--ns", fit.ns, "Sub-sample size per direction")->capture_default_str();
  f->add_option("--lambda", fit.lambda, "Threshold spread in (0, 2]")->capture_default_str();
  f->add_option("--ridge", fit.ridge, "Absolute ridge (default 1e-6 * trace / d per class)");
  f->add_option("--seed", fit.seed, "Fitting seed");
  f->add_option("--model-out", fit.model_out, "Model directory (hm) or LGM1 file")->required();

  ScoreArgs score;
  auto* sc = app.add_subcommand("score", "Score clean/adversarial records (higher = more anomalous)");
  sc->add_option("--scorer", score.scorer)->check(CLI::IsMember({"hm", "mahalanobis", "lm"}));
  sc->add_option("--model", score.model, "Fitted model");
  sc->add_option("--input", score.input, "Dataset to score");
  sc->add_option("--logprobs", score.logprobs, "Token log-prob JSONL (lm scorer)");
  sc->add_option("--out", score.out, "Score table CSV")->required();

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Detection metrics for a score table");
  e->add_option("--scores", eval.scores, "Score table CSV")->required();
  e->add_option("--r", eval.r, "Target TPR for FPR@r")->capture_default_str();
  e->add_option("--out", eval.out, "JSON report path");
  e->add_option("--name", eval.name, "Row label and report scorer name");
  e->add_option("--curves", eval.curves_prefix, "Write <prefix>_roc.csv and <prefix>_pr.csv");

  DecideArgs dec;
  auto* d = app.add_subcommand("decide", "Threshold a score table into decisions");
  d->add_option("--scores", dec.scores, "Score table CSV")->required();
  d->add_option("--gamma", dec.gamma, "Manual threshold");
  d->add_option("--calibrate-q", dec.quantile, "Calibrate gamma as this quantile of clean scores");
  d->add_option("--out", dec.out, "Decisions CSV")->required();

  LayersArgs layers;
  auto* l = app.add_subcommand("layers", "Per-layer Wasserstein-1 between clean and adversarial");
  l->add_option("--manifest", layers.manifest, "Layer manifest JSON")->required();
  l->add_option("--out", layers.out, "Output CSV")->required();

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Timing study of HM vs Mahalanobis depth");
  b->add_option("--grid", bench.grid)->check(CLI::IsMember({"desk", "paper"}))->capture_default_str();
  b->add_option("--out", bench.out, "Output directory")->required();
  b->add_option("--repeats", bench.repeats, "Override repeats per cell");
  b->add_option("--seed", bench.seed, "Data seed");

  std::vector<std::string> report_paths;
  auto* sm = app.add_subcommand("summarize", "Mean and stddev of metrics across JSON reports");
  sm->add_option("reports", report_paths, "Report files")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  set_verbosity(g.verbosity);
  try {
    if (*s) {
      split.out_x1 = resolve_output(g, split.out_x1).string();
      split.out_x2 = resolve_output(g, split.out_x2).string();
      return cmd_split(split, g, out);
    }
    if (*f) {
      fit.model_out = resolve_output(g, fit.model_out).string();
      return cmd_fit(fit, g, out);
    }
    if (*sc) {
      score.out = resolve_output(g, score.out).string();
      return cmd_score(score, g, out);
    }
    if (*e) {
      eval.out = resolve_output(g, eval.out).string();
      if (!eval.curves_prefix.empty()) eval.curves_prefix = resolve_output(g, eval.curves_prefix).string();
      return cmd_eval(eval, g, out);
    }
    if (*d) {
      dec.out = resolve_output(g, dec.out).string();
      return cmd_decide(dec, g, out);
    }
    if (*l) {
      layers.out = resolve_output(g, layers.out).string();
      return cmd_layers(layers, g, out);
    }
    if (*b) {
      bench.out = resolve_output(g, bench.out).string();
      return cmd_bench(bench, g, out);
    }
    if (*sm) return cmd_summarize(report_paths, out);
  } catch (const Error& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const nlohmann::json::exception& ex) {
    err << "error: malformed JSON input: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& ex) {
    err << "internal error: " << ex.what() << '\n';
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace hmdetect::cli

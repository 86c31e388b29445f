// ptme: score pAE logit tensors, emit gradient reports, run toy binder
// designs, screen candidate tables, and apply confidence filters.

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ptme/chain_map.hpp"
#include "ptme/design.hpp"
#include "ptme/errors.hpp"
#include "ptme/gradients.hpp"
#include "ptme/metrics.hpp"
#include "ptme/npy.hpp"
#include "ptme/report_io.hpp"
#include "ptme/screening.hpp"
#include "ptme/toy_predictor.hpp"

namespace {

using namespace ptme;
namespace fs = std::filesystem;
using nlohmann::json;

// Bin-grid resolution order: --bins flag, then PTME_BINS, then the tensor's
// own bin count on the default half-Angstrom grid.
std::vector<double> resolve_bins(const std::string& flag_path, std::size_t tensor_bins) {
  std::string path = flag_path;
  if (path.empty()) {
    if (const char* env = std::getenv("PTME_BINS")) path = env;
  }
  if (path.empty()) return default_bin_centers(tensor_bins);
  std::vector<double> centers = vector_from_npy(read_npy(path));
  if (centers.size() != tensor_bins)
    fail(ErrorKind::BinCountMismatch,
         "bin grid " + path + " has " + std::to_string(centers.size()) +
             " centers, tensor has " + std::to_string(tensor_bins) + " bins");
  return centers;
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty())
    std::cout << content;
  else
    atomic_write(out_path, content);
}

// ---------------------------------------------------------------- score

struct ScoreArgs {
  std::string logits, chains, bins, plddt, metric = "all", out;
  bool as_json = false;
};

int cmd_score(const ScoreArgs& a) {
  PaeLogits logits = pae_from_npy(read_npy(a.logits));
  ChainMap chains = read_chain_map(a.chains, logits.L());
  std::vector<double> centers = resolve_bins(a.bins, logits.B());
  TmKernel kernel = build_kernel(logits.L(), centers);

  std::optional<std::vector<double>> plddt;
  if (!a.plddt.empty()) plddt = vector_from_npy(read_npy(a.plddt));
  std::optional<std::span<const double>> plddt_span;
  if (plddt) plddt_span = std::span<const double>(*plddt);

  MetricsReport report = compute_metrics(logits, chains, kernel, plddt_span);

  std::string body;
  if (a.metric == "all") {
    if (a.as_json) {
      body = metrics_to_json(report).dump(2) + "\n";
    } else {
      body += "ptm " + fmt_double(report.ptm) + "\n";
      body += "iptm " + fmt_double(report.iptm) + "\n";
      body += "iptm_mean " + fmt_double(report.iptm_mean) + "\n";
      body += "ptm_energy " + fmt_double(report.ptm_energy) + "\n";
      body += "interface_pae_raw " + fmt_double(report.interface_pae_raw) + "\n";
      body += "interface_pae_norm " + fmt_double(report.interface_pae_norm) + "\n";
      if (report.plddt_mean) body += "plddt_mean " + fmt_double(*report.plddt_mean) + "\n";
    }
  } else if (a.metric == "ipae") {
    if (a.as_json) {
      body = json{{"interface_pae_raw", report.interface_pae_raw},
                  {"interface_pae_norm", report.interface_pae_norm}}
                 .dump(2) +
             "\n";
    } else {
      body += "interface_pae_raw " + fmt_double(report.interface_pae_raw) + "\n";
      body += "interface_pae_norm " + fmt_double(report.interface_pae_norm) + "\n";
    }
  } else {
    double value = 0.0;
    if (a.metric == "ptm")
      value = report.ptm;
    else if (a.metric == "iptm")
      value = report.iptm;
    else if (a.metric == "iptm-mean")
      value = report.iptm_mean;
    else if (a.metric == "ptm-energy")
      value = report.ptm_energy;
    else
      fail(ErrorKind::InvalidArgument, "unknown metric " + a.metric);
    body = a.as_json ? json{{a.metric, value}}.dump() + "\n" : fmt_double(value) + "\n";
  }
  emit(a.out, body);
  return 0;
}

// ---------------------------------------------------------------- grad-report

struct GradArgs {
  std::string logits, chains, bins, objective = "ptm-energy", out = ".";
  std::size_t k = 10;
  bool check_fd = false;
};

int cmd_grad_report(const GradArgs& a) {
  PaeLogits logits = pae_from_npy(read_npy(a.logits));
  ChainMap chains = read_chain_map(a.chains, logits.L());
  std::vector<double> centers = resolve_bins(a.bins, logits.B());
  TmKernel kernel = build_kernel(logits.L(), centers);

  GradTensor grad(0, 0, 0);
  json extra;
  Metric metric;
  if (a.objective == "ptm-energy") {
    metric = Metric::PtmEnergy;
    grad = grad_ptm_energy(logits, chains, kernel);
  } else if (a.objective == "iptm") {
    metric = Metric::Iptm;
    IptmGradient g = grad_iptm(logits, chains, kernel);
    extra["argmax_row"] = g.argmax_row;
    extra["support_pairs"] = g.support_pairs;
    extra["tie_broken"] = g.tie_broken;
    extra["iptm"] = g.value;
    grad = std::move(g.grad);
  } else {
    fail(ErrorKind::InvalidArgument, "objective must be ptm-energy or iptm");
  }

  std::vector<GradTensor> steps{grad};
  GradientReport report = sparsity_report(steps, chains, a.k);

  json summary = gradient_report_to_json(report);
  summary["objective"] = a.objective;
  for (auto& [key, value] : extra.items()) summary[key] = value;

  double fd_error = -1.0;
  if (a.check_fd) {
    GradTensor reference = finite_difference(metric, logits, chains, kernel);
    fd_error = max_relative_error(grad, reference);
    summary["fd_max_relative_error"] = fd_error;
  }

  fs::path dir(a.out);
  atomic_write(dir / "summary.json", summary.dump(2) + "\n");
  atomic_write(dir / "heatmap.csv", per_pair_heatmap_csv(report));

  if (a.check_fd) {
    std::cout << "fd_max_relative_error " << fmt_double(fd_error) << "\n";
    if (fd_error > 1e-5)
      fail(ErrorKind::Internal,
           "analytic gradient disagrees with finite differences: " + fmt_double(fd_error));
  }
  return 0;
}

// ---------------------------------------------------------------- design

struct DesignArgs {
  std::string config, out, objective;
  std::size_t batch = 1;
  std::size_t jobs = 1;
};

struct DesignSetup {
  DesignConfig config;
  std::size_t target_length = 16;
  std::size_t feature_dim = 8;
  std::uint64_t target_seed = 1000003;
  std::size_t bins = 16;
};

void expect_keys(const json& j, std::initializer_list<const char*> allowed,
                 const std::string& where) {
  for (auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const char* name : allowed)
      if (key == name) ok = true;
    if (!ok) fail(ErrorKind::BadDocument, where + ": unknown key \"" + key + "\"");
  }
}

DesignSetup read_design_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoFailure, "cannot open " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    fail(ErrorKind::BadDocument, path.string() + ": not a JSON object");

  expect_keys(j,
              {"binder_length", "objective", "learning_rate", "stage_steps",
               "greedy_proposals", "temp_init", "temp_final", "plddt_terminate_below",
               "contact_cutoff", "contact_sharpness", "seed", "weights", "target", "bins"},
              path.string());

  DesignSetup setup;
  DesignConfig& c = setup.config;
  try {
    if (j.contains("binder_length")) c.binder_length = j["binder_length"].get<std::size_t>();
    if (j.contains("objective")) c.objective = parse_objective(j["objective"].get<std::string>());
    if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("stage_steps")) {
      auto v = j["stage_steps"].get<std::vector<std::size_t>>();
      if (v.size() != 3)
        fail(ErrorKind::BadDocument, "stage_steps must have exactly 3 entries");
      c.stage_steps = {v[0], v[1], v[2]};
    }
    if (j.contains("greedy_proposals")) c.greedy_proposals = j["greedy_proposals"].get<std::size_t>();
    if (j.contains("temp_init")) c.temp_init = j["temp_init"].get<double>();
    if (j.contains("temp_final")) c.temp_final = j["temp_final"].get<double>();
    if (j.contains("plddt_terminate_below"))
      c.plddt_terminate_below = j["plddt_terminate_below"].get<double>();
    if (j.contains("contact_cutoff")) c.contact_cutoff = j["contact_cutoff"].get<double>();
    if (j.contains("contact_sharpness")) c.contact_sharpness = j["contact_sharpness"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("weights")) {
      const json& w = j["weights"];
      expect_keys(w, {"energy", "plddt", "ipae", "intra_pae", "con_inter", "con_intra", "rad_gyr"},
                  path.string() + ": weights");
      if (w.contains("energy")) c.weights.energy = w["energy"].get<double>();
      if (w.contains("plddt")) c.weights.plddt = w["plddt"].get<double>();
      if (w.contains("ipae")) c.weights.ipae = w["ipae"].get<double>();
      if (w.contains("intra_pae")) c.weights.intra_pae = w["intra_pae"].get<double>();
      if (w.contains("con_inter")) c.weights.con_inter = w["con_inter"].get<double>();
      if (w.contains("con_intra")) c.weights.con_intra = w["con_intra"].get<double>();
      if (w.contains("rad_gyr")) c.weights.rad_gyr = w["rad_gyr"].get<double>();
    }
    if (j.contains("target")) {
      const json& t = j["target"];
      expect_keys(t, {"length", "feature_dim", "seed"}, path.string() + ": target");
      if (t.contains("length")) setup.target_length = t["length"].get<std::size_t>();
      if (t.contains("feature_dim")) setup.feature_dim = t["feature_dim"].get<std::size_t>();
      if (t.contains("seed")) setup.target_seed = t["seed"].get<std::uint64_t>();
    }
    if (j.contains("bins")) setup.bins = j["bins"].get<std::size_t>();
  } catch (const json::exception& e) {
    fail(ErrorKind::BadDocument, path.string() + ": " + e.what());
  }
  return setup;
}

int cmd_design(const DesignArgs& a) {
  DesignSetup setup = read_design_config(a.config);
  if (!a.objective.empty()) setup.config.objective = parse_objective(a.objective);
  if (a.batch < 1) fail(ErrorKind::InvalidArgument, "--batch must be >= 1");
  if (a.jobs < 1) fail(ErrorKind::InvalidArgument, "--jobs must be >= 1");
  setup.config.validate();

  ToyPredictor predictor(
      ToyPredictor::seeded_target_features(setup.target_length, setup.feature_dim,
                                           setup.target_seed),
      setup.bins, setup.target_seed);

  std::vector<TrajectoryRecord> records(a.batch);
  std::vector<std::string> failures(a.batch);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= a.batch) return;
      DesignConfig config = setup.config;
      config.seed = setup.config.seed + i;
      try {
        records[i] = run_trajectory(predictor, config);
      } catch (const Error& e) {
        failures[i] = e.what();
      }
    }
  };
  const std::size_t jobs = std::min(a.jobs, a.batch);
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const std::string& message : failures)
    if (!message.empty()) fail(ErrorKind::Internal, "trajectory failed: " + message);

  fs::path dir(a.out);
  std::string fasta;
  double loss_sum = 0.0;
  std::size_t loss_count = 0;
  double clash_sum = 0.0;
  std::size_t clash_count = 0;
  std::size_t terminated = 0;
  for (const TrajectoryRecord& record : records) {
    const std::string tag = std::to_string(record.seed);
    atomic_write(dir / ("trace_" + tag + ".csv"), trajectory_trace_csv(record));
    atomic_write(dir / ("summary_" + tag + ".json"),
                 trajectory_summary_json(record).dump(2) + "\n");
    fasta += fasta_entry(record);
    if (record.terminated_early) ++terminated;
    if (record.final_loss) {
      loss_sum += *record.final_loss;
      ++loss_count;
    }
    if (record.final_clashes) {
      clash_sum += static_cast<double>(*record.final_clashes);
      ++clash_count;
    }
  }
  atomic_write(dir / "designs.fasta", fasta);
  json batch{{"objective", objective_name(setup.config.objective)},
             {"base_seed", setup.config.seed},
             {"trajectories", a.batch},
             {"terminated_early", terminated},
             {"mean_final_loss",
              loss_count ? json(loss_sum / static_cast<double>(loss_count)) : json(nullptr)},
             {"mean_final_clashes",
              clash_count ? json(clash_sum / static_cast<double>(clash_count)) : json(nullptr)}};
  atomic_write(dir / "batch_summary.json", batch.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------- screen

struct ScreenArgs {
  std::string table, metric = "ptm-energy", chains, bins, out = ".", ks = "5,10";
};

std::vector<std::size_t> parse_ks(const std::string& spec) {
  std::vector<std::size_t> ks;
  std::string token;
  std::istringstream in(spec);
  while (std::getline(in, token, ',')) {
    if (token.empty()) continue;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(token.c_str(), &end, 10);
    if (end == token.c_str() || *end != '\0' || v == 0)
      fail(ErrorKind::InvalidArgument, "bad --k entry \"" + token + "\"");
    ks.push_back(static_cast<std::size_t>(v));
  }
  return ks;
}

int cmd_screen(const ScreenArgs& a) {
  ScreeningTable table = read_screening_csv(a.table);
  ScreeningMetric metric = parse_screening_metric(a.metric);

  // Shared bin grid: flag/env wins; otherwise adopt the first tensor-backed
  // row's bin count on the default grid (precomputed-only tables skip it).
  std::vector<double> centers;
  {
    std::string path = a.bins;
    if (path.empty())
      if (const char* env = std::getenv("PTME_BINS")) path = env;
    if (!path.empty()) {
      centers = vector_from_npy(read_npy(path));
    } else {
      for (const ScreeningRow& row : table.rows) {
        if (row.logits_path.empty()) continue;
        centers = default_bin_centers(pae_from_npy(read_npy(row.logits_path)).B());
        break;
      }
    }
  }

  const fs::path shared_chains(a.chains);
  ChainResolver resolver = [&](const ScreeningRow& row, std::size_t length) {
    if (!shared_chains.empty()) return read_chain_map(shared_chains, length);
    fs::path p(row.logits_path);
    p.replace_extension(".chains.json");
    return read_chain_map(p, length);
  };

  auto scored = score_candidates(table, metric, resolver, centers);
  ScreeningReport report = screening_report(scored, parse_ks(a.ks));

  fs::path dir(a.out);
  json summary = screening_report_to_json(report);
  summary["metric"] = screening_metric_name(metric);
  atomic_write(dir / "report.json", summary.dump(2) + "\n");
  atomic_write(dir / "ranking.csv", ranking_csv(report));
  atomic_write(dir / "histogram.csv", histogram_csv(report));
  return 0;
}

// ---------------------------------------------------------------- filter

struct FilterArgs {
  std::string metrics = "-";
  bool as_json = false;
  bool override_thresholds = false;
  double plddt_min = 0.8, iptm_min = 0.5, ptm_min = 0.45, ipae_max = 0.4;
};

int cmd_filter(const FilterArgs& a) {
  json j;
  if (a.metrics == "-") {
    j = json::parse(std::cin, nullptr, false);
  } else {
    std::ifstream in(a.metrics, std::ios::binary);
    if (!in) fail(ErrorKind::IoFailure, "cannot open " + a.metrics);
    j = json::parse(in, nullptr, false);
  }
  if (j.is_discarded() || !j.is_object())
    fail(ErrorKind::BadDocument, "metrics input is not a JSON object");

  FilterInputs inputs;
  auto take = [&](const char* key, std::optional<double>& slot) {
    if (j.contains(key) && !j[key].is_null()) {
      if (!j[key].is_number()) fail(ErrorKind::BadDocument, std::string(key) + " is not numeric");
      slot = j[key].get<double>();
    }
  };
  take("plddt_mean", inputs.plddt_mean);
  take("iptm", inputs.iptm);
  take("ptm", inputs.ptm);
  take("interface_pae_norm", inputs.interface_pae_norm);

  FilterThresholds thresholds;
  if (a.override_thresholds) {
    thresholds.plddt_min = a.plddt_min;
    thresholds.iptm_min = a.iptm_min;
    thresholds.ptm_min = a.ptm_min;
    thresholds.interface_pae_max = a.ipae_max;
    std::cerr << "WARNING: filter thresholds overridden; verdicts are NOT comparable with "
                 "standard acceptance runs\n";
  }

  FilterVerdict verdict = apply_folding_filters(inputs, thresholds);
  if (a.as_json)
    std::cout << filter_to_json(verdict).dump(2) << "\n";
  else
    std::cout << filter_to_text(verdict);
  return 0;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::IoFailure:
      return 2;
    case ErrorKind::Internal:
      return 3;
    default:
      return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pAE-logit confidence metrics, gradients, toy binder design, and screening"};
  app.require_subcommand(1);

  ScoreArgs score;
  CLI::App* s = app.add_subcommand("score", "compute confidence metrics for one tensor");
  s->add_option("--logits", score.logits, "pae logits tensor (.npy, L x L x B)")->required();
  s->add_option("--chains", score.chains, "chain layout document (JSON)")->required();
  s->add_option("--bins", score.bins, "bin-center grid (.npy, 1-D); default PTME_BINS or built-in");
  s->add_option("--plddt", score.plddt, "per-residue confidence (.npy, 1-D)");
  s->add_option("--metric", score.metric, "all|ptm|iptm|iptm-mean|ptm-energy|ipae")
      ->check(CLI::IsMember({"all", "ptm", "iptm", "iptm-mean", "ptm-energy", "ipae"}));
  s->add_option("--out", score.out, "write to file instead of stdout");
  s->add_flag("--json", score.as_json, "machine-readable output");

  GradArgs grad;
  CLI::App* g = app.add_subcommand("grad-report", "gradient sparsity report for one tensor");
  g->add_option("--logits", grad.logits, "pae logits tensor (.npy)")->required();
  g->add_option("--chains", grad.chains, "chain layout document (JSON)")->required();
  g->add_option("--bins", grad.bins, "bin-center grid (.npy, 1-D)");
  g->add_option("--objective", grad.objective, "ptm-energy|iptm")
      ->check(CLI::IsMember({"ptm-energy", "iptm"}));
  g->add_option("--k", grad.k, "top-k target residues per step");
  g->add_option("--out", grad.out, "output directory");
  g->add_flag("--check-fd", grad.check_fd, "verify against finite differences (exit 3 on mismatch)");

  DesignArgs design;
  CLI::App* d = app.add_subcommand("design", "run toy hallucination trajectories");
  d->add_option("--config", design.config, "design config (JSON)")->required();
  d->add_option("--out", design.out, "output directory")->required();
  d->add_option("--objective", design.objective,
                "override config objective: ptm-energy|iptm|iptm-mean|none");
  d->add_option("--batch", design.batch, "trajectories with seeds seed, seed+1, ...");
  d->add_option("--jobs", design.jobs, "concurrent trajectories");

  ScreenArgs screen;
  CLI::App* c = app.add_subcommand("screen", "rank a candidate table and report retrieval metrics");
  c->add_option("--table", screen.table, "candidate CSV")->required();
  c->add_option("--metric", screen.metric, "ptm-energy|iptm|iptm-mean")
      ->check(CLI::IsMember({"ptm-energy", "iptm", "iptm-mean"}));
  c->add_option("--chains", screen.chains,
                "shared chain layout; default <tensor>.chains.json per candidate");
  c->add_option("--bins", screen.bins, "bin-center grid (.npy, 1-D)");
  c->add_option("--k", screen.ks, "comma-separated precision@k cutoffs");
  c->add_option("--out", screen.out, "output directory")->required();

  FilterArgs filter;
  CLI::App* f = app.add_subcommand("filter", "apply confidence acceptance filters to a metrics JSON");
  f->add_option("--metrics", filter.metrics, "metrics JSON path, or - for stdin");
  f->add_flag("--json", filter.as_json, "machine-readable output");
  f->add_flag("--override", filter.override_thresholds,
              "enable the threshold flags below (prints a loud warning)");
  f->add_option("--plddt-min", filter.plddt_min, "requires --override");
  f->add_option("--iptm-min", filter.iptm_min, "requires --override");
  f->add_option("--ptm-min", filter.ptm_min, "requires --override");
  f->add_option("--ipae-max", filter.ipae_max, "requires --override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    nlohmann::json err{{"error", "InvalidArgument"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }

  try {
    if (s->parsed()) return cmd_score(score);
    if (g->parsed()) return cmd_grad_report(grad);
    if (d->parsed()) return cmd_design(design);
    if (c->parsed()) return cmd_screen(screen);
    if (f->parsed()) {
      const bool touched = f->count("--plddt-min") || f->count("--iptm-min") ||
                           f->count("--ptm-min") || f->count("--ipae-max");
      if (touched && !filter.override_thresholds)
        fail(ErrorKind::InvalidArgument, "threshold flags require --override");
      return cmd_filter(filter);
    }
    fail(ErrorKind::Internal, "no subcommand dispatched");
  } catch (const Error& e) {
    nlohmann::json err{{"error", e.kind_name()}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    nlohmann::json err{{"error", "Internal"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 3;
  }
}

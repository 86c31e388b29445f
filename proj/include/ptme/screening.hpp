#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ptme/chain_map.hpp"
#include "ptme/tensor.hpp"

namespace ptme {

// One candidate row: a logits tensor on disk or a precomputed score, never
// neither and never both.
struct ScreeningRow {
  std::string candidate_id;
  int label = 0;  // 1 = binder, 0 = non-binder
  std::string logits_path;                 // empty when precomputed
  std::optional<double> precomputed_score; // already oriented higher-is-better
};

struct ScreeningTable {
  std::vector<ScreeningRow> rows;
  std::size_t positives() const;
};

// CSV with header candidate_id,label,logits_path,score. Exactly one of the
// last two cells is filled per row.
ScreeningTable read_screening_csv(const std::filesystem::path& path);

enum class ScreeningMetric { PtmEnergy, Iptm, IptmMean };

const char* screening_metric_name(ScreeningMetric m);
ScreeningMetric parse_screening_metric(const std::string& name);

struct ScoredCandidate {
  std::string id;
  int label = 0;
  double score = 0.0;  // higher is better for every metric
};

// Resolves the chain layout for one tensor-backed row (length = its L).
using ChainResolver = std::function<ChainMap(const ScreeningRow&, std::size_t)>;

// Scores every row. Energies are negated at ingestion so all scores rank
// higher-is-better; precomputed rows pass through unchanged. Errors from a
// row are annotated with its candidate id.
std::vector<ScoredCandidate> score_candidates(const ScreeningTable& table,
                                              ScreeningMetric metric,
                                              const ChainResolver& chains_for,
                                              const std::vector<double>& bin_centers);

// Descending score; ties broken by candidate id ascending.
std::vector<ScoredCandidate> ranked(std::vector<ScoredCandidate> candidates);

// Area under the precision-recall curve via the step-wise sum
// AP = sum_n (R_n - R_{n-1}) * P_n over the deterministic ranking.
double auprc(const std::vector<ScoredCandidate>& candidates);

double precision_at_k(const std::vector<ScoredCandidate>& candidates, std::size_t k);

struct ScoreHistogram {
  double lo = 0.0, hi = 0.0, width = 0.0;
  std::vector<std::size_t> counts;
};

struct PositiveMark {
  std::string id;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based position in the ranking
};

struct ScreeningReport {
  double auprc = 0.0;
  std::vector<std::pair<std::size_t, double>> precision;  // (k, P@k)
  ScoreHistogram histogram;
  std::vector<ScoredCandidate> ranking;
  std::vector<PositiveMark> positives;
};

ScreeningReport screening_report(const std::vector<ScoredCandidate>& candidates,
                                 const std::vector<std::size_t>& ks);

}  // namespace ptme

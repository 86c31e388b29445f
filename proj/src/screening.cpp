#include "ptme/screening.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "ptme/gradients.hpp"
#include "ptme/kernel.hpp"
#include "ptme/metrics.hpp"
#include "ptme/npy.hpp"

namespace ptme {
namespace {

constexpr std::size_t kHistogramBins = 20;

std::string strip_cr(std::string line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
  return line;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

}  // namespace

std::size_t ScreeningTable::positives() const {
  std::size_t n = 0;
  for (const auto& row : rows) n += row.label == 1;
  return n;
}

ScreeningTable read_screening_csv(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) fail(ErrorKind::IoFailure, "cannot open " + path.string());

  std::string line;
  if (!std::getline(file, line))
    fail(ErrorKind::BadDocument, path.string() + " is empty");
  if (strip_cr(line) != "candidate_id,label,logits_path,score")
    fail(ErrorKind::BadDocument,
         path.string() + " must start with 'candidate_id,label,logits_path,score'");

  ScreeningTable table;
  std::set<std::string> ids;
  std::size_t line_no = 1;
  while (std::getline(file, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    const std::string at = path.string() + ":" + std::to_string(line_no);
    if (cells.size() != 4)
      fail(ErrorKind::BadRow, at + ": expected 4 cells, got " + std::to_string(cells.size()));

    ScreeningRow row;
    row.candidate_id = cells[0];
    if (row.candidate_id.empty()) fail(ErrorKind::BadRow, at + ": empty candidate id");
    if (!ids.insert(row.candidate_id).second)
      fail(ErrorKind::DuplicateId, at + ": candidate '" + row.candidate_id + "' appears twice");

    if (cells[1] == "0") row.label = 0;
    else if (cells[1] == "1") row.label = 1;
    else fail(ErrorKind::BadLabel, at + ": label must be 0 or 1, got '" + cells[1] + "'");

    const bool has_path = !cells[2].empty();
    const bool has_score = !cells[3].empty();
    if (!has_path && !has_score)
      fail(ErrorKind::MissingSource, at + ": neither logits path nor score given");
    if (has_path && has_score)
      fail(ErrorKind::AmbiguousSource, at + ": both logits path and score given");
    if (has_path) {
      row.logits_path = cells[2];
    } else {
      char* end = nullptr;
      const double value = std::strtod(cells[3].c_str(), &end);
      if (end != cells[3].c_str() + cells[3].size() || !std::isfinite(value))
        fail(ErrorKind::BadRow, at + ": unparsable score '" + cells[3] + "'");
      row.precomputed_score = value;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

const char* screening_metric_name(ScreeningMetric m) {
  switch (m) {
    case ScreeningMetric::PtmEnergy: return "ptm_energy";
    case ScreeningMetric::Iptm: return "iptm";
    case ScreeningMetric::IptmMean: return "iptm_mean";
  }
  return "unknown";
}

ScreeningMetric parse_screening_metric(const std::string& name) {
  if (name == "ptm_energy" || name == "ptm-energy") return ScreeningMetric::PtmEnergy;
  if (name == "iptm") return ScreeningMetric::Iptm;
  if (name == "iptm_mean" || name == "iptm-mean") return ScreeningMetric::IptmMean;
  fail(ErrorKind::InvalidArgument, "unknown screening metric '" + name + "'");
}

std::vector<ScoredCandidate> score_candidates(const ScreeningTable& table,
                                              ScreeningMetric metric,
                                              const ChainResolver& chains_for,
                                              const std::vector<double>& bin_centers) {
  std::vector<ScoredCandidate> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    ScoredCandidate cand{row.candidate_id, row.label, 0.0};
    if (row.precomputed_score) {
      cand.score = *row.precomputed_score;
    } else {
      try {
        const PaeLogits logits = pae_from_npy(read_npy(row.logits_path));
        const ChainMap chains = chains_for(row, logits.L());
        const TmKernel kernel = build_kernel(logits.L(), bin_centers);
        switch (metric) {
          case ScreeningMetric::PtmEnergy:
            // lower energy = better binder; negate so the ranking convention holds
            cand.score = -ptm_energy(logits, chains, kernel);
            break;
          case ScreeningMetric::Iptm:
            cand.score = iptm(logits, chains, kernel);
            break;
          case ScreeningMetric::IptmMean:
            cand.score = iptm_mean(logits, chains, kernel);
            break;
        }
      } catch (const Error& e) {
        throw Error(e.kind(), "candidate '" + row.candidate_id + "': " + e.what());
      }
    }
    out.push_back(std::move(cand));
  }
  return out;
}

std::vector<ScoredCandidate> ranked(std::vector<ScoredCandidate> candidates) {
  std::sort(candidates.begin(), candidates.end(),
            [](const ScoredCandidate& a, const ScoredCandidate& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.id < b.id;
            });
  return candidates;
}

double auprc(const std::vector<ScoredCandidate>& candidates) {
  std::size_t positives = 0;
  for (const auto& c : candidates) positives += c.label == 1;
  if (positives == 0) fail(ErrorKind::NoPositives, "ranking metrics need a positive example");
  if (positives == candidates.size())
    fail(ErrorKind::NoNegatives, "ranking metrics need a negative example");

  const auto order = ranked(candidates);
  double ap = 0.0;
  std::size_t hits = 0;
  for (std::size_t n = 0; n < order.size(); ++n) {
    if (order[n].label != 1) continue;
    ++hits;
    // recall steps by 1/positives exactly at each hit; precision at this rank
    ap += double(hits) / double(n + 1) / double(positives);
  }
  return ap;
}

double precision_at_k(const std::vector<ScoredCandidate>& candidates, std::size_t k) {
  if (k < 1) fail(ErrorKind::InvalidArgument, "k must be >= 1");
  if (k > candidates.size())
    fail(ErrorKind::KTooLarge, "k=" + std::to_string(k) + " exceeds the candidate count " +
                                   std::to_string(candidates.size()));
  const auto order = ranked(candidates);
  std::size_t hits = 0;
  for (std::size_t n = 0; n < k; ++n) hits += order[n].label == 1;
  return double(hits) / double(k);
}

ScreeningReport screening_report(const std::vector<ScoredCandidate>& candidates,
                                 const std::vector<std::size_t>& ks) {
  ScreeningReport report;
  report.auprc = auprc(candidates);
  report.ranking = ranked(candidates);
  for (std::size_t k : ks) report.precision.emplace_back(k, precision_at_k(candidates, k));

  double lo = report.ranking.front().score, hi = lo;
  for (const auto& c : report.ranking) {
    lo = std::min(lo, c.score);
    hi = std::max(hi, c.score);
  }
  report.histogram.lo = lo;
  report.histogram.hi = hi;
  if (hi > lo) {
    report.histogram.width = (hi - lo) / double(kHistogramBins);
    report.histogram.counts.assign(kHistogramBins, 0);
    for (const auto& c : report.ranking) {
      std::size_t bin = std::size_t((c.score - lo) / report.histogram.width);
      bin = std::min(bin, kHistogramBins - 1);  // right edge folds into the last bin
      ++report.histogram.counts[bin];
    }
  } else {
    report.histogram.width = 0.0;
    report.histogram.counts.assign(1, report.ranking.size());
  }

  for (std::size_t n = 0; n < report.ranking.size(); ++n)
    if (report.ranking[n].label == 1)
      report.positives.push_back({report.ranking[n].id, report.ranking[n].score, n + 1});
  return report;
}

}  // namespace ptme

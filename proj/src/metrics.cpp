#include "ptme/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ptme {
namespace {

void check_compatible(const PaeLogits& logits, const TmKernel& kernel) {
  if (logits.B() != kernel.B())
    fail(ErrorKind::BinCountMismatch,
         "logits carry " + std::to_string(logits.B()) + " bins but the kernel has " +
             std::to_string(kernel.B()));
}

void check_compatible(const PaeLogits& logits, const ChainMap& chains) {
  if (logits.L() != chains.size())
    fail(ErrorKind::ChainLengthMismatch,
         "logits cover " + std::to_string(logits.L()) + " residues but the chain map declares " +
             std::to_string(chains.size()));
}

void check_bins(const PaeLogits& logits, const std::vector<double>& centers) {
  if (centers.empty())
    fail(ErrorKind::InvalidArgument, "bin centers must be non-empty");
  for (std::size_t b = 0; b < centers.size(); ++b) {
    if (centers[b] < 0.0)
      fail(ErrorKind::NegativeBinCenter, "bin center " + std::to_string(b) + " is negative");
    if (b > 0 && centers[b] <= centers[b - 1])
      fail(ErrorKind::NonMonotoneBins, "bin centers must be strictly increasing");
  }
  if (logits.B() != centers.size())
    fail(ErrorKind::BinCountMismatch,
         "logits carry " + std::to_string(logits.B()) + " bins but " +
             std::to_string(centers.size()) + " centers were supplied");
}

// E[values] under softmax(row), max-shifted.
double softmax_expectation(std::span<const double> row, std::span<const double> values) {
  double m = row[0];
  for (double x : row) m = std::max(m, x);
  double z = 0.0, s = 0.0;
  for (std::size_t b = 0; b < row.size(); ++b) {
    const double e = std::exp(row[b] - m);
    z += e;
    s += e * values[b];
  }
  return s / z;
}

// Per-residue interface scores: (1/|J_i|) * sum_{j in J_i} E[g], J_i the
// residues on chains other than chain(i).
std::vector<double> interchain_row_scores(const PaeLogits& logits, const ChainMap& chains,
                                          const TmKernel& kernel) {
  check_compatible(logits, kernel);
  check_compatible(logits, chains);
  const std::size_t L = logits.L();
  std::vector<double> scores(L, 0.0);
  for (std::size_t i = 0; i < L; ++i) {
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < L; ++j) {
      if (!chains.cross_chain(i, j)) continue;
      acc += softmax_expectation(logits.row(i, j), kernel.weights);
      ++count;
    }
    scores[i] = acc / double(count);
  }
  return scores;
}

}  // namespace

double ptm(const PaeLogits& logits, const TmKernel& kernel) {
  check_compatible(logits, kernel);
  const std::size_t L = logits.L();
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < L; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < L; ++j)
      acc += softmax_expectation(logits.row(i, j), kernel.weights);
    best = std::max(best, acc / double(L));
  }
  return best;
}

double iptm(const PaeLogits& logits, const ChainMap& chains, const TmKernel& kernel) {
  const auto scores = interchain_row_scores(logits, chains, kernel);
  return *std::max_element(scores.begin(), scores.end());
}

double iptm_mean(const PaeLogits& logits, const ChainMap& chains, const TmKernel& kernel) {
  const auto scores = interchain_row_scores(logits, chains, kernel);
  double acc = 0.0;
  for (double s : scores) acc += s;
  return acc / double(scores.size());
}

double pairwise_energy(const PaeLogits& logits, std::size_t i, std::size_t j) {
  const std::size_t L = logits.L();
  if (i >= L || j >= L)
    fail(ErrorKind::IndexOutOfRange,
         "pair (" + std::to_string(i) + "," + std::to_string(j) + ") out of range for L=" +
             std::to_string(L));
  const auto row = logits.row(i, j);
  double m = row[0];
  for (double x : row) m = std::max(m, x);
  double z = 0.0;
  for (double x : row) z += std::exp(x - m);
  return -(m + std::log(z));
}

double ptm_energy(const PaeLogits& logits, const ChainMap& chains, const TmKernel& kernel) {
  check_compatible(logits, kernel);
  check_compatible(logits, chains);
  const std::size_t L = logits.L();
  double acc = 0.0;
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t j = 0; j < L; ++j) {
      if (!chains.cross_chain(i, j)) continue;
      const auto row = logits.row(i, j);
      double m = row[0];
      for (double x : row) m = std::max(m, x);
      double s = 0.0;
      for (std::size_t b = 0; b < row.size(); ++b)
        s += kernel.weights[b] * std::exp(row[b] - m);
      acc += m + std::log(s);
    }
  }
  return -acc / double(chains.interface_size());
}

namespace {

PaeSummary expected_pae_over(const PaeLogits& logits, const std::vector<double>& centers,
                             auto&& pair_filter) {
  double acc = 0.0;
  std::size_t count = 0;
  const std::size_t L = logits.L();
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < L; ++j) {
      if (!pair_filter(i, j)) continue;
      acc += softmax_expectation(logits.row(i, j), centers);
      ++count;
    }
  if (count == 0) fail(ErrorKind::Internal, "expected-error average over an empty pair set");
  PaeSummary out;
  out.raw = acc / double(count);
  out.normalized = out.raw / centers.back();
  return out;
}

}  // namespace

PaeSummary expected_interface_pae(const PaeLogits& logits, const ChainMap& chains,
                                  const std::vector<double>& bin_centers) {
  check_bins(logits, bin_centers);
  check_compatible(logits, chains);
  return expected_pae_over(logits, bin_centers,
                           [&](std::size_t i, std::size_t j) { return chains.cross_chain(i, j); });
}

PaeSummary expected_intra_pae(const PaeLogits& logits, const ChainMap& chains,
                              const std::vector<double>& bin_centers) {
  check_bins(logits, bin_centers);
  check_compatible(logits, chains);
  return expected_pae_over(logits, bin_centers, [&](std::size_t i, std::size_t j) {
    return i != j && chains.is_binder(i) && chains.is_binder(j);
  });
}

double plddt_mean(std::span<const double> plddt, const ChainMap& chains) {
  if (plddt.size() != chains.size())
    fail(ErrorKind::ChainLengthMismatch,
         "confidence track has " + std::to_string(plddt.size()) + " values but the complex has " +
             std::to_string(chains.size()) + " residues");
  for (std::size_t i = 0; i < plddt.size(); ++i)
    if (!(plddt[i] >= 0.0 && plddt[i] <= 1.0))
      fail(ErrorKind::OutOfRangeConfidence,
           "confidence value at residue " + std::to_string(i) + " is outside [0,1]");
  double acc = 0.0;
  for (std::size_t r : chains.binder_residues()) acc += plddt[r];
  return acc / double(chains.binder_size());
}

MetricsReport compute_metrics(const PaeLogits& logits, const ChainMap& chains,
                              const TmKernel& kernel,
                              std::optional<std::span<const double>> plddt) {
  MetricsReport report;
  report.ptm = ptm(logits, kernel);
  report.iptm = iptm(logits, chains, kernel);
  report.iptm_mean = iptm_mean(logits, chains, kernel);
  report.ptm_energy = ptm_energy(logits, chains, kernel);
  const PaeSummary pae = expected_interface_pae(logits, chains, kernel.bin_centers);
  report.interface_pae_raw = pae.raw;
  report.interface_pae_norm = pae.normalized;
  if (plddt) report.plddt_mean = plddt_mean(*plddt, chains);
  return report;
}

FilterVerdict apply_folding_filters(const FilterInputs& inputs,
                                    const FilterThresholds& thresholds) {
  auto need = [](const std::optional<double>& value, const char* name) {
    if (!value) fail(ErrorKind::MissingField, std::string("filter input lacks ") + name);
    return *value;
  };
  const double plddt = need(inputs.plddt_mean, "plddt_mean");
  const double ipt = need(inputs.iptm, "iptm");
  const double pt = need(inputs.ptm, "ptm");
  const double ipae = need(inputs.interface_pae_norm, "interface_pae_norm");

  FilterVerdict verdict;
  verdict.criteria = {
      {"plddt_mean", '>', thresholds.plddt_min, plddt, plddt > thresholds.plddt_min},
      {"iptm", '>', thresholds.iptm_min, ipt, ipt > thresholds.iptm_min},
      {"ptm", '>', thresholds.ptm_min, pt, pt > thresholds.ptm_min},
      {"interface_pae_norm", '<', thresholds.interface_pae_max, ipae,
       ipae < thresholds.interface_pae_max},
  };
  verdict.pass = true;
  for (const auto& c : verdict.criteria) verdict.pass = verdict.pass && c.pass;
  return verdict;
}

FilterVerdict apply_folding_filters(const MetricsReport& report,
                                    const FilterThresholds& thresholds) {
  FilterInputs inputs;
  inputs.plddt_mean = report.plddt_mean;
  inputs.iptm = report.iptm;
  inputs.ptm = report.ptm;
  inputs.interface_pae_norm = report.interface_pae_norm;
  return apply_folding_filters(inputs, thresholds);
}

}  // namespace ptme

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ptme/chain_map.hpp"
#include "ptme/kernel.hpp"
#include "ptme/tensor.hpp"

namespace ptme {

// Predicted TM-score: max over reference residues i of the mean (over all j)
// expected kernel value under each pair's bin distribution.
double ptm(const PaeLogits& logits, const TmKernel& kernel);

// Interface variant: j restricted to chains other than chain(i), normalized
// by that count; the max still ranges over every residue i.
double iptm(const PaeLogits& logits, const ChainMap& chains, const TmKernel& kernel);

// Mean instead of max over i; never exceeds iptm.
double iptm_mean(const PaeLogits& logits, const ChainMap& chains, const TmKernel& kernel);

// -log sum_b exp(l_ijb), evaluated max-shifted so |logits| up to 1e4 stay finite.
double pairwise_energy(const PaeLogits& logits, std::size_t i, std::size_t j);

// Interface energy: -(1/|interface|) * sum over ordered cross-chain pairs of
// log sum_b g(d_b) * exp(l_ijb). Lower is better.
double ptm_energy(const PaeLogits& logits, const ChainMap& chains, const TmKernel& kernel);

struct PaeSummary {
  double raw = 0.0;         // Angstroms
  double normalized = 0.0;  // raw / max bin center
};

// Expected aligned error, averaged over ordered cross-chain pairs.
PaeSummary expected_interface_pae(const PaeLogits& logits, const ChainMap& chains,
                                  const std::vector<double>& bin_centers);

// Same expectation over ordered binder-binder pairs, diagonal excluded.
PaeSummary expected_intra_pae(const PaeLogits& logits, const ChainMap& chains,
                              const std::vector<double>& bin_centers);

// Mean per-residue confidence over the binder chain. Values must lie in [0,1].
double plddt_mean(std::span<const double> plddt, const ChainMap& chains);

struct MetricsReport {
  double ptm = 0.0;
  double iptm = 0.0;
  double iptm_mean = 0.0;
  double ptm_energy = 0.0;
  double interface_pae_raw = 0.0;
  double interface_pae_norm = 0.0;
  std::optional<double> plddt_mean;  // absent when no confidence track supplied
};

MetricsReport compute_metrics(const PaeLogits& logits, const ChainMap& chains,
                              const TmKernel& kernel,
                              std::optional<std::span<const double>> plddt = std::nullopt);

// Hallucination-output acceptance gate. All comparisons are strict.
struct FilterThresholds {
  double plddt_min = 0.8;
  double iptm_min = 0.5;
  double ptm_min = 0.45;
  double interface_pae_max = 0.4;
};

struct FilterInputs {
  std::optional<double> plddt_mean;
  std::optional<double> iptm;
  std::optional<double> ptm;
  std::optional<double> interface_pae_norm;
};

struct CriterionVerdict {
  std::string name;
  char op = '>';      // '>' pass if value > threshold, '<' pass if value < threshold
  double threshold = 0.0;
  double value = 0.0;
  bool pass = false;
};

struct FilterVerdict {
  bool pass = false;
  std::vector<CriterionVerdict> criteria;
};

FilterVerdict apply_folding_filters(const FilterInputs& inputs,
                                    const FilterThresholds& thresholds = {});
FilterVerdict apply_folding_filters(const MetricsReport& report,
                                    const FilterThresholds& thresholds = {});

}  // namespace ptme

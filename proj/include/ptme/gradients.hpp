#pragma once

#include <span>
#include <vector>

#include "ptme/chain_map.hpp"
#include "ptme/kernel.hpp"
#include "ptme/metrics.hpp"
#include "ptme/tensor.hpp"

namespace ptme {

// Gradients are stored with the same (i, j, b) layout as the logits they
// differentiate.
using GradTensor = Tensor3;

// d(ptm_energy)/d(logits). Nonzero on every ordered cross-chain pair, zero
// elsewhere; each interface pair's bin entries sum to -1/|interface| and the
// whole tensor sums to -1 (softmax-style weights scaled by the leading
// -1/|interface|).
GradTensor grad_ptm_energy(const PaeLogits& logits, const ChainMap& chains,
                           const TmKernel& kernel);

struct IptmGradient {
  GradTensor grad;
  std::size_t argmax_row = 0;   // reference residue attaining the max (lowest on ties)
  bool tie_broken = false;      // another row attained exactly the same score
  double value = 0.0;           // the iptm value itself
  std::size_t support_pairs = 0;  // |J_argmax|: pairs with nonzero entries
};

// Subgradient of iptm: support restricted to the argmax reference row.
IptmGradient grad_iptm(const PaeLogits& logits, const ChainMap& chains,
                       const TmKernel& kernel);

// Dense analogue for the mean-over-rows variant (used by the design loss).
GradTensor grad_iptm_mean(const PaeLogits& logits, const ChainMap& chains,
                          const TmKernel& kernel);

enum class Metric { PtmEnergy, Iptm, IptmMean, Ptm };

double evaluate_metric(Metric metric, const PaeLogits& logits, const ChainMap& chains,
                       const TmKernel& kernel);

// Central-difference oracle over every coordinate. Guarded: refuses tensors
// with more than 10,000 entries (TooLargeForOracle).
GradTensor finite_difference(Metric metric, const PaeLogits& logits, const ChainMap& chains,
                             const TmKernel& kernel, double epsilon = 1e-5);

// max over entries of |analytic - reference| / max(|reference|, 1e-12)
double max_relative_error(const GradTensor& analytic, const GradTensor& reference);

// Which target residues carry gradient signal, per step and cumulatively.
struct GradientReport {
  std::size_t k = 0;
  std::size_t steps = 0;
  Matrix per_pair_max;  // binder x target, max |grad| over bins/steps, scaled to [0,1]
  std::vector<std::size_t> topk_frequency;  // per target residue: steps in the top k
  double engaged_fraction = 0.0;  // target residues ever in a top k, / target count
};

// Ranks target residues per step by max-over-(binder residue, bin) absolute
// gradient; zero-magnitude residues never count as engaged. Both orientations
// of each (binder, target) pair are folded together by max.
GradientReport sparsity_report(std::span<const GradTensor> grads, const ChainMap& chains,
                               std::size_t k = 10);

}  // namespace ptme

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ptme/chain_map.hpp"
#include "ptme/gradients.hpp"
#include "ptme/kernel.hpp"
#include "ptme/rng.hpp"
#include "ptme/toy_predictor.hpp"

namespace ptme {

enum class Objective { PtmEnergy, Iptm, IptmMean, None };

const char* objective_name(Objective o);
Objective parse_objective(const std::string& name);

// Weighted terms of the design loss (positive weights; the contact terms are
// subtracted so more contacts mean lower loss):
//   total = w.energy * E_obj + w.plddt * (1 - plddt_mean) + w.ipae * ipae_norm
//         + w.intra_pae * intra_norm - w.con_inter * con_inter
//         - w.con_intra * con_intra + w.rad_gyr * rg_scaled
struct LossWeights {
  double energy = 0.05;
  double plddt = 0.1;
  double ipae = 0.1;
  double intra_pae = 0.4;
  double con_inter = 1.0;
  double con_intra = 1.0;
  double rad_gyr = 0.3;
};

struct DesignConfig {
  std::size_t binder_length = 60;
  LossWeights weights;
  Objective objective = Objective::PtmEnergy;
  double learning_rate = 0.1;
  std::array<std::size_t, 3> stage_steps = {100, 50, 50};
  std::size_t greedy_proposals = 100;
  double temp_init = 1.0;
  double temp_final = 0.01;
  double plddt_terminate_below = 0.3;
  double contact_cutoff = 8.0;   // Angstroms
  double contact_sharpness = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LossComponents {
  double energy = 0.0;     // E_obj: ptm_energy, or 1 - iptm (mean) variant, or 0
  double plddt = 0.0;      // 1 - binder mean confidence
  double ipae = 0.0;       // normalized expected cross-chain error
  double intra_pae = 0.0;  // normalized expected binder-binder error
  double con_inter = 0.0;
  double con_intra = 0.0;
  double rad_gyr = 0.0;
};

double recompose(const LossComponents& parts, const LossWeights& weights);

struct CompositeLoss {
  double total = 0.0;
  LossComponents parts;
};

CompositeLoss composite_loss(const ConfidenceBundle& bundle, const ChainMap& chains,
                             const TmKernel& kernel, const DesignConfig& config);

// Loss plus its bundle-space gradient; optionally also the raw objective
// metric gradient with respect to the pae logits (for sparsity analysis).
CompositeLoss composite_loss_with_grad(const ConfidenceBundle& bundle, const ChainMap& chains,
                                       const TmKernel& kernel, const DesignConfig& config,
                                       BundleGrad& out_grad,
                                       GradTensor* objective_grad = nullptr);

struct TrajectoryStep {
  std::size_t step = 0;
  int stage = 0;
  double loss_total = 0.0;
  LossComponents parts;
  double temperature = 0.0;
  bool accepted = true;  // stage 4: whether the evaluated proposal was taken
};

struct TrajectoryRecord {
  Objective objective = Objective::None;
  std::uint64_t seed = 0;
  std::size_t binder_length = 0;
  std::vector<TrajectoryStep> steps;
  std::string final_sequence;  // empty when terminated early
  bool terminated_early = false;
  std::string termination_reason;
  std::optional<double> stage4_entry_loss;  // discrete loss before any proposal
  std::optional<double> final_loss;         // discrete loss of the returned sequence
  std::optional<std::size_t> final_clashes;
  // step-0 energy-term reach: binder positions with nonzero gradient through
  // the pae path, and the reference row for the interface variants
  std::optional<std::size_t> step0_grad_support;
  std::optional<std::size_t> step0_argmax_row;
};

// Per-step tap for the objective metric's logit gradient (sparsity studies).
class GradientSink {
 public:
  virtual ~GradientSink() = default;
  virtual void on_step(std::size_t step, const GradTensor& objective_grad) = 0;
};

struct RecordingSink : GradientSink {
  std::vector<GradTensor> recorded;
  void on_step(std::size_t, const GradTensor& g) override { recorded.push_back(g); }
};

// Mutable optimization state threaded through the four stages.
struct DesignState {
  Matrix z;  // binder_length x 20 logits
  std::size_t step = 0;
  Rng rng;
  std::vector<TrajectoryStep> trace;
  bool terminated_early = false;
  std::string termination_reason;
  double last_plddt_mean = 0.0;
  std::vector<std::size_t> sequence;  // maintained argmax of z
  std::optional<double> stage4_entry_loss;
  std::optional<double> stage4_final_loss;
  std::optional<std::size_t> step0_grad_support;
  std::optional<std::size_t> step0_argmax_row;

  explicit DesignState(Rng r) : rng(r) {}
};

struct DesignContext {
  const Predictor* predictor = nullptr;
  ChainMap chains;
  TmKernel kernel;
  DesignConfig config;
  GradientSink* sink = nullptr;
};

// Chain layout used throughout the loop: binder block first, then the target.
ChainMap design_chain_map(std::size_t binder_length, std::size_t target_length);

DesignContext make_context(const Predictor& predictor, const DesignConfig& config,
                           GradientSink* sink = nullptr);
DesignState init_state(const DesignContext& ctx);

// Stage 1: plain gradient descent on the logits at temp_init; the early-
// termination check runs once, at stage exit.
void stage1_logit_descent(DesignState& state, const DesignContext& ctx);
// Stage 2: same updates under a geometric temperature schedule
// temp_init -> temp_final (endpoints included).
void stage2_anneal(DesignState& state, const DesignContext& ctx);
// Stage 3: forward passes see one-hot argmax rows (ties -> lowest alphabet
// index); the backward pass treats the argmax as identity and lands on the
// relaxed softmax at temp_final.
void stage3_straight_through(DesignState& state, const DesignContext& ctx);
// Stage 4: seeded greedy point mutations, accepted only on strict loss
// decrease.
void stage4_greedy_mutation(DesignState& state, const DesignContext& ctx);

TrajectoryRecord run_trajectory(const Predictor& predictor, const DesignConfig& config,
                                GradientSink* sink = nullptr);

std::string sequence_letters(const std::vector<std::size_t>& sequence);
std::vector<std::size_t> argmax_sequence(const Matrix& z);
Matrix softmax_rows(const Matrix& z, double temperature);
Matrix one_hot_rows(const std::vector<std::size_t>& sequence);

}  // namespace ptme

#include "ptme/design.hpp"

#include <algorithm>
#include <cmath>

#include "ptme/metrics.hpp"

namespace ptme {

const char* objective_name(Objective o) {
  switch (o) {
    case Objective::PtmEnergy: return "ptm_energy";
    case Objective::Iptm: return "iptm";
    case Objective::IptmMean: return "iptm_mean";
    case Objective::None: return "none";
  }
  return "unknown";
}

Objective parse_objective(const std::string& name) {
  if (name == "ptm_energy" || name == "ptm-energy") return Objective::PtmEnergy;
  if (name == "iptm") return Objective::Iptm;
  if (name == "iptm_mean" || name == "iptm-mean") return Objective::IptmMean;
  if (name == "none") return Objective::None;
  fail(ErrorKind::InvalidArgument, "unknown objective '" + name + "'");
}

void DesignConfig::validate() const {
  if (binder_length < 1) fail(ErrorKind::InvalidArgument, "binder length must be >= 1");
  if (learning_rate < 0.0) fail(ErrorKind::InvalidArgument, "learning rate must be >= 0");
  if (temp_init <= 0.0 || temp_final <= 0.0)
    fail(ErrorKind::InvalidArgument, "temperatures must be positive");
  if (temp_final > temp_init)
    fail(ErrorKind::InvalidArgument, "annealing must cool: temp_final <= temp_init");
  for (double w : {weights.energy, weights.plddt, weights.ipae, weights.intra_pae,
                   weights.con_inter, weights.con_intra, weights.rad_gyr})
    if (w < 0.0) fail(ErrorKind::InvalidArgument, "loss weights must be >= 0");
  if (contact_cutoff <= 0.0) fail(ErrorKind::NonPositiveCutoff, "contact cutoff must be positive");
  if (contact_sharpness <= 0.0)
    fail(ErrorKind::InvalidArgument, "contact sharpness must be positive");
}

double recompose(const LossComponents& p, const LossWeights& w) {
  return w.energy * p.energy + w.plddt * p.plddt + w.ipae * p.ipae +
         w.intra_pae * p.intra_pae - w.con_inter * p.con_inter -
         w.con_intra * p.con_intra + w.rad_gyr * p.rad_gyr;
}

namespace {

void check_bundle(const ConfidenceBundle& bundle, const ChainMap& chains,
                  const TmKernel& kernel) {
  if (bundle.pae.L() != chains.size())
    fail(ErrorKind::ChainLengthMismatch, "bundle does not match the chain map");
  if (bundle.pae.B() != kernel.B())
    fail(ErrorKind::BinCountMismatch, "bundle does not match the kernel bin grid");
  if (bundle.plddt.size() != chains.size() || bundle.coords.size() != chains.size())
    fail(ErrorKind::ChainLengthMismatch, "bundle tracks have inconsistent lengths");
}

std::vector<Vec3> gather(const std::vector<Vec3>& coords, const std::vector<std::size_t>& idx) {
  std::vector<Vec3> out;
  out.reserve(idx.size());
  for (std::size_t r : idx) out.push_back(coords[r]);
  return out;
}

double objective_value(Objective objective, const ConfidenceBundle& bundle,
                       const ChainMap& chains, const TmKernel& kernel) {
  switch (objective) {
    case Objective::PtmEnergy: return ptm_energy(bundle.pae, chains, kernel);
    // interface TM variants score higher-is-better; flip them so descent helps
    case Objective::Iptm: return 1.0 - iptm(bundle.pae, chains, kernel);
    case Objective::IptmMean: return 1.0 - iptm_mean(bundle.pae, chains, kernel);
    case Objective::None: return 0.0;
  }
  fail(ErrorKind::Internal, "unhandled objective");
}

// d(expected normalized error)/d(logits) over the pair set, scaled by factor.
void add_expected_pae_grad(const PaeLogits& logits, const std::vector<double>& centers,
                           auto&& pair_filter, std::size_t pair_count, double factor,
                           Tensor3& out) {
  const std::size_t L = logits.L(), B = logits.B();
  const double lead = factor / (double(pair_count) * centers.back());
  std::vector<double> q(B);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < L; ++j) {
      if (!pair_filter(i, j)) continue;
      const auto row = logits.row(i, j);
      double m = row[0];
      for (double x : row) m = std::max(m, x);
      double z = 0.0;
      for (std::size_t b = 0; b < B; ++b) {
        q[b] = std::exp(row[b] - m);
        z += q[b];
      }
      double expect = 0.0;
      for (std::size_t b = 0; b < B; ++b) {
        q[b] /= z;
        expect += q[b] * centers[b];
      }
      auto cell = out.row(i, j);
      for (std::size_t b = 0; b < B; ++b)
        cell[b] += lead * q[b] * (centers[b] - expect);
    }
}

}  // namespace

CompositeLoss composite_loss(const ConfidenceBundle& bundle, const ChainMap& chains,
                             const TmKernel& kernel, const DesignConfig& config) {
  check_bundle(bundle, chains, kernel);
  CompositeLoss loss;
  loss.parts.energy = objective_value(config.objective, bundle, chains, kernel);
  loss.parts.plddt = 1.0 - plddt_mean(bundle.plddt, chains);
  loss.parts.ipae = expected_interface_pae(bundle.pae, chains, kernel.bin_centers).normalized;
  loss.parts.intra_pae = expected_intra_pae(bundle.pae, chains, kernel.bin_centers).normalized;
  const ContactScores contacts = contact_losses(bundle.coords, chains, config.contact_cutoff,
                                                config.contact_sharpness);
  loss.parts.con_inter = contacts.inter;
  loss.parts.con_intra = contacts.intra;
  loss.parts.rad_gyr =
      radius_of_gyration(gather(bundle.coords, chains.binder_residues())).scaled;
  loss.total = recompose(loss.parts, config.weights);
  return loss;
}

CompositeLoss composite_loss_with_grad(const ConfidenceBundle& bundle, const ChainMap& chains,
                                       const TmKernel& kernel, const DesignConfig& config,
                                       BundleGrad& out_grad, GradTensor* objective_grad) {
  check_bundle(bundle, chains, kernel);
  const std::size_t L = chains.size(), B = kernel.B();
  const LossWeights& w = config.weights;

  out_grad.d_pae = Tensor3(L, L, B, 0.0);
  out_grad.d_plddt.assign(L, 0.0);
  out_grad.d_coords.assign(L, Vec3{});

  CompositeLoss loss;

  // objective term through the pae stack
  switch (config.objective) {
    case Objective::PtmEnergy: {
      const GradTensor g = grad_ptm_energy(bundle.pae, chains, kernel);
      loss.parts.energy = ptm_energy(bundle.pae, chains, kernel);
      for (std::size_t k = 0; k < g.v.size(); ++k) out_grad.d_pae.v[k] += w.energy * g.v[k];
      if (objective_grad) *objective_grad = g;
      break;
    }
    case Objective::Iptm: {
      const IptmGradient g = grad_iptm(bundle.pae, chains, kernel);
      loss.parts.energy = 1.0 - g.value;
      for (std::size_t k = 0; k < g.grad.v.size(); ++k)
        out_grad.d_pae.v[k] -= w.energy * g.grad.v[k];
      if (objective_grad) *objective_grad = g.grad;
      break;
    }
    case Objective::IptmMean: {
      const GradTensor g = grad_iptm_mean(bundle.pae, chains, kernel);
      loss.parts.energy = 1.0 - iptm_mean(bundle.pae, chains, kernel);
      for (std::size_t k = 0; k < g.v.size(); ++k) out_grad.d_pae.v[k] -= w.energy * g.v[k];
      if (objective_grad) *objective_grad = g;
      break;
    }
    case Objective::None:
      loss.parts.energy = 0.0;
      if (objective_grad) *objective_grad = Tensor3(L, L, B, 0.0);
      break;
  }

  // confidence term: d/dplddt_i of w.plddt * (1 - mean over binder)
  loss.parts.plddt = 1.0 - plddt_mean(bundle.plddt, chains);
  for (std::size_t r : chains.binder_residues())
    out_grad.d_plddt[r] -= w.plddt / double(chains.binder_size());

  // expected-error terms
  loss.parts.ipae = expected_interface_pae(bundle.pae, chains, kernel.bin_centers).normalized;
  add_expected_pae_grad(
      bundle.pae, kernel.bin_centers,
      [&](std::size_t i, std::size_t j) { return chains.cross_chain(i, j); },
      chains.interface_size(), w.ipae, out_grad.d_pae);

  loss.parts.intra_pae = expected_intra_pae(bundle.pae, chains, kernel.bin_centers).normalized;
  const std::size_t nb = chains.binder_size();
  add_expected_pae_grad(
      bundle.pae, kernel.bin_centers,
      [&](std::size_t i, std::size_t j) {
        return i != j && chains.is_binder(i) && chains.is_binder(j);
      },
      nb * (nb - 1), w.intra_pae, out_grad.d_pae);

  // geometry terms (contacts are subtracted, hence the negative upstreams)
  const ContactScores contacts =
      contact_losses_vjp(bundle.coords, chains, config.contact_cutoff,
                         config.contact_sharpness, -w.con_inter, -w.con_intra,
                         out_grad.d_coords);
  loss.parts.con_inter = contacts.inter;
  loss.parts.con_intra = contacts.intra;

  const auto& binder_idx = chains.binder_residues();
  std::vector<Vec3> binder_coords = gather(bundle.coords, binder_idx);
  std::vector<Vec3> binder_grad(binder_coords.size());
  const GyrationRadius rg =
      radius_of_gyration_vjp(binder_coords, w.rad_gyr, binder_grad);
  loss.parts.rad_gyr = rg.scaled;
  for (std::size_t k = 0; k < binder_idx.size(); ++k)
    out_grad.d_coords[binder_idx[k]] += binder_grad[k];

  loss.total = recompose(loss.parts, w);
  return loss;
}

ChainMap design_chain_map(std::size_t binder_length, std::size_t target_length) {
  return ChainMap::build({{"binder", binder_length}, {"target", target_length}}, "binder",
                         {"target"});
}

DesignContext make_context(const Predictor& predictor, const DesignConfig& config,
                           GradientSink* sink) {
  config.validate();
  DesignContext ctx{&predictor,
                    design_chain_map(config.binder_length, predictor.target_len()),
                    build_kernel(config.binder_length + predictor.target_len(),
                                 default_bin_centers(predictor.n_bins())),
                    config, sink};
  return ctx;
}

DesignState init_state(const DesignContext& ctx) {
  DesignState state{Rng(ctx.config.seed)};
  state.z = Matrix(ctx.config.binder_length, kAlphabetSize);
  for (double& x : state.z.v) x = state.rng.normal();
  state.sequence = argmax_sequence(state.z);
  return state;
}

Matrix softmax_rows(const Matrix& z, double temperature) {
  Matrix p(z.rows, z.cols);
  for (std::size_t r = 0; r < z.rows; ++r) {
    const auto row = z.row(r);
    double m = row[0];
    for (double x : row) m = std::max(m, x);
    double acc = 0.0;
    for (std::size_t c = 0; c < z.cols; ++c) {
      p.at(r, c) = std::exp((row[c] - m) / temperature);
      acc += p.at(r, c);
    }
    for (std::size_t c = 0; c < z.cols; ++c) p.at(r, c) /= acc;
  }
  return p;
}

std::vector<std::size_t> argmax_sequence(const Matrix& z) {
  std::vector<std::size_t> seq(z.rows, 0);
  for (std::size_t r = 0; r < z.rows; ++r) {
    const auto row = z.row(r);
    for (std::size_t c = 1; c < z.cols; ++c)
      if (row[c] > row[seq[r]]) seq[r] = c;  // ties keep the lowest index
  }
  return seq;
}

Matrix one_hot_rows(const std::vector<std::size_t>& sequence) {
  Matrix p(sequence.size(), kAlphabetSize, 0.0);
  for (std::size_t r = 0; r < sequence.size(); ++r) p.at(r, sequence[r]) = 1.0;
  return p;
}

std::string sequence_letters(const std::vector<std::size_t>& sequence) {
  std::string out;
  out.reserve(sequence.size());
  for (std::size_t a : sequence) {
    if (a >= kAlphabetSize) fail(ErrorKind::Internal, "alphabet index out of range");
    out.push_back(kAlphabet[a]);
  }
  return out;
}

namespace {

// softmax jacobian-transpose times upstream, with temperature:
//   dz_rc = (1/T) * p_rc * (g_rc - sum_a g_ra p_ra)
Matrix softmax_chain(const Matrix& probs, const Matrix& upstream, double temperature) {
  Matrix dz(probs.rows, probs.cols);
  for (std::size_t r = 0; r < probs.rows; ++r) {
    double inner = 0.0;
    for (std::size_t c = 0; c < probs.cols; ++c) inner += upstream.at(r, c) * probs.at(r, c);
    for (std::size_t c = 0; c < probs.cols; ++c)
      dz.at(r, c) = probs.at(r, c) * (upstream.at(r, c) - inner) / temperature;
  }
  return dz;
}

// one relaxed (or straight-through) descent step; shared by stages 1-3
void descent_step(DesignState& state, const DesignContext& ctx, double temperature,
                  bool straight_through, int stage) {
  const Matrix soft = softmax_rows(state.z, temperature);
  const Matrix forward = straight_through ? one_hot_rows(argmax_sequence(state.z)) : soft;

  const ConfidenceBundle bundle = ctx.predictor->predict(forward);
  BundleGrad upstream;
  GradTensor objective_grad;
  const bool want_objective =
      (ctx.sink != nullptr || state.step == 0) && ctx.config.objective != Objective::None;
  const CompositeLoss loss =
      composite_loss_with_grad(bundle, ctx.chains, ctx.kernel, ctx.config, upstream,
                               want_objective ? &objective_grad : nullptr);

  state.trace.push_back({state.step, stage, loss.total, loss.parts, temperature, true});
  state.last_plddt_mean = 1.0 - loss.parts.plddt;

  if (state.step == 0 && ctx.config.objective != Objective::None) {
    // How many binder positions feel the objective at initialization?
    BundleGrad energy_only;
    energy_only.d_pae = objective_grad;
    energy_only.d_plddt.assign(ctx.chains.size(), 0.0);
    energy_only.d_coords.assign(ctx.chains.size(), Vec3{});
    const Matrix dp = ctx.predictor->backprop(forward, energy_only);
    const Matrix dz = softmax_chain(soft, dp, temperature);
    std::size_t touched = 0;
    for (std::size_t r = 0; r < dz.rows; ++r) {
      bool any = false;
      for (std::size_t c = 0; c < dz.cols; ++c) any = any || dz.at(r, c) != 0.0;
      touched += any;
    }
    state.step0_grad_support = touched;
    if (ctx.config.objective == Objective::Iptm)
      state.step0_argmax_row = grad_iptm(bundle.pae, ctx.chains, ctx.kernel).argmax_row;
  }
  if (ctx.sink && ctx.config.objective != Objective::None)
    ctx.sink->on_step(state.step, objective_grad);

  const Matrix dp = ctx.predictor->backprop(forward, upstream);
  const Matrix dz = softmax_chain(soft, dp, temperature);
  for (std::size_t k = 0; k < state.z.v.size(); ++k)
    state.z.v[k] -= ctx.config.learning_rate * dz.v[k];
  state.sequence = argmax_sequence(state.z);
  ++state.step;
}

CompositeLoss discrete_loss(const DesignContext& ctx, const std::vector<std::size_t>& seq) {
  const ConfidenceBundle bundle = ctx.predictor->predict(one_hot_rows(seq));
  return composite_loss(bundle, ctx.chains, ctx.kernel, ctx.config);
}

}  // namespace

void stage1_logit_descent(DesignState& state, const DesignContext& ctx) {
  if (state.terminated_early) return;
  const std::size_t steps = ctx.config.stage_steps[0];
  for (std::size_t t = 0; t < steps; ++t)
    descent_step(state, ctx, ctx.config.temp_init, false, 1);
  // the confidence gate runs once, on the last forward pass of this stage
  if (steps > 0 && state.last_plddt_mean < ctx.config.plddt_terminate_below) {
    state.terminated_early = true;
    state.termination_reason = "binder confidence " + std::to_string(state.last_plddt_mean) +
                               " below " + std::to_string(ctx.config.plddt_terminate_below) +
                               " at stage-1 exit";
  }
}

void stage2_anneal(DesignState& state, const DesignContext& ctx) {
  if (state.terminated_early) return;
  const std::size_t steps = ctx.config.stage_steps[1];
  const double ratio = ctx.config.temp_final / ctx.config.temp_init;
  for (std::size_t t = 0; t < steps; ++t) {
    const double temp =
        (steps == 1) ? ctx.config.temp_final
                     : ctx.config.temp_init * std::pow(ratio, double(t) / double(steps - 1));
    descent_step(state, ctx, temp, false, 2);
  }
}

void stage3_straight_through(DesignState& state, const DesignContext& ctx) {
  if (state.terminated_early) return;
  for (std::size_t t = 0; t < ctx.config.stage_steps[2]; ++t)
    descent_step(state, ctx, ctx.config.temp_final, true, 3);
}

void stage4_greedy_mutation(DesignState& state, const DesignContext& ctx) {
  if (state.terminated_early) return;
  state.sequence = argmax_sequence(state.z);
  CompositeLoss current = discrete_loss(ctx, state.sequence);
  state.stage4_entry_loss = current.total;

  for (std::size_t r = 0; r < ctx.config.greedy_proposals; ++r) {
    const std::size_t pos = std::size_t(state.rng.below(ctx.config.binder_length));
    std::size_t aa = std::size_t(state.rng.below(kAlphabetSize - 1));
    if (aa >= state.sequence[pos]) ++aa;  // uniform over the 19 other letters

    std::vector<std::size_t> candidate = state.sequence;
    candidate[pos] = aa;
    const CompositeLoss trial = discrete_loss(ctx, candidate);
    const bool accept = trial.total < current.total;
    state.trace.push_back(
        {state.step, 4, trial.total, trial.parts, ctx.config.temp_final, accept});
    ++state.step;
    if (accept) {
      // keep argmax(z) aligned with the discrete sequence by swapping the
      // two row entries; the logit multiset is preserved
      std::swap(state.z.at(pos, aa), state.z.at(pos, state.sequence[pos]));
      state.sequence = candidate;
      current = trial;
    }
  }
  state.stage4_final_loss = current.total;
}

TrajectoryRecord run_trajectory(const Predictor& predictor, const DesignConfig& config,
                                GradientSink* sink) {
  const DesignContext ctx = make_context(predictor, config, sink);
  DesignState state = init_state(ctx);

  try {
    stage1_logit_descent(state, ctx);
    stage2_anneal(state, ctx);
    stage3_straight_through(state, ctx);
    stage4_greedy_mutation(state, ctx);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::PredictorFailure) throw;
    state.terminated_early = true;
    state.termination_reason = e.what();
  }

  TrajectoryRecord record;
  record.objective = config.objective;
  record.seed = config.seed;
  record.binder_length = config.binder_length;
  record.steps = std::move(state.trace);
  record.terminated_early = state.terminated_early;
  record.termination_reason = state.termination_reason;
  record.stage4_entry_loss = state.stage4_entry_loss;
  record.step0_grad_support = state.step0_grad_support;
  record.step0_argmax_row = state.step0_argmax_row;

  if (!state.terminated_early) {
    state.sequence = argmax_sequence(state.z);
    record.final_sequence = sequence_letters(state.sequence);
    ConfidenceBundle final_bundle = ctx.predictor->predict(one_hot_rows(state.sequence));
    record.final_loss =
        composite_loss(final_bundle, ctx.chains, ctx.kernel, ctx.config).total;
    record.final_clashes = clash_count(final_bundle.coords, ctx.chains);
  }
  return record;
}

}  // namespace ptme

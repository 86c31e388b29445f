#include "ptme/gradients.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ptme {
namespace {

void check_inputs(const PaeLogits& logits, const ChainMap& chains, const TmKernel& kernel) {
  if (logits.B() != kernel.B())
    fail(ErrorKind::BinCountMismatch,
         "logits carry " + std::to_string(logits.B()) + " bins but the kernel has " +
             std::to_string(kernel.B()));
  if (logits.L() != chains.size())
    fail(ErrorKind::ChainLengthMismatch,
         "logits cover " + std::to_string(logits.L()) + " residues but the chain map declares " +
             std::to_string(chains.size()));
}

// softmax(row) into out, max-shifted
void softmax_row(std::span<const double> row, std::vector<double>& out) {
  out.resize(row.size());
  double m = row[0];
  for (double x : row) m = std::max(m, x);
  double z = 0.0;
  for (std::size_t b = 0; b < row.size(); ++b) {
    out[b] = std::exp(row[b] - m);
    z += out[b];
  }
  for (double& q : out) q /= z;
}

}  // namespace

GradTensor grad_ptm_energy(const PaeLogits& logits, const ChainMap& chains,
                           const TmKernel& kernel) {
  check_inputs(logits, chains, kernel);
  const std::size_t L = logits.L(), B = logits.B();
  GradTensor grad(L, L, B, 0.0);
  const double lead = -1.0 / double(chains.interface_size());
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t j = 0; j < L; ++j) {
      if (!chains.cross_chain(i, j)) continue;
      const auto row = logits.row(i, j);
      double m = row[0];
      for (double x : row) m = std::max(m, x);
      double denom = 0.0;
      auto out = grad.row(i, j);
      for (std::size_t b = 0; b < B; ++b) {
        out[b] = kernel.weights[b] * std::exp(row[b] - m);
        denom += out[b];
      }
      // w_b = g_b e^l / sum g e^l; the pair's bin entries sum to lead exactly
      for (std::size_t b = 0; b < B; ++b) out[b] *= lead / denom;
    }
  }
  return grad;
}

IptmGradient grad_iptm(const PaeLogits& logits, const ChainMap& chains,
                       const TmKernel& kernel) {
  check_inputs(logits, chains, kernel);
  const std::size_t L = logits.L(), B = logits.B();

  std::vector<double> q;
  std::vector<double> scores(L, 0.0);
  std::vector<std::size_t> counts(L, 0);
  for (std::size_t i = 0; i < L; ++i) {
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < L; ++j) {
      if (!chains.cross_chain(i, j)) continue;
      softmax_row(logits.row(i, j), q);
      double e = 0.0;
      for (std::size_t b = 0; b < B; ++b) e += q[b] * kernel.weights[b];
      acc += e;
      ++count;
    }
    scores[i] = acc / double(count);
    counts[i] = count;
  }

  IptmGradient result;
  result.argmax_row = 0;
  for (std::size_t i = 1; i < L; ++i)
    if (scores[i] > scores[result.argmax_row]) result.argmax_row = i;  // ties keep lowest
  for (std::size_t i = 0; i < L; ++i)
    if (i != result.argmax_row && scores[i] == scores[result.argmax_row])
      result.tie_broken = true;
  result.value = scores[result.argmax_row];

  result.grad = GradTensor(L, L, B, 0.0);
  const std::size_t istar = result.argmax_row;
  const double inv = 1.0 / double(counts[istar]);
  for (std::size_t j = 0; j < L; ++j) {
    if (!chains.cross_chain(istar, j)) continue;
    softmax_row(logits.row(istar, j), q);
    double e = 0.0;
    for (std::size_t b = 0; b < B; ++b) e += q[b] * kernel.weights[b];
    auto out = result.grad.row(istar, j);
    for (std::size_t b = 0; b < B; ++b)
      out[b] = inv * q[b] * (kernel.weights[b] - e);
    ++result.support_pairs;
  }
  return result;
}

GradTensor grad_iptm_mean(const PaeLogits& logits, const ChainMap& chains,
                          const TmKernel& kernel) {
  check_inputs(logits, chains, kernel);
  const std::size_t L = logits.L(), B = logits.B();
  GradTensor grad(L, L, B, 0.0);
  std::vector<double> q;
  for (std::size_t i = 0; i < L; ++i) {
    std::size_t count = 0;
    for (std::size_t j = 0; j < L; ++j)
      if (chains.cross_chain(i, j)) ++count;
    const double inv = 1.0 / (double(L) * double(count));
    for (std::size_t j = 0; j < L; ++j) {
      if (!chains.cross_chain(i, j)) continue;
      softmax_row(logits.row(i, j), q);
      double e = 0.0;
      for (std::size_t b = 0; b < B; ++b) e += q[b] * kernel.weights[b];
      auto out = grad.row(i, j);
      for (std::size_t b = 0; b < B; ++b)
        out[b] = inv * q[b] * (kernel.weights[b] - e);
    }
  }
  return grad;
}

double evaluate_metric(Metric metric, const PaeLogits& logits, const ChainMap& chains,
                       const TmKernel& kernel) {
  switch (metric) {
    case Metric::PtmEnergy: return ptm_energy(logits, chains, kernel);
    case Metric::Iptm: return iptm(logits, chains, kernel);
    case Metric::IptmMean: return iptm_mean(logits, chains, kernel);
    case Metric::Ptm: return ptm(logits, kernel);
  }
  fail(ErrorKind::Internal, "unhandled metric");
}

GradTensor finite_difference(Metric metric, const PaeLogits& logits, const ChainMap& chains,
                             const TmKernel& kernel, double epsilon) {
  check_inputs(logits, chains, kernel);
  if (epsilon <= 0.0) fail(ErrorKind::InvalidArgument, "step size must be positive");
  const std::size_t L = logits.L(), B = logits.B();
  if (L * L * B > 10000)
    fail(ErrorKind::TooLargeForOracle,
         "tensor has " + std::to_string(L * L * B) +
             " entries; the central-difference oracle is capped at 10000");

  PaeLogits probe = logits;  // value copy; perturbed in place
  GradTensor grad(L, L, B, 0.0);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < L; ++j)
      for (std::size_t b = 0; b < B; ++b) {
        double& cell = probe.tensor_unchecked().at(i, j, b);
        const double keep = cell;
        cell = keep + epsilon;
        const double hi = evaluate_metric(metric, probe, chains, kernel);
        cell = keep - epsilon;
        const double lo = evaluate_metric(metric, probe, chains, kernel);
        cell = keep;
        grad.at(i, j, b) = (hi - lo) / (2.0 * epsilon);
      }
  return grad;
}

double max_relative_error(const GradTensor& analytic, const GradTensor& reference) {
  if (!analytic.same_shape(reference))
    fail(ErrorKind::InvalidArgument, "gradient tensors have different shapes");
  double worst = 0.0;
  for (std::size_t k = 0; k < analytic.v.size(); ++k) {
    const double denom = std::max(std::abs(reference.v[k]), 1e-12);
    worst = std::max(worst, std::abs(analytic.v[k] - reference.v[k]) / denom);
  }
  return worst;
}

GradientReport sparsity_report(std::span<const GradTensor> grads, const ChainMap& chains,
                               std::size_t k) {
  if (grads.empty()) fail(ErrorKind::InvalidArgument, "need at least one gradient tensor");
  if (k < 1) fail(ErrorKind::InvalidArgument, "top-k count must be >= 1");
  for (const auto& g : grads)
    if (!g.same_shape(grads[0]))
      fail(ErrorKind::ShapeMismatchAcrossSteps, "gradient tensors change shape across steps");
  if (grads[0].n0 != chains.size() || grads[0].n1 != chains.size())
    fail(ErrorKind::ChainLengthMismatch, "gradient tensors do not match the chain map");

  const auto& binder = chains.binder_residues();
  const auto& target = chains.target_residues();
  const std::size_t nb = binder.size(), nt = target.size();

  GradientReport report;
  report.k = k;
  report.steps = grads.size();
  report.per_pair_max = Matrix(nb, nt, 0.0);
  report.topk_frequency.assign(nt, 0);

  std::vector<char> ever(nt, 0);
  std::vector<double> score(nt);
  std::vector<std::size_t> order(nt);
  for (const auto& g : grads) {
    std::fill(score.begin(), score.end(), 0.0);
    for (std::size_t bi = 0; bi < nb; ++bi) {
      const std::size_t p = binder[bi];
      for (std::size_t ti = 0; ti < nt; ++ti) {
        const std::size_t t = target[ti];
        double m = 0.0;
        for (std::size_t b = 0; b < g.n2; ++b) {
          m = std::max(m, std::abs(g.at(p, t, b)));
          m = std::max(m, std::abs(g.at(t, p, b)));
        }
        report.per_pair_max.at(bi, ti) = std::max(report.per_pair_max.at(bi, ti), m);
        score[ti] = std::max(score[ti], m);
      }
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return score[a] > score[b];  // ties keep index order (stable)
    });
    for (std::size_t r = 0; r < std::min(k, nt); ++r) {
      const std::size_t t = order[r];
      if (score[t] == 0.0) break;  // silent residues are not engaged
      ++report.topk_frequency[t];
      ever[t] = 1;
    }
  }

  std::size_t engaged = 0;
  for (char e : ever) engaged += e;
  report.engaged_fraction = double(engaged) / double(nt);

  double global = 0.0;
  for (double x : report.per_pair_max.v) global = std::max(global, x);
  if (global > 0.0)
    for (double& x : report.per_pair_max.v) x /= global;
  return report;
}

}  // namespace ptme

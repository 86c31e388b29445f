#include "ptme/geometry.hpp"

#include <cmath>
#include <string>

namespace ptme {
namespace {

constexpr double kContactCap = 4.0;

void check_geometry_inputs(std::span<const Vec3> coords, const ChainMap& chains,
                           double cutoff, double sharpness) {
  if (cutoff <= 0.0) fail(ErrorKind::NonPositiveCutoff, "contact cutoff must be positive");
  if (sharpness <= 0.0)
    fail(ErrorKind::InvalidArgument, "contact sharpness must be positive");
  if (coords.size() != chains.size())
    fail(ErrorKind::ChainLengthMismatch,
         "coordinates cover " + std::to_string(coords.size()) +
             " residues but the chain map declares " + std::to_string(chains.size()));
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

double Vec3::norm() const { return std::sqrt(x * x + y * y + z * z); }

double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

ContactScores contact_losses(std::span<const Vec3> coords, const ChainMap& chains,
                             double cutoff, double sharpness) {
  check_geometry_inputs(coords, chains, cutoff, sharpness);
  ContactScores scores;
  const auto& binder = chains.binder_residues();
  for (std::size_t i : binder) {
    double ci_inter = 0.0, ci_intra = 0.0;
    for (std::size_t j = 0; j < coords.size(); ++j) {
      if (j == i) continue;
      const double u = (cutoff - distance(coords[i], coords[j])) / sharpness;
      if (chains.cross_chain(i, j)) {
        ci_inter += logistic(u);
      } else if (chains.is_binder(j) &&
                 (i > j ? i - j : j - i) > 1) {
        ci_intra += logistic(u);
      }
    }
    scores.inter += std::min(ci_inter, kContactCap) / kContactCap;
    scores.intra += std::min(ci_intra, kContactCap) / kContactCap;
  }
  scores.inter /= double(binder.size());
  scores.intra /= double(binder.size());
  return scores;
}

ContactScores contact_losses_vjp(std::span<const Vec3> coords, const ChainMap& chains,
                                 double cutoff, double sharpness, double upstream_inter,
                                 double upstream_intra, std::vector<Vec3>& d_coords) {
  check_geometry_inputs(coords, chains, cutoff, sharpness);
  if (d_coords.size() != coords.size())
    fail(ErrorKind::InvalidArgument, "gradient accumulator size mismatch");

  ContactScores scores;
  const auto& binder = chains.binder_residues();
  const double lead = 1.0 / (double(binder.size()) * kContactCap);

  for (std::size_t i : binder) {
    // forward counts first so the cap can gate the backward pass
    double ci_inter = 0.0, ci_intra = 0.0;
    for (std::size_t j = 0; j < coords.size(); ++j) {
      if (j == i) continue;
      const double u = (cutoff - distance(coords[i], coords[j])) / sharpness;
      if (chains.cross_chain(i, j)) ci_inter += logistic(u);
      else if (chains.is_binder(j) && (i > j ? i - j : j - i) > 1) ci_intra += logistic(u);
    }
    scores.inter += std::min(ci_inter, kContactCap) / kContactCap;
    scores.intra += std::min(ci_intra, kContactCap) / kContactCap;

    for (std::size_t j = 0; j < coords.size(); ++j) {
      if (j == i) continue;
      const bool cross = chains.cross_chain(i, j);
      const bool intra = !cross && chains.is_binder(j) && (i > j ? i - j : j - i) > 1;
      if (!cross && !intra) continue;
      if (cross && ci_inter >= kContactCap) continue;
      if (intra && ci_intra >= kContactCap) continue;
      const double upstream = cross ? upstream_inter : upstream_intra;
      if (upstream == 0.0) continue;
      const double d = distance(coords[i], coords[j]);
      if (d < 1e-12) continue;  // coincident points: direction undefined, skip
      const double s = logistic((cutoff - d) / sharpness);
      const double chain_factor = upstream * lead * s * (1.0 - s) * (-1.0 / sharpness) / d;
      const Vec3 diff = coords[i] - coords[j];
      d_coords[i] += diff * chain_factor;
      d_coords[j] += diff * (-chain_factor);
    }
  }
  scores.inter /= double(binder.size());
  scores.intra /= double(binder.size());
  return scores;
}

GyrationRadius radius_of_gyration(std::span<const Vec3> coords) {
  if (coords.empty()) fail(ErrorKind::InvalidArgument, "radius of gyration needs coordinates");
  Vec3 centroid;
  for (const Vec3& p : coords) centroid += p;
  centroid = centroid * (1.0 / double(coords.size()));
  double acc = 0.0;
  for (const Vec3& p : coords) {
    const Vec3 d = p - centroid;
    acc += d.x * d.x + d.y * d.y + d.z * d.z;
  }
  GyrationRadius r;
  r.raw = std::sqrt(acc / double(coords.size()));
  r.scaled = r.raw / (2.38 * std::pow(double(coords.size()), 0.365));
  return r;
}

GyrationRadius radius_of_gyration_vjp(std::span<const Vec3> coords, double upstream,
                                      std::span<Vec3> d_coords) {
  if (d_coords.size() != coords.size())
    fail(ErrorKind::InvalidArgument, "gradient accumulator size mismatch");
  const GyrationRadius r = radius_of_gyration(coords);
  if (r.raw < 1e-12) return r;  // flat at a point; leave gradient zero

  Vec3 centroid;
  for (const Vec3& p : coords) centroid += p;
  centroid = centroid * (1.0 / double(coords.size()));
  const double n = double(coords.size());
  // d(raw)/dp = (p - centroid) / (n * raw); centroid motion cancels exactly
  const double factor = upstream / (2.38 * std::pow(n, 0.365)) / (n * r.raw);
  for (std::size_t i = 0; i < coords.size(); ++i)
    d_coords[i] += (coords[i] - centroid) * factor;
  return r;
}

std::size_t clash_count(std::span<const Vec3> coords, const ChainMap& chains,
                        double threshold) {
  if (threshold <= 0.0) fail(ErrorKind::NonPositiveCutoff, "clash threshold must be positive");
  if (coords.size() != chains.size())
    fail(ErrorKind::ChainLengthMismatch,
         "coordinates cover " + std::to_string(coords.size()) +
             " residues but the chain map declares " + std::to_string(chains.size()));
  std::size_t clashes = 0;
  for (std::size_t i = 0; i < coords.size(); ++i)
    for (std::size_t j = i + 1; j < coords.size(); ++j) {
      if (!chains.cross_chain(i, j) && j - i <= 1) continue;
      if (distance(coords[i], coords[j]) < threshold) ++clashes;
    }
  return clashes;
}

}  // namespace ptme

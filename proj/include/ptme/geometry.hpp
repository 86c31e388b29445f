#pragma once

#include <span>
#include <vector>

#include "ptme/chain_map.hpp"

namespace ptme {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  double norm() const;
};

double distance(const Vec3& a, const Vec3& b);

// Soft contact counts per binder residue, capped at 4 and scaled to [0,1]:
//   c_i = sum_j logistic((cutoff - d_ij) / sharpness)
// inter sums over cross-chain partners, intra over same-chain partners with
// |i - j| > 1 (bonded neighbours excluded); both average over the binder.
struct ContactScores {
  double inter = 0.0;
  double intra = 0.0;
};

ContactScores contact_losses(std::span<const Vec3> coords, const ChainMap& chains,
                             double cutoff, double sharpness);

// Forward pass plus accumulation of upstream * d(score)/d(coords) into
// d_coords. Capped residues contribute zero gradient.
ContactScores contact_losses_vjp(std::span<const Vec3> coords, const ChainMap& chains,
                                 double cutoff, double sharpness, double upstream_inter,
                                 double upstream_intra, std::vector<Vec3>& d_coords);

struct GyrationRadius {
  double raw = 0.0;     // sqrt(mean squared distance to the centroid), Angstroms
  double scaled = 0.0;  // raw / (2.38 * n^0.365), ~1 for globular chains
};

GyrationRadius radius_of_gyration(std::span<const Vec3> coords);

// Accumulates upstream * d(scaled)/d(coords); flat at a single point.
GyrationRadius radius_of_gyration_vjp(std::span<const Vec3> coords, double upstream,
                                      std::span<Vec3> d_coords);

// Unordered residue pairs closer than threshold, bonded neighbours excluded:
// counted when cross-chain or |i - j| > 1 on the same chain.
std::size_t clash_count(std::span<const Vec3> coords, const ChainMap& chains,
                        double threshold = 2.0);

}  // namespace ptme

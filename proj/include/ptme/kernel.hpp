#pragma once

#include <cstddef>
#include <vector>

#include "ptme/errors.hpp"

namespace ptme {

// TM-score distance weighting evaluated on a bin grid:
//   g(d) = 1 / (1 + (d / d0)^2),   d0(n) = 1.24 * (max(n, 19) - 15)^(1/3) - 1.8
// The clamp keeps d0 positive for short complexes.
struct TmKernel {
  std::size_t n_eff = 0;  // residue count after clamping, used for d0
  double d0 = 0.0;
  std::vector<double> bin_centers;  // Angstroms, strictly increasing, >= 0
  std::vector<double> weights;      // g(bin_centers[b]), each in (0, 1]

  std::size_t B() const { return bin_centers.size(); }
};

double compute_d0(std::size_t n);

TmKernel build_kernel(std::size_t n, std::vector<double> bin_centers);

// Default grid: centers 0.25 + 0.5*k Angstroms, k = 0..bins-1.
std::vector<double> default_bin_centers(std::size_t bins = 64);

}  // namespace ptme

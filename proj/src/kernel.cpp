#include "ptme/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ptme {

double compute_d0(std::size_t n) {
  if (n < 1) fail(ErrorKind::InvalidArgument, "residue count must be >= 1");
  const double n_eff = double(std::max<std::size_t>(n, 19));
  return 1.24 * std::cbrt(n_eff - 15.0) - 1.8;
}

TmKernel build_kernel(std::size_t n, std::vector<double> bin_centers) {
  if (bin_centers.empty())
    fail(ErrorKind::InvalidArgument, "kernel needs at least one bin center");
  for (std::size_t b = 0; b < bin_centers.size(); ++b) {
    if (bin_centers[b] < 0.0)
      fail(ErrorKind::NegativeBinCenter,
           "bin center " + std::to_string(b) + " is negative");
    if (b > 0 && bin_centers[b] <= bin_centers[b - 1])
      fail(ErrorKind::NonMonotoneBins,
           "bin centers must be strictly increasing (violated at index " +
               std::to_string(b) + ")");
  }

  TmKernel kernel;
  kernel.n_eff = std::max<std::size_t>(n, 19);
  kernel.d0 = compute_d0(n);
  kernel.weights.reserve(bin_centers.size());
  for (double d : bin_centers) {
    const double r = d / kernel.d0;
    kernel.weights.push_back(1.0 / (1.0 + r * r));
  }
  kernel.bin_centers = std::move(bin_centers);
  return kernel;
}

std::vector<double> default_bin_centers(std::size_t bins) {
  if (bins < 1) fail(ErrorKind::InvalidArgument, "bin count must be >= 1");
  std::vector<double> centers(bins);
  for (std::size_t b = 0; b < bins; ++b) centers[b] = 0.25 + 0.5 * double(b);
  return centers;
}

}  // namespace ptme

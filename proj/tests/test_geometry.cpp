#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracle.hpp"
#include "ptme/errors.hpp"
#include "ptme/geometry.hpp"

using namespace ptme;
using doctest::Approx;

namespace {

// Independent helix formula matching the toy predictor's backbone layout.
Vec3 helix(std::size_t i) {
  const double angle = static_cast<double>(i) * 100.0 * M_PI / 180.0;
  return {2.3 * std::cos(angle), 2.3 * std::sin(angle), 1.5 * static_cast<double>(i)};
}

}  // namespace

TEST_CASE("contacts vanish for well-separated chains") {
  ChainMap chains = oracle::two_chains(3, 3);
  std::vector<Vec3> coords;
  for (std::size_t i = 0; i < 3; ++i) coords.push_back({static_cast<double>(i) * 4.0, 0, 0});
  for (std::size_t i = 0; i < 3; ++i)
    coords.push_back({static_cast<double>(i) * 4.0, 0, 1000.0});  // target far away

  ContactScores s = contact_losses(coords, chains, 8.0, 1.0);
  CHECK(s.inter < 1e-4);
  // binder residues 0 and 2 sit 8 A apart: exactly at the cutoff the logistic
  // reads 1/2, so intra is genuinely nonzero here
  CHECK(s.intra > 0.0);

  // push the binder apart too and both terms die
  std::vector<Vec3> sparse;
  for (std::size_t i = 0; i < 3; ++i) sparse.push_back({static_cast<double>(i) * 40.0, 0, 0});
  for (std::size_t i = 0; i < 3; ++i)
    sparse.push_back({static_cast<double>(i) * 40.0, 0, 1000.0});
  ContactScores s2 = contact_losses(sparse, chains, 8.0, 1.0);
  CHECK(s2.inter < 1e-4);
  CHECK(s2.intra < 1e-4);
}

TEST_CASE("contact saturation: coincident partners cap a residue at 1") {
  // binder residue 0 sits on top of five target residues: c_0 = 5*logistic(8)
  // exceeds the cap of 4, so its contribution is exactly min(c_0, 4)/4 = 1.
  ChainMap chains = oracle::two_chains(2, 5);
  std::vector<Vec3> coords{{0, 0, 0},  {500, 0, 0}, {0, 0, 0}, {0, 0, 0},
                           {0, 0, 0}, {0, 0, 0},  {0, 0, 0}};
  ContactScores s = contact_losses(coords, chains, 8.0, 1.0);
  // residue 1 is ~500 A from everything and contributes ~0
  CHECK(s.inter == Approx(0.5).epsilon(1e-9));
}

TEST_CASE("contact gradients match finite differences") {
  ChainMap chains = oracle::two_chains(3, 2);
  std::vector<Vec3> coords{{0, 0, 0},   {3.1, 0.4, 0}, {5.9, -0.2, 1.2},
                           {2.0, 4.1, 0.5}, {6.5, 3.3, -0.9}};
  const double cutoff = 8.0, sharpness = 1.0;
  const double wi = 0.7, wc = -0.45;  // arbitrary upstream weights

  std::vector<Vec3> analytic(coords.size());
  contact_losses_vjp(coords, chains, cutoff, sharpness, wi, wc, analytic);

  auto scalar = [&](const std::vector<Vec3>& c) {
    ContactScores s = contact_losses(c, chains, cutoff, sharpness);
    return wi * s.inter + wc * s.intra;
  };

  const double eps = 1e-6;
  double max_rel = 0.0;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    for (int axis = 0; axis < 3; ++axis) {
      std::vector<Vec3> up = coords, dn = coords;
      double* pu = axis == 0 ? &up[i].x : axis == 1 ? &up[i].y : &up[i].z;
      double* pd = axis == 0 ? &dn[i].x : axis == 1 ? &dn[i].y : &dn[i].z;
      *pu += eps;
      *pd -= eps;
      const double fd = (scalar(up) - scalar(dn)) / (2.0 * eps);
      const double an = axis == 0 ? analytic[i].x : axis == 1 ? analytic[i].y : analytic[i].z;
      max_rel = std::max(max_rel, std::abs(an - fd) / std::max(std::abs(fd), 1e-12));
    }
  }
  CHECK(max_rel < 1e-6);
}

TEST_CASE("contact argument validation") {
  ChainMap chains = oracle::two_chains(1, 1);
  std::vector<Vec3> coords{{0, 0, 0}, {1, 1, 1}};
  try {
    contact_losses(coords, chains, 0.0, 1.0);
    FAIL("expected NonPositiveCutoff");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonPositiveCutoff);
  }
  try {
    contact_losses(coords, chains, 8.0, 0.0);
    FAIL("expected InvalidArgument");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidArgument);
  }
  std::vector<Vec3> short_coords{{0, 0, 0}};
  try {
    contact_losses(short_coords, chains, 8.0, 1.0);
    FAIL("expected ChainLengthMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ChainLengthMismatch);
  }
}

TEST_CASE("radius of gyration closed forms") {
  std::vector<Vec3> one{{3, -1, 2}};
  CHECK(radius_of_gyration(one).raw == 0.0);
  CHECK(radius_of_gyration(one).scaled == 0.0);

  std::vector<Vec3> two{{0, 0, 0}, {0, 0, 5.0}};
  CHECK(radius_of_gyration(two).raw == Approx(2.5).epsilon(1e-12));

  // unit square corners: mean squared distance to centroid = 1/2
  std::vector<Vec3> square{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
  GyrationRadius g = radius_of_gyration(square);
  CHECK(g.raw == Approx(0.70710678118654752440).epsilon(1e-12));
  CHECK(g.scaled ==
        Approx(g.raw / (2.38 * std::pow(4.0, 0.365))).epsilon(1e-12));
}

TEST_CASE("radius-of-gyration gradient matches finite differences") {
  std::vector<Vec3> coords{{0.0, 0.1, -0.3}, {2.5, 1.0, 0.7}, {-1.2, 3.3, 2.1},
                           {0.4, -2.2, 1.5}};
  const double upstream = 1.3;
  std::vector<Vec3> analytic(coords.size());
  radius_of_gyration_vjp(coords, upstream, analytic);

  auto scalar = [&](const std::vector<Vec3>& c) {
    return upstream * radius_of_gyration(c).scaled;
  };
  const double eps = 1e-6;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    for (int axis = 0; axis < 3; ++axis) {
      std::vector<Vec3> up = coords, dn = coords;
      double* pu = axis == 0 ? &up[i].x : axis == 1 ? &up[i].y : &up[i].z;
      double* pd = axis == 0 ? &dn[i].x : axis == 1 ? &dn[i].y : &dn[i].z;
      *pu += eps;
      *pd -= eps;
      const double fd = (scalar(up) - scalar(dn)) / (2.0 * eps);
      const double an = axis == 0 ? analytic[i].x : axis == 1 ? analytic[i].y : analytic[i].z;
      CHECK(std::abs(an - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("clash counting") {
  // an ideal helix never self-intersects
  ChainMap one_chain = oracle::two_chains(15, 15);
  std::vector<Vec3> coil;
  for (std::size_t i = 0; i < 30; ++i) coil.push_back(helix(i));
  CHECK(clash_count(coil, one_chain, 2.0) == 0);

  // two coincident residues on different chains count once
  ChainMap tiny = oracle::two_chains(1, 1);
  std::vector<Vec3> co{{0, 0, 0}, {0, 0, 0}};
  CHECK(clash_count(co, tiny, 2.0) == 1);

  // bonded neighbours are exempt, |i-j| > 1 is not
  ChainMap chain3 = oracle::two_chains(3, 1);
  std::vector<Vec3> tight{{0, 0, 0}, {0.5, 0, 0}, {1.0, 0, 0}, {100, 100, 100}};
  // pairs (0,1), (1,2) bonded; (0,2) at distance 1.0 clashes
  CHECK(clash_count(tight, chain3, 2.0) == 1);
}

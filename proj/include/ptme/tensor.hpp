#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "ptme/errors.hpp"

namespace ptme {

// Dense row-major (i, j, b) array of doubles.
struct Tensor3 {
  std::size_t n0 = 0, n1 = 0, n2 = 0;
  std::vector<double> v;

  Tensor3() = default;
  Tensor3(std::size_t a, std::size_t b, std::size_t c, double fill = 0.0)
      : n0(a), n1(b), n2(c), v(a * b * c, fill) {}

  double& at(std::size_t i, std::size_t j, std::size_t k) {
    return v[(i * n1 + j) * n2 + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return v[(i * n1 + j) * n2 + k];
  }
  std::span<double> row(std::size_t i, std::size_t j) {
    return {v.data() + (i * n1 + j) * n2, n2};
  }
  std::span<const double> row(std::size_t i, std::size_t j) const {
    return {v.data() + (i * n1 + j) * n2, n2};
  }
  std::size_t size() const { return v.size(); }
  bool same_shape(const Tensor3& o) const {
    return n0 == o.n0 && n1 == o.n1 && n2 == o.n2;
  }
};

struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> v;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), v(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {v.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const {
    return {v.data() + r * cols, cols};
  }
  bool same_shape(const Matrix& o) const {
    return rows == o.rows && cols == o.cols;
  }
};

// L x L x B stack of pairwise aligned-error bin logits. Construction
// guarantees: square leading dims, L >= 2, B >= 1, every entry finite.
class PaeLogits {
 public:
  static PaeLogits from_tensor(Tensor3 t);

  std::size_t L() const { return t_.n0; }
  std::size_t B() const { return t_.n2; }
  double at(std::size_t i, std::size_t j, std::size_t b) const {
    return t_.at(i, j, b);
  }
  std::span<const double> row(std::size_t i, std::size_t j) const {
    return t_.row(i, j);
  }
  const Tensor3& tensor() const { return t_; }

  // Direct mutable access for in-place perturbation (finite-difference
  // probes); the caller is responsible for keeping entries finite.
  Tensor3& tensor_unchecked() { return t_; }

 private:
  explicit PaeLogits(Tensor3 t) : t_(std::move(t)) {}
  Tensor3 t_;
};

}  // namespace ptme

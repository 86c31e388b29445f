#pragma once

#include <filesystem>
#include <vector>

#include "ptme/tensor.hpp"

namespace ptme {

// In-memory NPY payload, widened to float64. Rank 1, 2, or 3.
struct NpyArray {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  std::size_t ndim() const { return shape.size(); }
  std::size_t count() const;
};

// Reads a version-1.0 NPY file holding a little-endian float32/float64 array
// in C order. float32 payloads are widened to float64. Any malformed input
// raises a single named Error: BadMagic, BadHeader, UnsupportedDtype,
// FortranOrder, TruncatedPayload, or NonFinite (which names the offending
// multi-index).
NpyArray read_npy(const std::filesystem::path& path);

// Writes a version-1.0 float64 C-order NPY file. Reading it back yields a
// byte-identical payload.
void write_npy(const std::filesystem::path& path, const NpyArray& array);

// Shape-checked views of a loaded array.
PaeLogits pae_from_npy(const NpyArray& array);          // 3-D, square leading dims
Matrix matrix_from_npy(const NpyArray& array);          // 2-D
std::vector<double> vector_from_npy(const NpyArray& array);  // 1-D

}  // namespace ptme

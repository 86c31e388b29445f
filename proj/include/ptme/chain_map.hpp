#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ptme/errors.hpp"

namespace ptme {

// Residue -> chain assignment for a complex, with one chain marked as the
// binder and at least one as a target. Residues are numbered contiguously in
// declared chain order. The interface is the set of ordered cross-chain
// pairs (i, j), chain(i) != chain(j); both directions count separately.
class ChainMap {
 public:
  // chains: (label, length) in declared order. Validates: unique labels,
  // every length >= 1, binder and targets declared, targets non-empty,
  // binder not among targets.
  static ChainMap build(const std::vector<std::pair<std::string, std::size_t>>& chains,
                        const std::string& binder,
                        const std::vector<std::string>& targets);

  std::size_t size() const { return chain_of_.size(); }  // total residues L
  std::size_t chain_count() const { return labels_.size(); }

  std::size_t chain_index_of(std::size_t residue) const;
  const std::string& label_of(std::size_t residue) const;
  const std::vector<std::string>& labels() const { return labels_; }

  bool cross_chain(std::size_t i, std::size_t j) const {
    return chain_of_[i] != chain_of_[j];
  }
  bool is_binder(std::size_t residue) const {
    return chain_of_[residue] == binder_;
  }
  bool is_target(std::size_t residue) const { return target_flag_[chain_of_[residue]]; }

  std::size_t binder_size() const { return binder_residues_.size(); }
  std::size_t target_size() const { return target_residues_.size(); }
  const std::vector<std::size_t>& binder_residues() const { return binder_residues_; }
  const std::vector<std::size_t>& target_residues() const { return target_residues_; }

  // |interface| = L^2 - sum_c L_c^2
  std::size_t interface_size() const { return interface_size_; }

 private:
  ChainMap() = default;

  std::vector<std::string> labels_;
  std::vector<std::size_t> chain_of_;  // residue -> chain index
  std::vector<bool> target_flag_;      // per chain
  std::size_t binder_ = 0;
  std::vector<std::size_t> binder_residues_;
  std::vector<std::size_t> target_residues_;
  std::size_t interface_size_ = 0;
};

// Parses a JSON document {"chains": [{"label":..., "length":...}, ...],
// "binder": ..., "targets": [...]} and checks the declared total length
// against expected_length (LengthMismatch otherwise).
ChainMap read_chain_map(const std::filesystem::path& path, std::size_t expected_length);

}  // namespace ptme

#include "ptme/chain_map.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

namespace ptme {

ChainMap ChainMap::build(const std::vector<std::pair<std::string, std::size_t>>& chains,
                         const std::string& binder,
                         const std::vector<std::string>& targets) {
  ChainMap map;
  std::set<std::string> seen;
  for (const auto& [label, length] : chains) {
    if (!seen.insert(label).second)
      fail(ErrorKind::DuplicateChainLabel, "chain label '" + label + "' declared twice");
    if (length == 0)
      fail(ErrorKind::EmptyChain, "chain '" + label + "' has zero residues");
    map.labels_.push_back(label);
    for (std::size_t k = 0; k < length; ++k)
      map.chain_of_.push_back(map.labels_.size() - 1);
  }

  auto find_chain = [&](const std::string& label) {
    const auto it = std::find(map.labels_.begin(), map.labels_.end(), label);
    return it == map.labels_.end() ? map.labels_.size()
                                   : std::size_t(it - map.labels_.begin());
  };

  map.binder_ = find_chain(binder);
  if (map.binder_ == map.labels_.size())
    fail(ErrorKind::UnknownBinderLabel, "binder '" + binder + "' is not a declared chain");

  if (targets.empty())
    fail(ErrorKind::EmptyTargets, "at least one target chain is required");
  map.target_flag_.assign(map.labels_.size(), false);
  for (const auto& label : targets) {
    const std::size_t idx = find_chain(label);
    if (idx == map.labels_.size())
      fail(ErrorKind::UnknownTargetLabel, "target '" + label + "' is not a declared chain");
    if (idx == map.binder_)
      fail(ErrorKind::BinderInTargets, "binder '" + label + "' cannot also be a target");
    map.target_flag_[idx] = true;
  }

  for (std::size_t r = 0; r < map.chain_of_.size(); ++r) {
    if (map.chain_of_[r] == map.binder_) map.binder_residues_.push_back(r);
    if (map.target_flag_[map.chain_of_[r]]) map.target_residues_.push_back(r);
  }

  const std::size_t L = map.chain_of_.size();
  std::size_t same = 0;
  for (std::size_t c = 0; c < map.labels_.size(); ++c) {
    const std::size_t len = std::size_t(
        std::count(map.chain_of_.begin(), map.chain_of_.end(), c));
    same += len * len;
  }
  map.interface_size_ = L * L - same;
  if (map.interface_size_ == 0)
    fail(ErrorKind::Internal, "interface is empty despite multiple chains");
  return map;
}

std::size_t ChainMap::chain_index_of(std::size_t residue) const {
  if (residue >= chain_of_.size())
    fail(ErrorKind::IndexOutOfRange, "residue index " + std::to_string(residue) +
                                         " out of range (L=" + std::to_string(size()) + ")");
  return chain_of_[residue];
}

const std::string& ChainMap::label_of(std::size_t residue) const {
  return labels_[chain_index_of(residue)];
}

ChainMap read_chain_map(const std::filesystem::path& path, std::size_t expected_length) {
  std::ifstream file(path);
  if (!file) fail(ErrorKind::IoFailure, "cannot open " + path.string());
  nlohmann::json doc = nlohmann::json::parse(file, nullptr, false);
  if (doc.is_discarded())
    fail(ErrorKind::BadDocument, path.string() + " is not valid JSON");
  if (!doc.is_object() || !doc.contains("chains") || !doc.contains("binder") ||
      !doc.contains("targets"))
    fail(ErrorKind::BadDocument,
         path.string() + " needs 'chains', 'binder', and 'targets' keys");
  if (!doc["chains"].is_array() || !doc["binder"].is_string() || !doc["targets"].is_array())
    fail(ErrorKind::BadDocument, path.string() + " has mistyped chain fields");

  std::vector<std::pair<std::string, std::size_t>> chains;
  for (const auto& entry : doc["chains"]) {
    if (!entry.is_object() || !entry.contains("label") || !entry.contains("length") ||
        !entry["label"].is_string() || !entry["length"].is_number_unsigned())
      fail(ErrorKind::BadDocument,
           path.string() + ": each chain needs a string 'label' and unsigned 'length'");
    chains.emplace_back(entry["label"].get<std::string>(),
                        entry["length"].get<std::size_t>());
  }
  std::vector<std::string> targets;
  for (const auto& t : doc["targets"]) {
    if (!t.is_string())
      fail(ErrorKind::BadDocument, path.string() + ": targets must be strings");
    targets.push_back(t.get<std::string>());
  }

  std::size_t declared = 0;
  for (const auto& [label, length] : chains) declared += length;
  if (declared != expected_length)
    fail(ErrorKind::LengthMismatch,
         path.string() + " declares " + std::to_string(declared) +
             " residues but the tensor has " + std::to_string(expected_length));

  return ChainMap::build(chains, doc["binder"].get<std::string>(), targets);
}

}  // namespace ptme

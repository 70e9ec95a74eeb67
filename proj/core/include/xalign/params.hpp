#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "xalign/tape.hpp"

namespace xalign {

/// Named parameter tensors in a fixed registration order. The order is the
/// contract: optimizer state, checkpoints and gradient reports all walk the
/// store in this order.
class ParamStore {
 public:
  Matrix& add(const std::string& name, Matrix m);
  Matrix& at(const std::string& name);
  const Matrix& at(const std::string& name) const;
  bool contains(const std::string& name) const;

  size_t size() const { return items_.size(); }
  const std::vector<std::pair<std::string, Matrix>>& items() const { return items_; }
  std::vector<std::pair<std::string, Matrix>>& items() { return items_; }

 private:
  std::vector<std::pair<std::string, Matrix>> items_;
  std::unordered_map<std::string, size_t> index_;
};

/// Tape leaves for every parameter in a store, addressable by name.
struct ParamNodes {
  std::unordered_map<std::string, NodeId> ids;

  NodeId at(const std::string& name) const;
};

ParamNodes register_params(Tape& tape, const ParamStore& store);

}  // namespace xalign

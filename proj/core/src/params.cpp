#include "xalign/params.hpp"

#include <stdexcept>

namespace xalign {

Matrix& ParamStore::add(const std::string& name, Matrix m) {
  if (index_.count(name)) throw std::invalid_argument("ParamStore: duplicate parameter " + name);
  index_[name] = items_.size();
  items_.emplace_back(name, std::move(m));
  return items_.back().second;
}

Matrix& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("ParamStore: unknown parameter " + name);
  return items_[it->second].second;
}

const Matrix& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("ParamStore: unknown parameter " + name);
  return items_[it->second].second;
}

bool ParamStore::contains(const std::string& name) const { return index_.count(name) > 0; }

NodeId ParamNodes::at(const std::string& name) const {
  auto it = ids.find(name);
  if (it == ids.end()) throw std::invalid_argument("ParamNodes: unknown parameter " + name);
  return it->second;
}

ParamNodes register_params(Tape& tape, const ParamStore& store) {
  ParamNodes nodes;
  for (const auto& [name, m] : store.items()) {
    nodes.ids[name] = tape.param(m);
  }
  return nodes;
}

}  // namespace xalign

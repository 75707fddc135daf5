#include "racer/params.hpp"

#include <stdexcept>

namespace racer::nn {

void ParamSet::add(std::string name, Matrix tensor) {
  if (has(name)) throw std::invalid_argument("param set: duplicate name " + name);
  entries_.push_back({std::move(name), std::move(tensor)});
}

bool ParamSet::has(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return true;
  }
  return false;
}

Matrix& ParamSet::at(std::string_view name) {
  for (auto& e : entries_) {
    if (e.name == name) return e.tensor;
  }
  throw std::out_of_range("param set: no entry " + std::string(name));
}

const Matrix& ParamSet::at(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.tensor;
  }
  throw std::out_of_range("param set: no entry " + std::string(name));
}

bool ParamSet::all_finite() const {
  for (const auto& e : entries_) {
    if (!e.tensor.all_finite()) return false;
  }
  return true;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  for (const auto& e : entries_) {
    out.add(e.name, Matrix::zeros(e.tensor.rows, e.tensor.cols));
  }
  return out;
}

}  // namespace racer::nn

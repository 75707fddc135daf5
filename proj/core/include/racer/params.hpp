#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "racer/matrix.hpp"

namespace racer::nn {

/// Named collection of tensors. Shapes are fixed at add() time; entry order
/// is insertion order and is the canonical iteration order for optimizers
/// and checkpoints.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Matrix tensor;
  };

  void add(std::string name, Matrix tensor);
  bool has(std::string_view name) const;
  Matrix& at(std::string_view name);
  const Matrix& at(std::string_view name) const;

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool all_finite() const;

  /// Same names and shapes, all-zero tensors.
  ParamSet zeros_like() const;

 private:
  std::vector<Entry> entries_;
};

}  // namespace racer::nn

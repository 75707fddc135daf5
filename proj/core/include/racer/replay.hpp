#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "racer/batch.hpp"
#include "racer/rng.hpp"

namespace racer::train {

/// Fixed-capacity ring buffer with FIFO eviction and uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t inserted() const { return inserted_; }

  const Transition& at(std::size_t i) const { return items_.at(i); }
  const Transition& sample(Rng& rng) const;

  /// Uniform with replacement.
  TransitionBatch sample_batch(int n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t write_ = 0;
  std::uint64_t inserted_ = 0;
  std::vector<Transition> items_;
};

}  // namespace racer::train

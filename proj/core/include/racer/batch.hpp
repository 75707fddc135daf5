#pragma once

#include <cstdint>
#include <vector>

#include "racer/matrix.hpp"

namespace racer::train {

/// One replay record. a_pre is the action before adaptive limits (the
/// out-of-distribution sample source); a_applied is what the environment saw.
struct Transition {
  std::vector<double> state;
  std::vector<double> a_pre;
  std::vector<double> a_applied;
  double reward = 0.0;
  std::vector<double> next_state;
  bool failed = false;
  bool done = false;
};

/// Column-major view of a sampled minibatch (matrices are [batch, dim]).
struct TransitionBatch {
  nn::Matrix states;
  nn::Matrix actions_applied;
  nn::Matrix actions_pre;
  nn::Matrix next_states;
  std::vector<double> rewards;
  std::vector<std::uint8_t> done;
  std::vector<std::uint8_t> failed;

  int size() const { return states.rows; }
};

}  // namespace racer::train

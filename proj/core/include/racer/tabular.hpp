#pragma once

#include <vector>

#include "racer/atom_grid.hpp"
#include "racer/categorical.hpp"

namespace racer::env {

/// Small explicit MDP used as an exact oracle for return distributions.
struct TabularMDP {
  struct Outcome {
    int next = 0;
    double prob = 0.0;
    double reward = 0.0;
  };

  int n_states = 0;
  int n_actions = 0;
  // outcomes[s][a] lists (next, prob, reward); probs per (s,a) sum to 1.
  std::vector<std::vector<std::vector<Outcome>>> transitions;
  std::vector<bool> terminal;  // absorbing; zero return from here on
  std::vector<bool> failure;   // subset of terminal

  void validate() const;
  double max_abs_reward() const;
};

using PolicyTable = std::vector<std::vector<double>>;  // policy[s][a]

/// Exact return distribution of (s, a) under the tabular policy, by
/// enumerating all trajectories up to `horizon` (with memoized suffix
/// distributions) and folding each return onto the nearest grid atom.
/// Throws when the truncated tail gamma^h * r_max / (1 - gamma) exceeds half
/// an atom width; the message names the required horizon.
risk::CategoricalDistribution tabular_return_distribution(
    const TabularMDP& mdp, const PolicyTable& policy, int state, int action,
    double gamma, int horizon, const critic::AtomGrid& grid);

}  // namespace racer::env

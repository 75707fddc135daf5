#pragma once

// 3-state risky-bandit MDP shared by the tabular-oracle tests and the
// acceptance suite. State 0 chooses between a safe exit (reward 0.5,
// terminal) and a risky continue (reward 1.0 with p=0.7, failure with
// p=0.3). Rewards are dyadic so returns under gamma=0.5 land on a
// power-of-two grid.

#include "racer/rng.hpp"
#include "racer/tabular.hpp"

namespace racer::testing {

inline env::TabularMDP risky_bandit() {
  env::TabularMDP m;
  m.n_states = 3;
  m.n_actions = 2;
  m.transitions.assign(3, std::vector<std::vector<env::TabularMDP::Outcome>>(2));
  // state 0, action 0 (safe): banked half reward, then stop.
  m.transitions[0][0] = {{1, 1.0, 0.5}};
  // state 0, action 1 (risky): usually pays out and continues, sometimes fails.
  m.transitions[0][1] = {{0, 0.7, 1.0}, {2, 0.3, 0.0}};
  m.terminal = {false, true, true};
  m.failure = {false, false, true};
  return m;
}

inline env::PolicyTable bandit_policy(double p_risky) {
  return {{1.0 - p_risky, p_risky}, {1.0, 0.0}, {1.0, 0.0}};
}

/// Monte Carlo rollout oracle for the bandit's discounted return from (s, a).
inline double rollout_return(const env::TabularMDP& m, const env::PolicyTable& pi,
                             int s, int a, double gamma, int max_steps, Rng& rng) {
  double ret = 0.0;
  double disc = 1.0;
  int state = s;
  int action = a;
  for (int t = 0; t < max_steps && !m.terminal[state]; ++t) {
    const auto& outs = m.transitions[state][action];
    double u = rng.uniform();
    const env::TabularMDP::Outcome* pick = &outs.back();
    for (const auto& o : outs) {
      if (u < o.prob) {
        pick = &o;
        break;
      }
      u -= o.prob;
    }
    ret += disc * pick->reward;
    disc *= gamma;
    state = pick->next;
    if (m.terminal[state]) break;
    // next action from the policy
    double v = rng.uniform();
    action = 0;
    for (std::size_t k = 0; k < pi[state].size(); ++k) {
      if (v < pi[state][k]) {
        action = static_cast<int>(k);
        break;
      }
      v -= pi[state][k];
    }
  }
  return ret;
}

}  // namespace racer::testing

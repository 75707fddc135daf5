#include "racer/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace racer::env {

namespace {

// Sparse return distribution: sorted (value, prob) pairs.
using Support = std::vector<std::pair<double, double>>;

Support coalesce(Support s) {
  std::sort(s.begin(), s.end());
  Support out;
  for (const auto& [v, p] : s) {
    if (!out.empty() && v - out.back().first <= 1e-12) {
      // Merge, keeping the mass-weighted mean.
      auto& [ov, op] = out.back();
      ov = (ov * op + v * p) / (op + p);
      op += p;
    } else {
      out.emplace_back(v, p);
    }
  }
  if (out.size() > 500000) {
    throw std::runtime_error("tabular oracle: return support exploded");
  }
  return out;
}

struct Enumerator {
  const TabularMDP& mdp;
  const PolicyTable& policy;
  double gamma;
  // dist[depth][state], filled lazily.
  std::map<std::pair<int, int>, Support> memo;
  bool truncated = false;  // some trajectory was cut at depth 0

  const Support& state_dist(int s, int depth) {
    const auto key = std::make_pair(s, depth);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;

    Support out;
    if (depth == 0 || mdp.terminal[s]) {
      if (depth == 0 && !mdp.terminal[s]) truncated = true;
      out = {{0.0, 1.0}};
    } else {
      for (int a = 0; a < mdp.n_actions; ++a) {
        const double pa = policy[s][a];
        if (pa <= 0.0) continue;
        for (const auto& o : mdp.transitions[s][a]) {
          if (o.prob <= 0.0) continue;
          const Support& next = state_dist(o.next, depth - 1);
          for (const auto& [v, p] : next) {
            out.emplace_back(o.reward + gamma * v, pa * o.prob * p);
          }
        }
      }
      out = coalesce(std::move(out));
    }
    return memo.emplace(key, std::move(out)).first->second;
  }

  Support action_dist(int s, int a, int depth) {
    Support out;
    if (mdp.terminal[s]) return {{0.0, 1.0}};
    for (const auto& o : mdp.transitions[s][a]) {
      if (o.prob <= 0.0) continue;
      const Support& next = state_dist(o.next, depth - 1);
      for (const auto& [v, p] : next) {
        out.emplace_back(o.reward + gamma * v, o.prob * p);
      }
    }
    return coalesce(std::move(out));
  }
};

}  // namespace

void TabularMDP::validate() const {
  if (n_states <= 0 || n_actions <= 0 ||
      static_cast<int>(transitions.size()) != n_states ||
      static_cast<int>(terminal.size()) != n_states ||
      static_cast<int>(failure.size()) != n_states) {
    throw std::invalid_argument("tabular mdp: inconsistent sizes");
  }
  for (int s = 0; s < n_states; ++s) {
    if (static_cast<int>(transitions[s].size()) != n_actions) {
      throw std::invalid_argument("tabular mdp: action row missing");
    }
    if (failure[s] && !terminal[s]) {
      throw std::invalid_argument("tabular mdp: failure state must be terminal");
    }
    if (terminal[s]) continue;
    for (int a = 0; a < n_actions; ++a) {
      double total = 0.0;
      for (const auto& o : transitions[s][a]) {
        if (o.next < 0 || o.next >= n_states) {
          throw std::invalid_argument("tabular mdp: next state out of range");
        }
        total += o.prob;
      }
      if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("tabular mdp: transition row does not sum to 1");
      }
    }
  }
}

double TabularMDP::max_abs_reward() const {
  double r = 0.0;
  for (const auto& rows : transitions) {
    for (const auto& outs : rows) {
      for (const auto& o : outs) r = std::max(r, std::abs(o.reward));
    }
  }
  return r;
}

risk::CategoricalDistribution tabular_return_distribution(
    const TabularMDP& mdp, const PolicyTable& policy, int state, int action,
    double gamma, int horizon, const critic::AtomGrid& grid) {
  mdp.validate();
  if (state < 0 || state >= mdp.n_states || action < 0 || action >= mdp.n_actions) {
    throw std::invalid_argument("tabular oracle: state/action out of range");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("tabular oracle: gamma must be in [0,1)");
  }
  if (static_cast<int>(policy.size()) != mdp.n_states) {
    throw std::invalid_argument("tabular oracle: policy table size mismatch");
  }

  Enumerator e{mdp, policy, gamma, {}};
  const Support support = e.action_dist(state, action, horizon);

  // When some trajectory was cut at the horizon, its unseen tail is bounded
  // by gamma^h * r_max / (1 - gamma); that must fit inside half an atom for
  // the nearest-atom fold to be sound.
  const double r_max = mdp.max_abs_reward();
  const double half_atom = 0.5 * grid.spacing();
  if (e.truncated && r_max > 0.0 && gamma > 0.0) {
    const double tail = std::pow(gamma, horizon) * r_max / (1.0 - gamma);
    if (tail > half_atom) {
      const int required = static_cast<int>(std::ceil(
          std::log(half_atom * (1.0 - gamma) / r_max) / std::log(gamma)));
      throw std::invalid_argument(
          "tabular oracle: horizon too small for grid precision; need >= " +
          std::to_string(required));
    }
  }

  std::vector<double> probs(grid.n_atoms, 0.0);
  for (const auto& [v, p] : support) {
    const double b = (std::clamp(v, grid.v_min, grid.v_max) - grid.v_min) / grid.spacing();
    const int idx = static_cast<int>(std::lround(b));
    probs[std::clamp(idx, 0, grid.n_atoms - 1)] += p;
  }
  return grid.with_probs(std::move(probs));
}

}  // namespace racer::env

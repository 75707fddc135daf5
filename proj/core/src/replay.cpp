#include "racer/replay.hpp"

#include <stdexcept>

namespace racer::train {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay buffer: zero capacity");
  items_.reserve(capacity);
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[write_] = std::move(t);
  }
  write_ = (write_ + 1) % capacity_;
  ++inserted_;
}

const Transition& ReplayBuffer::sample(Rng& rng) const {
  if (items_.empty()) throw std::logic_error("replay buffer: empty");
  return items_[rng.below(items_.size())];
}

TransitionBatch ReplayBuffer::sample_batch(int n, Rng& rng) const {
  if (items_.empty()) throw std::logic_error("replay buffer: empty");
  const auto& first = items_.front();
  const int obs_dim = static_cast<int>(first.state.size());
  const int act_dim = static_cast<int>(first.a_applied.size());

  TransitionBatch b;
  b.states = nn::Matrix(n, obs_dim);
  b.next_states = nn::Matrix(n, obs_dim);
  b.actions_applied = nn::Matrix(n, act_dim);
  b.actions_pre = nn::Matrix(n, act_dim);
  b.rewards.resize(n);
  b.done.resize(n);
  b.failed.resize(n);
  for (int i = 0; i < n; ++i) {
    const Transition& t = items_[rng.below(items_.size())];
    for (int j = 0; j < obs_dim; ++j) {
      b.states(i, j) = t.state[j];
      b.next_states(i, j) = t.next_state[j];
    }
    for (int j = 0; j < act_dim; ++j) {
      b.actions_applied(i, j) = t.a_applied[j];
      b.actions_pre(i, j) = t.a_pre[j];
    }
    b.rewards[i] = t.reward;
    b.done[i] = t.done ? 1 : 0;
    b.failed[i] = t.failed ? 1 : 0;
  }
  return b;
}

}  // namespace racer::train

#pragma once

#include <fstream>
#include <string>

namespace racer::train {

struct MetricsRow {
  long step = 0;
  long episode = 0;
  long cum_failures = 0;
  long cum_failures_fast = 0;  // failures above the fast-speed threshold
  double avg_speed = 0.0;      // windowed mean speed-made-good
  double v_minus = 0.0;
  double v_plus = 0.0;
  double cvar_alpha_mean = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double limit_loss = 0.0;
};

/// Append-only JSONL with a fixed key order and %.17g doubles, so identical
/// runs produce byte-identical files. I/O failures throw immediately.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path);
  void write(const MetricsRow& row);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
};

std::string format_metrics_row(const MetricsRow& row);

}  // namespace racer::train

#include "racer/metrics.hpp"

#include <cstdio>
#include <stdexcept>

namespace racer::train {

MetricsWriter::MetricsWriter(const std::string& path)
    : path_(path), out_(path, std::ios::trunc) {
  if (!out_) throw std::runtime_error("metrics: cannot open " + path);
}

std::string format_metrics_row(const MetricsRow& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "{\"step\":%ld,\"episode\":%ld,\"cum_failures\":%ld,"
                "\"cum_failures_fast\":%ld,\"avg_speed\":%.17g,"
                "\"v_minus\":%.17g,\"v_plus\":%.17g,"
                "\"cvar_alpha_mean\":%.17g,\"critic_loss\":%.17g,"
                "\"actor_loss\":%.17g,\"limit_loss\":%.17g}",
                r.step, r.episode, r.cum_failures, r.cum_failures_fast, r.avg_speed,
                r.v_minus, r.v_plus, r.cvar_alpha_mean, r.critic_loss, r.actor_loss,
                r.limit_loss);
  return std::string(buf);
}

void MetricsWriter::write(const MetricsRow& row) {
  out_ << format_metrics_row(row) << '\n';
  out_.flush();
  if (!out_) throw std::runtime_error("metrics: write failed for " + path_);
}

}  // namespace racer::train

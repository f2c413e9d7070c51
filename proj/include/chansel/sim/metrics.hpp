#pragma once

#include <algorithm>
#include <cstddef>
#include <iomanip>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

namespace chansel::sim {

struct EpisodeMetrics {
  int episode = 0;
  std::vector<int> successes;  // per agent, out of T
  std::vector<double> fsr;     // per agent
  double mean_fsr = 0.0;
  double epsilon = 0.0;

  bool operator==(const EpisodeMetrics&) const = default;
};

// Mean of mean_fsr over episodes [first, first + count).
inline double window_mean(std::span<const EpisodeMetrics> metrics, std::size_t first, std::size_t count) {
  if (count == 0 || first + count > metrics.size()) throw std::out_of_range("window outside metrics");
  double sum = 0.0;
  for (std::size_t i = first; i < first + count; ++i) sum += metrics[i].mean_fsr;
  return sum / static_cast<double>(count);
}

inline double overall_mean(std::span<const EpisodeMetrics> metrics) {
  return window_mean(metrics, 0, metrics.size());
}

// Trailing mean of mean_fsr over up to `window` episodes ending at each episode.
inline std::vector<double> rolling_mean(std::span<const EpisodeMetrics> metrics, std::size_t window) {
  if (window == 0) throw std::invalid_argument("window must be positive");
  std::vector<double> out;
  out.reserve(metrics.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    sum += metrics[i].mean_fsr;
    if (i >= window) sum -= metrics[i - window].mean_fsr;
    out.push_back(sum / static_cast<double>(std::min(i + 1, window)));
  }
  return out;
}

inline constexpr std::size_t kRollingWindow = 100;

// One row per (episode, agent):
// episode,agent_id,successes,fsr,mean_fsr,epsilon,rolling_mean_fsr
inline void write_metrics_csv(std::ostream& os, std::span<const EpisodeMetrics> metrics,
                              std::size_t window = kRollingWindow) {
  const auto rolling = rolling_mean(metrics, window);
  os << "episode,agent_id,successes,fsr,mean_fsr,epsilon,rolling_mean_fsr\n";
  os << std::fixed << std::setprecision(6);
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    const auto& m = metrics[i];
    for (std::size_t k = 0; k < m.successes.size(); ++k) {
      os << m.episode << ',' << k << ',' << m.successes[k] << ',' << m.fsr[k] << ',' << m.mean_fsr
         << ',' << m.epsilon << ',' << rolling[i] << '\n';
    }
  }
}

}  // namespace chansel::sim

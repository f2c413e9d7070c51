#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chansel/app/config.hpp"
#include "chansel/dqn/checkpoint.hpp"
#include "chansel/error.hpp"
#include "chansel/hil/session.hpp"
#include "chansel/sim/metrics.hpp"
#include "chansel/sim/simulator.hpp"

namespace chansel::app {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitDiverged = 3 };

inline std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// First and last windows of up to 100 episodes of a training run.
struct TrainingSummary {
  std::size_t window = 0;
  double first_window_fsr = 0.0;
  double final_window_fsr = 0.0;
};

inline TrainingSummary summarize_training(const std::vector<sim::EpisodeMetrics>& metrics) {
  TrainingSummary s;
  s.window = std::min(sim::kRollingWindow, metrics.size());
  s.first_window_fsr = sim::window_mean(metrics, 0, s.window);
  s.final_window_fsr = sim::window_mean(metrics, metrics.size() - s.window, s.window);
  return s;
}

// Train, test greedily, and run the untrained epsilon-greedy baseline. Testing
// and baseline share episode count and environment stream derivation.
struct Comparison {
  sim::TrainingResult training;
  std::vector<sim::EpisodeMetrics> testing;
  std::vector<sim::EpisodeMetrics> baseline;

  double test_fsr() const { return sim::overall_mean(testing); }
  double baseline_fsr() const { return sim::overall_mean(baseline); }
  double improvement_points() const { return 100.0 * (test_fsr() - baseline_fsr()); }
};

inline Comparison run_comparison(const RunConfig& config) {
  Comparison c;
  c.training = sim::run_training(config.sim);
  c.testing = sim::run_testing(c.training.agents, config.sim, config.test_episodes);
  c.baseline = sim::run_baseline_untrained(config.sim, config.test_episodes, config.baseline_epsilon);
  return c;
}

namespace detail {

inline std::filesystem::path prepare_out(const RunConfig& config) {
  std::filesystem::path dir(config.out_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_csv(const std::filesystem::path& path, const std::vector<sim::EpisodeMetrics>& metrics) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  sim::write_metrics_csv(os, metrics);
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

inline nlohmann::json training_json(const TrainingSummary& s) {
  return {{"window", s.window}, {"first_window_fsr", s.first_window_fsr}, {"final_window_fsr", s.final_window_fsr}};
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const dqn::CheckpointError& e) {
    err << "checkpoint error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const TrainingDiverged& e) {
    err << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace detail

inline std::string checkpoint_name(int agent) { return "agent_" + std::to_string(agent) + ".ckpt"; }

// Writes metrics.csv, summary.json, agent_<k>.ckpt (and trace.csv on request).
inline int cmd_train(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    config.validate();
    const auto dir = detail::prepare_out(config);
    auto slots = sim::make_training_slots(config.sim);
    std::ofstream trace;
    if (config.trace) {
      trace.open(dir / "trace.csv");
      trace << "slot,agent,channel,success,cause\n";
      slots.set_trace([&](const sim::TraceRow& r) {
        trace << r.slot << ',' << r.agent << ',' << r.outcome.channel << ',' << (r.outcome.success ? 1 : 0) << ','
              << env::to_string(r.outcome.cause) << '\n';
      });
    }
    const auto result = sim::run_training(config.sim, slots);
    detail::write_csv(dir / "metrics.csv", result.metrics);
    for (const auto& a : result.agents) dqn::save_checkpoint(a.net, (dir / checkpoint_name(a.id)).string());
    const auto s = summarize_training(result.metrics);
    detail::write_json(dir / "summary.json",
                       {{"command", "train"}, {"config", config_to_json(config)}, {"training", detail::training_json(s)}});
    out << "final-window mean FSR (last " << s.window << " episodes): " << fixed(s.final_window_fsr) << '\n';
    return kExitOk;
  });
}

// Greedy evaluation of saved networks. With no explicit paths, reads
// <out>/agent_<k>.ckpt for every agent.
inline int cmd_test(const RunConfig& config, std::vector<std::string> checkpoints, std::ostream& out,
                    std::ostream& err) {
  return detail::guarded(err, [&] {
    config.validate();
    const auto dir = detail::prepare_out(config);
    if (checkpoints.empty()) {
      for (int k = 0; k < config.sim.num_agents; ++k) checkpoints.push_back((dir / checkpoint_name(k)).string());
    }
    if (static_cast<int>(checkpoints.size()) != config.sim.num_agents)
      throw ConfigError("checkpoints", "expected " + std::to_string(config.sim.num_agents) + " checkpoints, got " +
                                           std::to_string(checkpoints.size()));
    auto agents = sim::make_agents(config.sim);
    for (std::size_t k = 0; k < checkpoints.size(); ++k) {
      auto net = dqn::load_checkpoint(checkpoints[k]);
      if (!(net.architecture() == config.sim.architecture()))
        throw ConfigError("checkpoints", checkpoints[k] + " architecture does not match the configuration");
      agents[k].net = std::move(net);
    }
    const auto metrics = sim::run_testing(agents, config.sim, config.test_episodes);
    detail::write_csv(dir / "test_metrics.csv", metrics);
    out << "test mean FSR over " << config.test_episodes << " episodes: " << fixed(sim::overall_mean(metrics), 2)
        << '\n';
    return kExitOk;
  });
}

inline int cmd_compare(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    config.validate();
    const auto dir = detail::prepare_out(config);
    const auto c = run_comparison(config);
    detail::write_csv(dir / "metrics.csv", c.training.metrics);
    detail::write_csv(dir / "test_metrics.csv", c.testing);
    detail::write_csv(dir / "baseline_metrics.csv", c.baseline);
    for (const auto& a : c.training.agents) dqn::save_checkpoint(a.net, (dir / checkpoint_name(a.id)).string());
    const auto s = summarize_training(c.training.metrics);
    detail::write_json(dir / "summary.json",
                       {{"command", "compare"},
                        {"config", config_to_json(config)},
                        {"training", detail::training_json(s)},
                        {"testing", {{"episodes", config.test_episodes}, {"mean_fsr", c.test_fsr()}}},
                        {"baseline",
                         {{"episodes", config.test_episodes},
                          {"epsilon", config.baseline_epsilon},
                          {"mean_fsr", c.baseline_fsr()}}},
                        {"improvement_points", c.improvement_points()}});
    out << "trained (greedy) mean FSR:            " << fixed(c.test_fsr()) << '\n'
        << "untrained epsilon-greedy (eps=" << fixed(config.baseline_epsilon, 2)
        << ") mean FSR: " << fixed(c.baseline_fsr()) << '\n'
        << "improvement: " << fixed(c.improvement_points(), 1) << " percentage points\n";
    return kExitOk;
  });
}

struct SweepRow {
  std::uint64_t seed = 0;
  TrainingSummary training;
  double test_fsr = 0.0;
  double baseline_fsr = 0.0;
  double improvement_points = 0.0;
};

inline std::vector<SweepRow> run_sweep(const RunConfig& config, const std::vector<std::uint64_t>& seeds) {
  std::vector<std::future<SweepRow>> jobs;
  for (auto seed : seeds) {
    jobs.push_back(std::async(std::launch::async, [config, seed] {
      RunConfig local = config;
      local.sim.seed = seed;
      const auto c = run_comparison(local);
      return SweepRow{seed, summarize_training(c.training.metrics), c.test_fsr(), c.baseline_fsr(),
                      c.improvement_points()};
    }));
  }
  std::vector<SweepRow> rows;
  for (auto& j : jobs) rows.push_back(j.get());
  return rows;
}

// Per-seed compare runs fanned out in parallel; sweep.csv is written after all
// workers finish.
inline int cmd_sweep(const RunConfig& config, const std::vector<std::uint64_t>& seeds, std::ostream& out,
                     std::ostream& err) {
  return detail::guarded(err, [&] {
    config.validate();
    if (seeds.empty()) throw ConfigError("seeds", "at least one seed is required");
    const auto dir = detail::prepare_out(config);
    const auto rows = run_sweep(config, seeds);

    std::ofstream csv(dir / "sweep.csv");
    csv << "seed,first_window_fsr,final_window_fsr,test_fsr,baseline_fsr,improvement_points\n";
    SweepRow pooled;
    auto per_seed = nlohmann::json::array();
    for (const auto& r : rows) {
      csv << r.seed << ',' << fixed(r.training.first_window_fsr, 6) << ',' << fixed(r.training.final_window_fsr, 6)
          << ',' << fixed(r.test_fsr, 6) << ',' << fixed(r.baseline_fsr, 6) << ',' << fixed(r.improvement_points, 6)
          << '\n';
      out << "seed " << r.seed << ": final-window " << fixed(r.training.final_window_fsr) << "  test "
          << fixed(r.test_fsr) << "  baseline " << fixed(r.baseline_fsr) << "  gain "
          << fixed(r.improvement_points, 1) << " pts\n";
      pooled.training.first_window_fsr += r.training.first_window_fsr / rows.size();
      pooled.training.final_window_fsr += r.training.final_window_fsr / rows.size();
      pooled.test_fsr += r.test_fsr / rows.size();
      pooled.baseline_fsr += r.baseline_fsr / rows.size();
      pooled.improvement_points += r.improvement_points / rows.size();
      per_seed.push_back({{"seed", r.seed},
                          {"final_window_fsr", r.training.final_window_fsr},
                          {"test_fsr", r.test_fsr},
                          {"baseline_fsr", r.baseline_fsr},
                          {"improvement_points", r.improvement_points}});
    }
    out << "pooled: final-window " << fixed(pooled.training.final_window_fsr) << "  test " << fixed(pooled.test_fsr)
        << "  baseline " << fixed(pooled.baseline_fsr) << "  gain " << fixed(pooled.improvement_points, 1)
        << " pts\n";
    detail::write_json(dir / "sweep_summary.json",
                       {{"command", "sweep"},
                        {"config", config_to_json(config)},
                        {"seeds", per_seed},
                        {"pooled",
                         {{"first_window_fsr", pooled.training.first_window_fsr},
                          {"final_window_fsr", pooled.training.final_window_fsr},
                          {"test_fsr", pooled.test_fsr},
                          {"baseline_fsr", pooled.baseline_fsr},
                          {"improvement_points", pooled.improvement_points}}}});
    return kExitOk;
  });
}

// Training driven through coordinators and mock devices over in-memory
// pipes, checked against the in-process run with the same seeds.
inline int cmd_hil_demo(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&]() -> int {
    config.validate();
    const auto dir = detail::prepare_out(config);
    sim::TrainingResult hil_run;
    {
      hil::MockSession session(config.sim, make_rng(config.sim.seed, Stream::kTrainEnv));
      auto slots = session.slots();
      hil_run = sim::run_training(config.sim, slots);
    }
    const auto local = sim::run_training(config.sim);
    detail::write_csv(dir / "hil_metrics.csv", hil_run.metrics);
    const auto s = summarize_training(hil_run.metrics);
    const bool same = hil_run.metrics == local.metrics;
    out << "HIL training over mock devices: final-window mean FSR " << fixed(s.final_window_fsr) << '\n'
        << "metrics vs in-process run: " << (same ? "identical" : "DIFFERENT") << '\n';
    return same ? kExitOk : kExitFailure;
  });
}

}  // namespace chansel::app

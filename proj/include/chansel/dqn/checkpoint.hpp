#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "chansel/dqn/qnetwork.hpp"

namespace chansel::dqn {

// JSON weight checkpoint. Doubles are written in shortest round-trip form, so
// load(save(net)) reproduces every weight bit for bit.
//
// {
//   "format": "chansel-qnetwork", "version": 1, "seed": <u64>,
//   "architecture": {"input_dim": 2, "hidden_dim": 16, "output_dim": 3, "activation": "relu"},
//   "layers":        [{"rows": R, "cols": C, "weights": [R*C row-major], "bias": [R]}, ...],
//   "target_layers": [... same shape ...]
// }
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kCheckpointFormat = "chansel-qnetwork";
inline constexpr int kCheckpointVersion = 1;

namespace detail {

inline nlohmann::json layers_to_json(const Parameters& theta) {
  auto arr = nlohmann::json::array();
  for (const auto& layer : theta) {
    arr.push_back({{"rows", layer.rows},
                   {"cols", layer.cols},
                   {"weights", layer.weights},
                   {"bias", layer.bias}});
  }
  return arr;
}

inline Parameters layers_from_json(const nlohmann::json& arr) {
  if (!arr.is_array()) throw CheckpointError("checkpoint layers must be an array");
  Parameters theta;
  for (const auto& j : arr) {
    DenseLayer layer;
    layer.rows = j.at("rows").get<std::size_t>();
    layer.cols = j.at("cols").get<std::size_t>();
    layer.weights = j.at("weights").get<std::vector<double>>();
    layer.bias = j.at("bias").get<std::vector<double>>();
    if (layer.weights.size() != layer.rows * layer.cols || layer.bias.size() != layer.rows)
      throw CheckpointError("checkpoint layer size does not match rows/cols");
    theta.push_back(std::move(layer));
  }
  return theta;
}

}  // namespace detail

inline nlohmann::json checkpoint_to_json(const QNetwork& net) {
  const auto& arch = net.architecture();
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"seed", net.seed()},
          {"architecture",
           {{"input_dim", arch.input_dim},
            {"hidden_dim", arch.hidden_dim},
            {"output_dim", arch.output_dim},
            {"activation", "relu"}}},
          {"layers", detail::layers_to_json(net.theta())},
          {"target_layers", detail::layers_to_json(net.theta_target())}};
}

inline QNetwork checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat)
      throw CheckpointError("not a chansel-qnetwork checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw CheckpointError("unsupported checkpoint version");
    const auto& a = j.at("architecture");
    Architecture arch{a.at("input_dim").get<std::size_t>(), a.at("hidden_dim").get<std::size_t>(),
                      a.at("output_dim").get<std::size_t>()};
    auto theta = detail::layers_from_json(j.at("layers"));
    if (!same_shape(theta, zero_parameters(arch)))
      throw CheckpointError("checkpoint layers do not match its architecture");
    QNetwork net(arch, std::move(theta), j.at("seed").get<std::uint64_t>());
    if (j.contains("target_layers")) {
      auto target = detail::layers_from_json(j.at("target_layers"));
      if (!same_shape(target, net.theta()))
        throw CheckpointError("checkpoint target layers do not match its architecture");
      net.set_target(std::move(target));
    }
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const QNetwork& net, std::ostream& os) {
  os << checkpoint_to_json(net).dump(2) << '\n';
}

inline QNetwork load_checkpoint(std::istream& is) {
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  return checkpoint_from_json(j);
}

inline void save_checkpoint(const QNetwork& net, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw CheckpointError("cannot write checkpoint " + path);
  save_checkpoint(net, os);
}

inline QNetwork load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw CheckpointError("cannot read checkpoint " + path);
  return load_checkpoint(is);
}

}  // namespace chansel::dqn

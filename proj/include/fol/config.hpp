#pragma once
#include <json.hpp>
#include <string>

#include "fol/errors.hpp"
#include "fol/microstructure.hpp"
#include "fol/neural.hpp"
#include "fol/training.hpp"

namespace fol {

/// Merged run configuration: defaults give the reference 11x11 setup, a config file
/// overrides the defaults, CLI flags override the file.
struct RunConfig {
  int nx = 11;
  int ny = 11;
  double lx = 1.0;
  double ly = 1.0;
  double t_left = 1.0;
  double t_right = 0.0;
  SamplerConfig sampler;    // carries k_mat = 1.0, k_inc = 0.01
  TrainingConfig training;  // carries Table-1 hyperparameters
  int fine_resolution = 165;
  int threads = 0;  // 0 = hardware concurrency
};

namespace detail {

template <typename T>
void get_if_present(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline void get_range(const nlohmann::json& j, const char* key,
                      std::array<double, 2>& out) {
  if (j.contains(key)) {
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 2)
      throw ValidationError(std::string("config: '") + key + "' must be [lo, hi]");
    out = {v[0].get<double>(), v[1].get<double>()};
  }
}

}  // namespace detail

inline void apply_json(SamplerConfig& cfg, const nlohmann::json& j) {
  detail::get_if_present(j, "k_mat", cfg.k_mat);
  detail::get_if_present(j, "k_inc", cfg.k_inc);
  if (j.contains("n_ellipses")) {
    const auto& v = j.at("n_ellipses");
    if (!v.is_array() || v.size() != 2)
      throw ValidationError("config: 'n_ellipses' must be [lo, hi]");
    cfg.n_ellipses_range = {v[0].get<int>(), v[1].get<int>()};
  }
  detail::get_range(j, "center_x", cfg.center_x_range);
  detail::get_range(j, "center_y", cfg.center_y_range);
  detail::get_range(j, "semi_axis_a", cfg.semi_axis_a_range);
  detail::get_range(j, "semi_axis_b", cfg.semi_axis_b_range);
  detail::get_range(j, "inner_scale", cfg.inner_scale_range);
  detail::get_range(j, "rotation", cfg.rotation_range);
  detail::get_if_present(j, "seed", cfg.seed);
  detail::get_if_present(j, "no_rings", cfg.no_rings);
}

inline nlohmann::json to_json(const SamplerConfig& cfg) {
  return {{"k_mat", cfg.k_mat},
          {"k_inc", cfg.k_inc},
          {"n_ellipses", cfg.n_ellipses_range},
          {"center_x", cfg.center_x_range},
          {"center_y", cfg.center_y_range},
          {"semi_axis_a", cfg.semi_axis_a_range},
          {"semi_axis_b", cfg.semi_axis_b_range},
          {"inner_scale", cfg.inner_scale_range},
          {"rotation", cfg.rotation_range},
          {"seed", cfg.seed},
          {"no_rings", cfg.no_rings}};
}

inline void apply_json(TrainingConfig& cfg, const nlohmann::json& j) {
  if (j.contains("mode")) cfg.mode = parse_training_mode(j.at("mode").get<std::string>());
  detail::get_if_present(j, "epochs", cfg.epochs);
  detail::get_if_present(j, "batch_size", cfg.batch_size);
  detail::get_if_present(j, "learning_rate", cfg.adam.learning_rate);
  detail::get_if_present(j, "beta1", cfg.adam.beta1);
  detail::get_if_present(j, "beta2", cfg.adam.beta2);
  detail::get_if_present(j, "epsilon", cfg.adam.epsilon);
  detail::get_if_present(j, "lambda_b", cfg.lambda_b);
  detail::get_if_present(j, "seed", cfg.seed);
  if (j.contains("activation"))
    cfg.activation = parse_activation(j.at("activation").get<std::string>());
  if (j.contains("arch")) cfg.arch = parse_network_mode(j.at("arch").get<std::string>());
  detail::get_if_present(j, "hidden_layers", cfg.hidden_layers);
  detail::get_if_present(j, "hidden_width", cfg.hidden_width);
  detail::get_if_present(j, "shuffle", cfg.shuffle);
  detail::get_if_present(j, "checkpoint_every", cfg.checkpoint_every);
}

inline nlohmann::json to_json(const TrainingConfig& cfg) {
  return {{"mode", to_string(cfg.mode)},
          {"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"learning_rate", cfg.adam.learning_rate},
          {"beta1", cfg.adam.beta1},
          {"beta2", cfg.adam.beta2},
          {"epsilon", cfg.adam.epsilon},
          {"lambda_b", cfg.lambda_b},
          {"seed", cfg.seed},
          {"activation", to_string(cfg.activation)},
          {"arch", to_string(cfg.arch)},
          {"hidden_layers", cfg.hidden_layers},
          {"hidden_width", cfg.hidden_width},
          {"shuffle", cfg.shuffle},
          {"checkpoint_every", cfg.checkpoint_every}};
}

inline void apply_json(RunConfig& cfg, const nlohmann::json& j) {
  if (j.contains("mesh")) {
    const auto& m = j.at("mesh");
    detail::get_if_present(m, "nx", cfg.nx);
    detail::get_if_present(m, "ny", cfg.ny);
    detail::get_if_present(m, "lx", cfg.lx);
    detail::get_if_present(m, "ly", cfg.ly);
  }
  if (j.contains("boundary")) {
    const auto& b = j.at("boundary");
    detail::get_if_present(b, "t_left", cfg.t_left);
    detail::get_if_present(b, "t_right", cfg.t_right);
  }
  if (j.contains("sampler")) apply_json(cfg.sampler, j.at("sampler"));
  if (j.contains("training")) apply_json(cfg.training, j.at("training"));
  if (j.contains("eval"))
    detail::get_if_present(j.at("eval"), "fine_resolution", cfg.fine_resolution);
  detail::get_if_present(j, "threads", cfg.threads);
}

inline nlohmann::json to_json(const RunConfig& cfg) {
  return {{"mesh", {{"nx", cfg.nx}, {"ny", cfg.ny}, {"lx", cfg.lx}, {"ly", cfg.ly}}},
          {"boundary", {{"t_left", cfg.t_left}, {"t_right", cfg.t_right}}},
          {"sampler", to_json(cfg.sampler)},
          {"training", to_json(cfg.training)},
          {"eval", {{"fine_resolution", cfg.fine_resolution}}},
          {"threads", cfg.threads}};
}

}  // namespace fol

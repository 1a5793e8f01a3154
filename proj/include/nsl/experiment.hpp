#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsl/estimation.hpp"
#include "nsl/image_io.hpp"
#include "nsl/metrics.hpp"
#include "nsl/samplers.hpp"

namespace nsl {

/// Rejected configuration; the message names the violated condition.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ExperimentKind { sample2d_tvl2, sample2d_tvl1, denoise, deconv, ar1_oracle };

std::string_view to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(std::string_view name);

struct SamplerSpec {
  std::string label;
  Algorithm algorithm = Algorithm::grad_sub;
  /// "constant" or "decreasing" (tau_1 = tau, rate m of the model)
  std::string schedule = "constant";
  double tau = 1e-3;
  double theta = 0.01;
  std::size_t burn_in = 0;
  std::size_t samples = 1000;
  std::size_t chains = 1;
  std::optional<std::uint64_t> seed;
  /// "strong" or "general"; empty picks strong when F is strongly convex.
  std::string cap_regime;
  double inner_tol = 1e-4;
  int inner_max_iters = 10000;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::sample2d_tvl2;
  std::string name = "experiment";

  // model
  double sigma = 1.0;
  double b = 1.0;
  double lambda = 5.0;
  std::array<double, 2> y{-1.0, 1.0};
  std::size_t kernel_size = 5;
  double kernel_width = 1.0;
  /// ground truth for imaging; empty uses the phantom of size image_size
  std::string image_path;
  std::size_t image_size = 64;
  std::uint64_t data_seed = 7;

  std::vector<SamplerSpec> samplers;

  // 2D evaluation
  Grid2D grid;
  std::size_t refine = 8;
  /// "data" (point mass at y) or "target_histogram"
  std::string init = "data";
  std::vector<std::size_t> snapshots;  // empty: snapshot_count log-spaced
  std::size_t snapshot_count = 25;
  std::size_t avg_burn_in = 0;

  std::uint64_t seed = 1;
  std::string output_dir = "out";
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& c);

/// Model for the config, with the ground truth image for imaging kinds.
struct BuiltModel {
  Model model;
  std::optional<Image> truth;
};
BuiltModel build_model(const ExperimentConfig& c);

/// F(x) = x^2/2 in one dimension, G = 0.
Model ar1_model();

SamplerConfig sampler_config(const SamplerSpec& s, const Model& model, std::uint64_t seed);

struct CapReport {
  std::string sampler;
  std::string rule;
  double tau = 0.0;
  double cap = 0.0;
  bool ok = true;
};

std::vector<CapReport> step_caps(const ExperimentConfig& c, const Model& model);
/// Throws ConfigError on the first violated precondition.
void validate(const ExperimentConfig& c, const Model& model);
void validate(const ExperimentConfig& c);

/// 0, then roughly log-spaced up to `last`, always including `last`.
std::vector<std::size_t> log_spaced_iters(std::size_t last, std::size_t count);

/// Per-snapshot divergences of an ensemble against a discretized target.
struct Evaluation2D {
  std::vector<std::size_t> iters;
  std::vector<double> w2;
  std::vector<double> tv;
  std::vector<double> kl;
  /// running average nu_n^N at n = snapshot - N (snapshots past N only)
  std::vector<std::size_t> avg_n;
  std::vector<double> kl_avg;
  std::vector<double> tv_avg;
  bool pinsker_ok = true;
  std::size_t pinsker_checked = 0;
  std::size_t clamped = 0;
  std::size_t binned = 0;
  DiscreteDistribution final_histogram;
  /// W2^2(mu_0, target), and W2^2(mu_0 S^G_tau, target)
  double w0_sq = 0.0;
  double w0_sq_sg = 0.0;
  RunStats stats;
};

Evaluation2D evaluate_2d(const Model& model, const SamplerConfig& sc, const TargetDensity& target,
                         std::span<const std::size_t> snapshot_iters, const Initializer& init,
                         std::size_t avg_burn_in = 0);

/// Draws from the discretized target: a bin by mass, then uniform within it.
Initializer target_histogram_init(const TargetDensity& target, std::uint64_t seed);

/// Runs the experiment and writes curves.csv, summary.json, config.json and,
/// for imaging, mean/variance images. Returns the summary.
nlohmann::json run_experiment(const ExperimentConfig& c);

std::vector<std::string> preset_names();
ExperimentConfig preset(std::string_view name);

}  // namespace nsl

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nsl/bounds.hpp"
#include "nsl/estimation.hpp"
#include "nsl/potentials.hpp"

namespace nsl {

enum class Algorithm { prox_sub, grad_sub, sub, myula, pmala, mh_grad_sub };

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view name);

/// Step sizes tau_j and weights lambda_j, indexed from j = 1. Iteration k of
/// a Prox-sub/Grad-sub chain uses the pair (tau_k, tau_{k+1}).
class StepSchedule {
 public:
  enum class Kind { constant, decreasing, explicit_list };

  static StepSchedule constant(double tau);
  /// tau_{j+1} = tau_j / (1 + m tau_j / 2), i.e. tau_j = 1/(1/tau_1 + (j-1) m/2).
  static StepSchedule decreasing(double tau1, double m);
  static StepSchedule explicit_steps(std::vector<double> taus);

  StepSchedule& with_weights(std::vector<double> weights);

  Kind kind() const { return kind_; }
  double tau(std::size_t j) const;
  double weight(std::size_t j) const;
  double first() const { return tau(1); }
  double m() const { return m_; }

  /// lambda_{k+1}/tau_{k+2} <= lambda_k/tau_{k+1} for k = 1..n.
  bool weights_admissible(std::size_t n) const;
  /// Same with the (1 - m tau_{k+2}/2) factor of the strongly convex KL bound.
  bool weights_admissible_strong(std::size_t n, double m) const;

 private:
  Kind kind_ = Kind::constant;
  double tau1_ = 0.0;
  double m_ = 0.0;
  std::vector<double> taus_;
  std::vector<double> weights_;
};

/// Independent N(0,1) source for one chain. Streams derived from the same
/// master seed with distinct ids are seeded independently.
class GaussianStream {
 public:
  GaussianStream(std::uint64_t master_seed, std::uint64_t stream_id);
  /// A stream that always yields zeros and accepts every MH proposal.
  static GaussianStream silent();

  void fill(std::span<double> out);
  double uniform();
  bool is_silent() const { return silent_; }

 private:
  GaussianStream() = default;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  bool silent_ = false;
};

/// Scratch buffers reused across steps of one chain.
struct StepWorkspace {
  explicit StepWorkspace(const Model& model);
  std::vector<double> kx, sub, kty, half, grad, noise, drift, drift_back, prox, prox_back, trial;
};

struct StepInfo {
  bool accepted = true;
  int inner_iterations = 0;
  bool inner_converged = true;
};

void prox_sub_step(const Model& model, std::span<const double> x, double tau_k, double tau_k1,
                   GaussianStream& rng, std::span<double> out, StepWorkspace& ws);
/// Same step with the standard normal draw B supplied by the caller.
void prox_sub_step(const Model& model, std::span<const double> x, double tau_k, double tau_k1,
                   std::span<const double> noise, std::span<double> out, StepWorkspace& ws);
void grad_sub_step(const Model& model, std::span<const double> x, double tau_k, double tau_k1,
                   std::span<const double> noise, std::span<double> out, StepWorkspace& ws);
void sub_step(const Model& model, std::span<const double> x, double tau,
              std::span<const double> noise, std::span<double> out, StepWorkspace& ws);
void grad_sub_step(const Model& model, std::span<const double> x, double tau_k, double tau_k1,
                   GaussianStream& rng, std::span<double> out, StepWorkspace& ws);
void sub_step(const Model& model, std::span<const double> x, double tau, GaussianStream& rng,
              std::span<double> out, StepWorkspace& ws);
StepInfo myula_step(const Model& model, std::span<const double> x, double tau, double theta,
                    GaussianStream& rng, std::span<double> out, StepWorkspace& ws,
                    PdOptions inner = {});
StepInfo pmala_step(const Model& model, std::span<const double> x, double tau,
                    GaussianStream& rng, std::span<double> out, StepWorkspace& ws,
                    PdOptions inner = {});
StepInfo mh_grad_sub_step(const Model& model, std::span<const double> x, double tau,
                          GaussianStream& rng, std::span<double> out, StepWorkspace& ws);

/// D(x) = h - tau grad F(h) with h = x - tau K* theta(Kx).
void grad_sub_drift(const Model& model, std::span<const double> x, double tau,
                    std::span<double> out, StepWorkspace& ws);

/// log of pi(prop) q(cur|prop) / (pi(cur) q(prop|cur)) for Gaussian proposals
/// q(a|b) = N(a; mean_b, 2 tau I); mean_cur/mean_prop are the proposal means
/// evaluated at cur/prop.
double mh_log_ratio(const Model& model, std::span<const double> cur,
                    std::span<const double> prop, std::span<const double> mean_cur,
                    std::span<const double> mean_prop, double tau);

struct SamplerConfig {
  Algorithm algorithm = Algorithm::grad_sub;
  StepSchedule schedule = StepSchedule::constant(1e-3);
  std::size_t burn_in = 0;
  std::size_t samples = 1;
  std::size_t chains = 1;
  std::uint64_t master_seed = 1;
  double theta = 0.01;
  PdOptions inner{};

  std::size_t iterations() const { return burn_in + samples; }
};

/// Writes the initial state of chain `chain` into x0.
using Initializer = std::function<void(std::size_t chain, std::span<double> x0)>;
/// Called with (chain, iteration, state) for iteration 0 and after every step.
using IterationObserver =
    std::function<void(std::size_t chain, std::size_t iter, std::span<const double> x)>;

Initializer start_at_data(const Model& model);

struct RunStats {
  double seconds = 0.0;
  std::size_t iterations = 0;
  std::size_t chains = 0;
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  std::size_t inner_solves = 0;
  std::size_t inner_failures = 0;
  double inner_iterations = 0.0;

  double acceptance_rate() const;
  /// Wall-clock seconds per 1000 iterations of the whole ensemble.
  double seconds_per_1000() const;
  double mean_inner_iterations() const;
};

struct Snapshot {
  std::size_t iter = 0;
  std::size_t dim = 0;
  std::vector<double> states;  // chains x dim, row-major

  std::span<const double> chain(std::size_t c) const { return {states.data() + c * dim, dim}; }
};

struct EnsembleResult {
  std::vector<Snapshot> snapshots;
  RunStats stats;
};

/// Runs config.chains independent chains for config.iterations() steps each,
/// recording the ensemble at the requested iterations (ascending).
EnsembleResult run_ensemble(const Model& model, const SamplerConfig& config,
                            std::span<const std::size_t> snapshot_iters,
                            const Initializer& init = {},
                            const IterationObserver& observer = {});

struct ChainResult {
  MomentAccumulator moments;
  /// Running post-burn-in mean after the requested sample counts.
  std::vector<std::pair<std::size_t, std::vector<double>>> mean_checkpoints;
  std::vector<double> final_state;
  RunStats stats;
};

/// Single-chain mode: discards burn_in iterations, streams the next
/// `samples` states into a MomentAccumulator. For Prox-sub/Grad-sub this
/// estimator is heuristic (no ergodicity result is available).
ChainResult run_single_chain(const Model& model, const SamplerConfig& config,
                             std::span<const std::size_t> checkpoints = {},
                             const Initializer& init = {});

/// Regime under which a Prox-sub step size is validated.
enum class CapRegime { strong, general };

/// Largest admissible step size for the algorithm on this model; +inf when
/// no restriction applies. Throws std::invalid_argument when a strong-convexity
/// cap is requested but m = 0, or when the algorithm needs a smooth F.
double step_size_cap(const Model& model, Algorithm algorithm,
                     std::optional<double> theta = std::nullopt,
                     CapRegime regime = CapRegime::strong);

/// The inequality behind step_size_cap, e.g. "tau <= 1/L_gradF".
std::string step_size_cap_rule(Algorithm algorithm, CapRegime regime);

enum class EpsVariant { kl_general, kl_strong, w2_prox, w2_grad };

struct EpsParams {
  double tau = 0.0;
  double tau_cap = 0.0;
  std::size_t n = 1;
};

/// Step size (0.9 x the cap implied by the accuracy inequality) and the
/// smallest iteration/sample count reaching accuracy eps.
EpsParams select_eps_params(double eps, const RegularityConstants& c, EpsVariant variant,
                            double w0_sq);

}  // namespace nsl

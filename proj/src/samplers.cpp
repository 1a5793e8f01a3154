#include "nsl/samplers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

namespace nsl {

namespace {

void require_tau(double tau, const char* what) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw std::invalid_argument(std::string(what) + ": step size must be positive and finite");
  }
}

void require_dim(std::span<const double> v, std::size_t n, const char* what) {
  if (v.size() != n) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

// out = K* theta(Kx)
void subgradient_pullback(const Model& model, std::span<const double> x, StepWorkspace& ws) {
  model.k().apply(x, ws.kx);
  subgrad_G_select(model.g(), ws.kx, ws.sub);
  model.k().adjoint(ws.sub, ws.kty);
}

void add_noise(std::span<double> out, std::span<const double> noise, double tau) {
  const double s = std::sqrt(2.0 * tau);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += s * noise[i];
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

bool mh_accept(double log_ratio, GaussianStream& rng) {
  if (log_ratio >= 0.0) {
    rng.uniform();  // keeps one uniform per proposal
    return true;
  }
  const double u = rng.uniform();
  return std::log(u) < log_ratio;
}

}  // namespace

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::prox_sub: return "prox_sub";
    case Algorithm::grad_sub: return "grad_sub";
    case Algorithm::sub: return "sub";
    case Algorithm::myula: return "myula";
    case Algorithm::pmala: return "pmala";
    case Algorithm::mh_grad_sub: return "mh_grad_sub";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::prox_sub, Algorithm::grad_sub, Algorithm::sub, Algorithm::myula,
                      Algorithm::pmala, Algorithm::mh_grad_sub}) {
    if (to_string(a) == name) return a;
  }
  throw std::invalid_argument("unknown algorithm '" + std::string(name) + "'");
}

// ---------------------------------------------------------------- schedules

StepSchedule StepSchedule::constant(double tau) {
  require_tau(tau, "StepSchedule::constant");
  StepSchedule s;
  s.kind_ = Kind::constant;
  s.tau1_ = tau;
  return s;
}

StepSchedule StepSchedule::decreasing(double tau1, double m) {
  require_tau(tau1, "StepSchedule::decreasing");
  if (!(m >= 0.0)) throw std::invalid_argument("StepSchedule::decreasing: m must be >= 0");
  StepSchedule s;
  s.kind_ = Kind::decreasing;
  s.tau1_ = tau1;
  s.m_ = m;
  return s;
}

StepSchedule StepSchedule::explicit_steps(std::vector<double> taus) {
  if (taus.empty()) throw std::invalid_argument("StepSchedule::explicit_steps: empty list");
  for (double t : taus) require_tau(t, "StepSchedule::explicit_steps");
  StepSchedule s;
  s.kind_ = Kind::explicit_list;
  s.tau1_ = taus.front();
  s.taus_ = std::move(taus);
  return s;
}

StepSchedule& StepSchedule::with_weights(std::vector<double> weights) {
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("StepSchedule: weights must be finite and >= 0");
    }
  }
  weights_ = std::move(weights);
  return *this;
}

double StepSchedule::tau(std::size_t j) const {
  if (j == 0) throw std::out_of_range("StepSchedule: indices start at 1");
  switch (kind_) {
    case Kind::constant: return tau1_;
    case Kind::decreasing:
      return 1.0 / (1.0 / tau1_ + static_cast<double>(j - 1) * m_ / 2.0);
    case Kind::explicit_list:
      if (j > taus_.size()) {
        throw std::out_of_range("StepSchedule: explicit list has only " +
                                std::to_string(taus_.size()) + " steps, asked for " +
                                std::to_string(j));
      }
      return taus_[j - 1];
  }
  return tau1_;
}

double StepSchedule::weight(std::size_t j) const {
  if (j == 0) throw std::out_of_range("StepSchedule: indices start at 1");
  if (weights_.empty()) return 1.0;
  if (j > weights_.size()) throw std::out_of_range("StepSchedule: weight list too short");
  return weights_[j - 1];
}

bool StepSchedule::weights_admissible(std::size_t n) const {
  for (std::size_t k = 1; k <= n; ++k) {
    const double lhs = weight(k + 1) / tau(k + 2);
    const double rhs = weight(k) / tau(k + 1);
    if (lhs > rhs * (1.0 + 1e-12)) return false;
  }
  return true;
}

bool StepSchedule::weights_admissible_strong(std::size_t n, double m) const {
  for (std::size_t k = 1; k <= n; ++k) {
    const double t2 = tau(k + 2);
    const double lhs = weight(k + 1) / t2 * (1.0 - m * t2 / 2.0);
    const double rhs = weight(k) / tau(k + 1);
    if (lhs > rhs * (1.0 + 1e-12)) return false;
  }
  return true;
}

// ---------------------------------------------------------------- randomness

GaussianStream::GaussianStream(std::uint64_t master_seed, std::uint64_t stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32), 0x9e3779b9u};
  engine_.seed(seq);
}

GaussianStream GaussianStream::silent() {
  GaussianStream g;
  g.silent_ = true;
  return g;
}

void GaussianStream::fill(std::span<double> out) {
  if (silent_) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  for (double& v : out) v = normal_(engine_);
}

double GaussianStream::uniform() {
  if (silent_) return 0.0;
  return unif_(engine_);
}

StepWorkspace::StepWorkspace(const Model& model) {
  const std::size_t d = model.dim();
  const std::size_t r = model.k().range_size();
  kx.assign(r, 0.0);
  sub.assign(r, 0.0);
  for (auto* v : {&kty, &half, &grad, &noise, &drift, &drift_back, &prox, &prox_back, &trial}) {
    v->assign(d, 0.0);
  }
}

// ---------------------------------------------------------------- steps

void prox_sub_step(const Model& model, std::span<const double> x, double tau_k, double tau_k1,
                   std::span<const double> noise, std::span<double> out, StepWorkspace& ws) {
  require_dim(x, model.dim(), "prox_sub_step");
  subgradient_pullback(model, x, ws);
  for (std::size_t i = 0; i < x.size(); ++i) ws.half[i] = x[i] - tau_k * ws.kty[i];
  prox_F(model, tau_k1, ws.half, out);
  add_noise(out, noise, tau_k1);
}

void prox_sub_step(const Model& model, std::span<const double> x, double tau_k, double tau_k1,
                   GaussianStream& rng, std::span<double> out, StepWorkspace& ws) {
  rng.fill(ws.noise);
  prox_sub_step(model, x, tau_k, tau_k1, std::span<const double>(ws.noise), out, ws);
}

void grad_sub_step(const Model& model, std::span<const double> x, double tau_k, double tau_k1,
                   std::span<const double> noise, std::span<double> out, StepWorkspace& ws) {
  require_dim(x, model.dim(), "grad_sub_step");
  if (!model.smooth()) throw std::invalid_argument("grad_sub_step: F must be smooth");
  subgradient_pullback(model, x, ws);
  for (std::size_t i = 0; i < x.size(); ++i) ws.half[i] = x[i] - tau_k * ws.kty[i];
  grad_F(model, ws.half, ws.grad);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = ws.half[i] - tau_k1 * ws.grad[i];
  add_noise(out, noise, tau_k1);
}

void grad_sub_step(const Model& model, std::span<const double> x, double tau_k, double tau_k1,
                   GaussianStream& rng, std::span<double> out, StepWorkspace& ws) {
  rng.fill(ws.noise);
  grad_sub_step(model, x, tau_k, tau_k1, std::span<const double>(ws.noise), out, ws);
}

void sub_step(const Model& model, std::span<const double> x, double tau,
              std::span<const double> noise, std::span<double> out, StepWorkspace& ws) {
  require_dim(x, model.dim(), "sub_step");
  subgradient_pullback(model, x, ws);
  subgrad_F_select(model, x, ws.grad);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - tau * (ws.grad[i] + ws.kty[i]);
  add_noise(out, noise, tau);
}

void sub_step(const Model& model, std::span<const double> x, double tau, GaussianStream& rng,
              std::span<double> out, StepWorkspace& ws) {
  rng.fill(ws.noise);
  sub_step(model, x, tau, std::span<const double>(ws.noise), out, ws);
}

StepInfo myula_step(const Model& model, std::span<const double> x, double tau, double theta,
                    GaussianStream& rng, std::span<double> out, StepWorkspace& ws,
                    PdOptions inner) {
  require_dim(x, model.dim(), "myula_step");
  if (!(theta > 0.0)) throw std::invalid_argument("myula_step: theta must be > 0");
  const PdResult p = prox_GK_pd(model.g(), model.k(), theta, x, inner);
  grad_F(model, x, ws.grad);
  rng.fill(ws.noise);
  const double a = tau / theta;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = (1.0 - a) * x[i] - tau * ws.grad[i] + a * p.point[i];
  }
  add_noise(out, ws.noise, tau);
  return {true, p.iterations, p.converged};
}

double mh_log_ratio(const Model& model, std::span<const double> cur,
                    std::span<const double> prop, std::span<const double> mean_cur,
                    std::span<const double> mean_prop, double tau) {
  const double du = eval_U(model, cur) - eval_U(model, prop);
  const double log_q_back = -sq_dist(cur, mean_prop) / (4.0 * tau);
  const double log_q_fwd = -sq_dist(prop, mean_cur) / (4.0 * tau);
  return du + log_q_back - log_q_fwd;
}

StepInfo pmala_step(const Model& model, std::span<const double> x, double tau,
                    GaussianStream& rng, std::span<double> out, StepWorkspace& ws,
                    PdOptions inner) {
  require_dim(x, model.dim(), "pmala_step");
  require_tau(tau, "pmala_step");
  StepInfo info;
  const PdResult fwd = prox_FGK_pd(model, tau, x, inner);
  rng.fill(ws.noise);
  std::copy(fwd.point.begin(), fwd.point.end(), ws.trial.begin());
  add_noise(ws.trial, ws.noise, tau);
  const PdResult back = prox_FGK_pd(model, tau, ws.trial, inner);
  info.inner_iterations = fwd.iterations + back.iterations;
  info.inner_converged = fwd.converged && back.converged;
  const double lr = mh_log_ratio(model, x, ws.trial, fwd.point, back.point, tau);
  info.accepted = mh_accept(lr, rng);
  if (info.accepted) {
    std::copy(ws.trial.begin(), ws.trial.end(), out.begin());
  } else if (out.data() != x.data()) {
    std::copy(x.begin(), x.end(), out.begin());
  }
  return info;
}

void grad_sub_drift(const Model& model, std::span<const double> x, double tau,
                    std::span<double> out, StepWorkspace& ws) {
  subgradient_pullback(model, x, ws);
  for (std::size_t i = 0; i < x.size(); ++i) ws.half[i] = x[i] - tau * ws.kty[i];
  grad_F(model, ws.half, ws.grad);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = ws.half[i] - tau * ws.grad[i];
}

StepInfo mh_grad_sub_step(const Model& model, std::span<const double> x, double tau,
                          GaussianStream& rng, std::span<double> out, StepWorkspace& ws) {
  require_dim(x, model.dim(), "mh_grad_sub_step");
  require_tau(tau, "mh_grad_sub_step");
  if (!model.smooth()) throw std::invalid_argument("mh_grad_sub_step: F must be smooth");
  grad_sub_drift(model, x, tau, ws.drift, ws);
  rng.fill(ws.noise);
  std::copy(ws.drift.begin(), ws.drift.end(), ws.trial.begin());
  add_noise(ws.trial, ws.noise, tau);
  grad_sub_drift(model, ws.trial, tau, ws.drift_back, ws);
  const double lr = mh_log_ratio(model, x, ws.trial, ws.drift, ws.drift_back, tau);
  StepInfo info;
  info.accepted = mh_accept(lr, rng);
  if (info.accepted) {
    std::copy(ws.trial.begin(), ws.trial.end(), out.begin());
  } else if (out.data() != x.data()) {
    std::copy(x.begin(), x.end(), out.begin());
  }
  return info;
}

// ---------------------------------------------------------------- runners

Initializer start_at_data(const Model& model) {
  const Image& y = model.data();
  std::vector<double> y0(y.values().begin(), y.values().end());
  return [y0](std::size_t, std::span<double> x0) { std::copy(y0.begin(), y0.end(), x0.begin()); };
}

double RunStats::acceptance_rate() const {
  return proposals == 0 ? 1.0 : static_cast<double>(accepted) / static_cast<double>(proposals);
}

double RunStats::seconds_per_1000() const {
  return iterations == 0 ? 0.0 : seconds / static_cast<double>(iterations) * 1000.0;
}

double RunStats::mean_inner_iterations() const {
  return inner_solves == 0 ? 0.0 : inner_iterations / static_cast<double>(inner_solves);
}

namespace {

void validate_config(const Model& model, const SamplerConfig& config) {
  if (config.chains == 0) throw std::invalid_argument("SamplerConfig: chains must be >= 1");
  if (!model.smooth() &&
      (config.algorithm == Algorithm::grad_sub || config.algorithm == Algorithm::myula ||
       config.algorithm == Algorithm::mh_grad_sub)) {
    throw std::invalid_argument(std::string(to_string(config.algorithm)) +
                                " needs a smooth data term");
  }
  if (config.algorithm == Algorithm::myula && !(config.theta > 0.0)) {
    throw std::invalid_argument("SamplerConfig: myula needs theta > 0");
  }
}

// Advances x -> out for iteration k (1-based).
StepInfo advance(const Model& model, const SamplerConfig& config, std::size_t k,
                 std::span<const double> x, std::span<double> out, GaussianStream& rng,
                 StepWorkspace& ws) {
  const StepSchedule& s = config.schedule;
  switch (config.algorithm) {
    case Algorithm::prox_sub:
      prox_sub_step(model, x, s.tau(k), s.tau(k + 1), rng, out, ws);
      return {};
    case Algorithm::grad_sub:
      grad_sub_step(model, x, s.tau(k), s.tau(k + 1), rng, out, ws);
      return {};
    case Algorithm::sub:
      sub_step(model, x, s.tau(k), rng, out, ws);
      return {};
    case Algorithm::myula:
      return myula_step(model, x, s.tau(k), config.theta, rng, out, ws, config.inner);
    case Algorithm::pmala:
      return pmala_step(model, x, s.tau(k), rng, out, ws, config.inner);
    case Algorithm::mh_grad_sub:
      return mh_grad_sub_step(model, x, s.tau(k), rng, out, ws);
  }
  return {};
}

void record(RunStats& stats, Algorithm a, const StepInfo& info) {
  if (a == Algorithm::pmala || a == Algorithm::mh_grad_sub) {
    ++stats.proposals;
    if (info.accepted) ++stats.accepted;
  }
  if (a == Algorithm::pmala || a == Algorithm::myula) {
    const std::size_t solves = a == Algorithm::pmala ? 2 : 1;
    stats.inner_solves += solves;
    stats.inner_iterations += info.inner_iterations;
    if (!info.inner_converged) ++stats.inner_failures;
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

EnsembleResult run_ensemble(const Model& model, const SamplerConfig& config,
                            std::span<const std::size_t> snapshot_iters, const Initializer& init,
                            const IterationObserver& observer) {
  validate_config(model, config);
  if (!std::is_sorted(snapshot_iters.begin(), snapshot_iters.end())) {
    throw std::invalid_argument("run_ensemble: snapshot iterations must be ascending");
  }
  const std::size_t iters = config.iterations();
  if (!snapshot_iters.empty() && snapshot_iters.back() > iters) {
    throw std::invalid_argument("run_ensemble: snapshot beyond the last iteration");
  }
  const std::size_t d = model.dim();
  const Initializer start = init ? init : start_at_data(model);

  EnsembleResult result;
  for (std::size_t it : snapshot_iters) {
    result.snapshots.push_back({it, d, std::vector<double>(config.chains * d, 0.0)});
  }
  result.stats.iterations = iters;
  result.stats.chains = config.chains;

  StepWorkspace ws(model);
  std::vector<double> x(d), next(d);
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t c = 0; c < config.chains; ++c) {
    GaussianStream rng(config.master_seed, c);
    start(c, x);
    std::size_t snap = 0;
    const auto take = [&](std::size_t k) {
      while (snap < result.snapshots.size() && result.snapshots[snap].iter == k) {
        std::copy(x.begin(), x.end(), result.snapshots[snap].states.begin() + c * d);
        ++snap;
      }
    };
    take(0);
    if (observer) observer(c, 0, x);
    for (std::size_t k = 1; k <= iters; ++k) {
      const StepInfo info = advance(model, config, k, x, next, rng, ws);
      record(result.stats, config.algorithm, info);
      x.swap(next);
      take(k);
      if (observer) observer(c, k, x);
    }
  }
  result.stats.seconds = seconds_since(t0);
  return result;
}

ChainResult run_single_chain(const Model& model, const SamplerConfig& config,
                             std::span<const std::size_t> checkpoints, const Initializer& init) {
  validate_config(model, config);
  if (!std::is_sorted(checkpoints.begin(), checkpoints.end())) {
    throw std::invalid_argument("run_single_chain: checkpoints must be ascending");
  }
  const std::size_t d = model.dim();
  const Initializer start = init ? init : start_at_data(model);
  ChainResult result{MomentAccumulator(d), {}, std::vector<double>(d), {}};
  result.stats.iterations = config.iterations();
  result.stats.chains = 1;

  StepWorkspace ws(model);
  std::vector<double> x(d), next(d);
  GaussianStream rng(config.master_seed, 0);
  start(0, x);
  std::size_t cp = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t k = 1; k <= config.iterations(); ++k) {
    const StepInfo info = advance(model, config, k, x, next, rng, ws);
    record(result.stats, config.algorithm, info);
    x.swap(next);
    if (k > config.burn_in) {
      result.moments.accumulate(x);
      while (cp < checkpoints.size() && checkpoints[cp] == result.moments.count()) {
        result.mean_checkpoints.emplace_back(checkpoints[cp], result.moments.mean());
        ++cp;
      }
    }
  }
  result.stats.seconds = seconds_since(t0);
  result.final_state = x;
  return result;
}

// ---------------------------------------------------------------- caps

double step_size_cap(const Model& model, Algorithm algorithm, std::optional<double> theta,
                     CapRegime regime) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const auto smooth = [&]() -> const SmoothF& {
    if (!model.smooth()) {
      throw std::invalid_argument(std::string(to_string(algorithm)) +
                                  " needs a smooth data term");
    }
    return model.smooth_f();
  };
  switch (algorithm) {
    case Algorithm::prox_sub: {
      if (regime == CapRegime::general) return inf;
      const SmoothF& f = smooth();
      const double m = f.strong_convexity();
      const double L = f.lipschitz_grad();
      if (!(m > 0.0)) {
        throw std::invalid_argument("strong-convexity cap tau <= m/(2 L_gradF^2 - m^2) needs m > 0");
      }
      return m / (2.0 * L * L - m * m);
    }
    case Algorithm::grad_sub:
      return 1.0 / smooth().lipschitz_grad();
    case Algorithm::myula: {
      if (!theta || !(*theta > 0.0)) throw std::invalid_argument("myula cap needs theta > 0");
      const double L = smooth().lipschitz_grad();
      return *theta / (*theta * L + 1.0);
    }
    case Algorithm::sub:
    case Algorithm::pmala:
      return inf;
    case Algorithm::mh_grad_sub:
      smooth();
      return inf;
  }
  return inf;
}

std::string step_size_cap_rule(Algorithm algorithm, CapRegime regime) {
  switch (algorithm) {
    case Algorithm::prox_sub:
      return regime == CapRegime::strong ? "tau <= m/(2 L_gradF^2 - m^2)" : "tau > 0";
    case Algorithm::grad_sub: return "tau <= 1/L_gradF";
    case Algorithm::myula: return "tau <= theta/(theta L_gradF + 1)";
    default: return "tau > 0";
  }
}

// ---------------------------------------------------------------- eps corollaries

namespace {

std::size_t smallest_n_above(double r) {
  if (!(r >= 0.0)) return 1;
  if (r >= 1e18) throw std::overflow_error("select_eps_params: iteration count overflows");
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(r)) + 1);
}

}  // namespace

EpsParams select_eps_params(double eps, const RegularityConstants& c, EpsVariant variant,
                            double w0_sq) {
  if (!(eps > 0.0)) throw std::invalid_argument("select_eps_params: eps must be > 0");
  if (!(w0_sq >= 0.0)) throw std::invalid_argument("select_eps_params: W0_sq must be >= 0");
  c.validate();
  const double A = c.lg2k2();
  const double d = static_cast<double>(c.d);
  const auto need = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("select_eps_params: missing ") + what);
  };
  EpsParams out;
  switch (variant) {
    case EpsVariant::kl_general: {
      if (c.tag == RegularityConstants::Tag::lipschitz_F) {
        // L_F sqrt(2d) s + A s^2/2 = eps/2 with s = sqrt(tau)
        const double B = c.L_F * std::sqrt(2.0 * d);
        need(B > 0.0 || A > 0.0, "L_F or L_G |K|");
        const double s = A > 0.0 ? (-B + std::sqrt(B * B + A * eps)) / A : eps / (2.0 * B);
        out.tau_cap = s * s;
      } else {
        const double rate = c.L_gradF * d + 0.5 * A;
        need(rate > 0.0, "L_gradF");
        out.tau_cap = eps / (2.0 * rate);
      }
      out.tau = 0.9 * out.tau_cap;
      out.n = smallest_n_above(w0_sq / (eps * out.tau));
      return out;
    }
    case EpsVariant::kl_strong: {
      need(c.m > 0.0 && c.L_gradF > 0.0, "m and L_gradF");
      const double rate = c.L_gradF * d + 0.5 * A;
      const double cap = c.m / (2.0 * c.L_gradF * c.L_gradF - c.m * c.m);
      out.tau_cap = std::min(eps / (2.0 * rate), cap);
      out.tau = 0.9 * out.tau_cap;
      out.n = smallest_n_above((1.0 - c.m * out.tau / 2.0) * w0_sq / (eps * out.tau));
      return out;
    }
    case EpsVariant::w2_prox:
    case EpsVariant::w2_grad: {
      need(c.m > 0.0 && c.L_gradF > 0.0, "m and L_gradF");
      const bool prox = variant == EpsVariant::w2_prox;
      const double B = 2.0 * c.L_gradF * d + A;
      const double cap = prox ? c.m / (2.0 * c.L_gradF * c.L_gradF - c.m * c.m) : 1.0 / c.L_gradF;
      const double bias_cap = (prox ? c.m * eps / 4.0 : c.m * eps / 2.0) / B;
      out.tau_cap = std::min(bias_cap, cap);
      out.tau = 0.9 * out.tau_cap;
      if (w0_sq == 0.0 || eps / (2.0 * w0_sq) >= 1.0) {
        out.n = 1;
      } else {
        const double rho = 1.0 - (prox ? c.m * out.tau / 2.0 : c.m * out.tau);
        if (rho <= 0.0) {
          out.n = 1;
        } else {
          out.n = smallest_n_above(std::log(eps / (2.0 * w0_sq)) / std::log(rho));
        }
      }
      return out;
    }
  }
  return out;
}

}  // namespace nsl

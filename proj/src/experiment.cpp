#include "nsl/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace nsl {

using nlohmann::json;

namespace {

const char* kind_names[] = {"sample2d_tvl2", "sample2d_tvl1", "denoise", "deconv", "ar1_oracle"};

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

bool is_2d(ExperimentKind k) {
  return k == ExperimentKind::sample2d_tvl2 || k == ExperimentKind::sample2d_tvl1;
}

bool is_imaging(ExperimentKind k) {
  return k == ExperimentKind::denoise || k == ExperimentKind::deconv;
}

CapRegime regime_for(const SamplerSpec& s, const Model& model) {
  if (s.cap_regime == "strong") return CapRegime::strong;
  if (s.cap_regime == "general") return CapRegime::general;
  const bool strong = model.smooth() && model.smooth_f().strong_convexity() > 0.0;
  return strong ? CapRegime::strong : CapRegime::general;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

class CurveWriter {
 public:
  explicit CurveWriter(const std::filesystem::path& path) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    out_ << "iter,sampler,metric,value,curve_kind\n";
  }
  void row(std::size_t iter, const std::string& sampler, const char* metric, double value,
           const char* kind = "empirical") {
    out_ << iter << ',' << sampler << ',' << metric << ',' << fmt(value) << ',' << kind << '\n';
  }

 private:
  std::ofstream out_;
};

json constants_json(const RegularityConstants& c) {
  const char* tags[] = {"lipschitz_F", "smooth_F", "strongly_convex_F"};
  return {{"d", c.d},
          {"L_F", c.L_F},
          {"L_gradF", c.L_gradF},
          {"m", c.m},
          {"L_G", c.L_G},
          {"normK_sq", c.normK_sq},
          {"tag", tags[static_cast<int>(c.tag)]},
          {"dimension_dependent", c.dimension_dependent}};
}

json stats_json(const RunStats& s) {
  return {{"seconds", s.seconds},
          {"iterations", s.iterations},
          {"chains", s.chains},
          {"seconds_per_1000", s.seconds_per_1000()},
          {"acceptance_rate", s.acceptance_rate()},
          {"proposals", s.proposals},
          {"inner_solves", s.inner_solves},
          {"inner_failures", s.inner_failures},
          {"mean_inner_iterations", s.mean_inner_iterations()}};
}

double rms_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

Histogram2D histogram_of(std::span<const double> states, const Grid2D& grid) {
  Histogram2D h(grid);
  for (std::size_t i = 0; i + 1 < states.size(); i += 2) h.add(states[i], states[i + 1]);
  return h;
}

}  // namespace

std::string_view to_string(ExperimentKind k) { return kind_names[static_cast<int>(k)]; }

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (int i = 0; i < 5; ++i) {
    if (name == kind_names[i]) return static_cast<ExperimentKind>(i);
  }
  throw ConfigError("unknown experiment kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------- config

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  try {
    reject_unknown(j,
                   {"experiment", "name", "model", "samplers", "grid", "refine", "init",
                    "snapshots", "snapshot_count", "avg_burn_in", "seed", "output_dir"},
                   "config");
    if (!j.contains("experiment")) throw ConfigError("config: missing 'experiment'");
    c.kind = parse_experiment_kind(j.at("experiment").get<std::string>());
    read(j, "name", c.name);
    if (j.contains("model")) {
      const json& m = j.at("model");
      reject_unknown(m,
                     {"sigma", "b", "lambda", "y", "kernel_size", "kernel_width", "image",
                      "image_size", "data_seed"},
                     "model");
      read(m, "sigma", c.sigma);
      read(m, "b", c.b);
      read(m, "lambda", c.lambda);
      read(m, "y", c.y);
      read(m, "kernel_size", c.kernel_size);
      read(m, "kernel_width", c.kernel_width);
      read(m, "image", c.image_path);
      read(m, "image_size", c.image_size);
      read(m, "data_seed", c.data_seed);
    }
    if (!j.contains("samplers") || !j.at("samplers").is_array()) {
      throw ConfigError("config: 'samplers' must be a list");
    }
    for (const json& s : j.at("samplers")) {
      reject_unknown(s,
                     {"label", "algorithm", "schedule", "tau", "theta", "burn_in", "samples",
                      "chains", "seed", "cap_regime", "inner_tol", "inner_max_iters"},
                     "sampler");
      SamplerSpec sp;
      if (!s.contains("algorithm")) throw ConfigError("sampler: missing 'algorithm'");
      try {
        sp.algorithm = parse_algorithm(s.at("algorithm").get<std::string>());
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
      read(s, "schedule", sp.schedule);
      read(s, "tau", sp.tau);
      read(s, "theta", sp.theta);
      read(s, "burn_in", sp.burn_in);
      read(s, "samples", sp.samples);
      read(s, "chains", sp.chains);
      if (s.contains("seed")) sp.seed = s.at("seed").get<std::uint64_t>();
      read(s, "cap_regime", sp.cap_regime);
      read(s, "inner_tol", sp.inner_tol);
      read(s, "inner_max_iters", sp.inner_max_iters);
      sp.label = s.value("label", std::string(to_string(sp.algorithm)) + "_tau" + fmt(sp.tau));
      c.samplers.push_back(sp);
    }
    if (j.contains("grid")) {
      const json& g = j.at("grid");
      reject_unknown(g, {"x_min", "x_max", "y_min", "y_max", "bins_x", "bins_y"}, "grid");
      read(g, "x_min", c.grid.x_min);
      read(g, "x_max", c.grid.x_max);
      read(g, "y_min", c.grid.y_min);
      read(g, "y_max", c.grid.y_max);
      read(g, "bins_x", c.grid.bins_x);
      read(g, "bins_y", c.grid.bins_y);
    }
    read(j, "refine", c.refine);
    read(j, "init", c.init);
    read(j, "snapshots", c.snapshots);
    read(j, "snapshot_count", c.snapshot_count);
    read(j, "avg_burn_in", c.avg_burn_in);
    read(j, "seed", c.seed);
    read(j, "output_dir", c.output_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  json s = json::array();
  for (const auto& sp : c.samplers) {
    json e = {{"label", sp.label},
              {"algorithm", to_string(sp.algorithm)},
              {"schedule", sp.schedule},
              {"tau", sp.tau},
              {"theta", sp.theta},
              {"burn_in", sp.burn_in},
              {"samples", sp.samples},
              {"chains", sp.chains},
              {"inner_tol", sp.inner_tol},
              {"inner_max_iters", sp.inner_max_iters}};
    if (sp.seed) e["seed"] = *sp.seed;
    if (!sp.cap_regime.empty()) e["cap_regime"] = sp.cap_regime;
    s.push_back(e);
  }
  return {{"experiment", to_string(c.kind)},
          {"name", c.name},
          {"model",
           {{"sigma", c.sigma},
            {"b", c.b},
            {"lambda", c.lambda},
            {"y", c.y},
            {"kernel_size", c.kernel_size},
            {"kernel_width", c.kernel_width},
            {"image", c.image_path},
            {"image_size", c.image_size},
            {"data_seed", c.data_seed}}},
          {"samplers", s},
          {"grid",
           {{"x_min", c.grid.x_min},
            {"x_max", c.grid.x_max},
            {"y_min", c.grid.y_min},
            {"y_max", c.grid.y_max},
            {"bins_x", c.grid.bins_x},
            {"bins_y", c.grid.bins_y}}},
          {"refine", c.refine},
          {"init", c.init},
          {"snapshots", c.snapshots},
          {"snapshot_count", c.snapshot_count},
          {"avg_burn_in", c.avg_burn_in},
          {"seed", c.seed},
          {"output_dir", c.output_dir}};
}

// ---------------------------------------------------------------- models

Model ar1_model() {
  return Model(SmoothF::l2_shift(Image(1, 1), 1.0), GSpec{GKind::scaled_abs, 0.0},
               LinearOperator::conv2d(1, 1, Image(1, 1, 1.0)));
}

BuiltModel build_model(const ExperimentConfig& c) {
  if (!(c.sigma > 0.0)) throw ConfigError("model: sigma must be > 0");
  if (!(c.lambda >= 0.0)) throw ConfigError("model: lambda must be >= 0");
  switch (c.kind) {
    case ExperimentKind::sample2d_tvl2:
      return {Model::tv_l2_2d({c.y[0], c.y[1]}, c.sigma, c.lambda), std::nullopt};
    case ExperimentKind::sample2d_tvl1:
      if (!(c.b > 0.0)) throw ConfigError("model: b must be > 0");
      return {Model::tv_l1_2d({c.y[0], c.y[1]}, c.b, c.lambda), std::nullopt};
    case ExperimentKind::ar1_oracle:
      return {ar1_model(), std::nullopt};
    case ExperimentKind::denoise:
    case ExperimentKind::deconv: {
      Image truth = c.image_path.empty() ? phantom(c.image_size) : read_image_pgm(c.image_path);
      if (c.kind == ExperimentKind::denoise) {
        Image y = make_synthetic_data(DataKind::denoise, truth, c.sigma, Image(), c.data_seed);
        return {Model::tv_denoise(std::move(y), c.sigma, c.lambda), std::move(truth)};
      }
      if (c.kernel_size % 2 == 0 || c.kernel_size > std::min(truth.rows(), truth.cols())) {
        throw ConfigError("model: kernel_size must be odd and fit the image");
      }
      const Image k = gaussian_kernel(c.kernel_size, c.kernel_width);
      Image y = make_synthetic_data(DataKind::deconv, truth, c.sigma, k, c.data_seed);
      return {Model::tv_deconv(std::move(y), k, c.sigma, c.lambda), std::move(truth)};
    }
  }
  throw ConfigError("unknown experiment kind");
}

SamplerConfig sampler_config(const SamplerSpec& s, const Model& model, std::uint64_t seed) {
  SamplerConfig sc;
  sc.algorithm = s.algorithm;
  if (s.schedule == "constant") {
    sc.schedule = StepSchedule::constant(s.tau);
  } else if (s.schedule == "decreasing") {
    const double m = model.smooth() ? model.smooth_f().strong_convexity() : 0.0;
    sc.schedule = StepSchedule::decreasing(s.tau, m);
    // lambda_j = tau_{j+1} keeps the KL weights admissible
    std::vector<double> w(s.burn_in + s.samples + 2);
    for (std::size_t j = 1; j <= w.size(); ++j) w[j - 1] = sc.schedule.tau(j + 1);
    sc.schedule.with_weights(std::move(w));
  } else {
    throw ConfigError("sampler '" + s.label + "': schedule must be constant or decreasing");
  }
  sc.burn_in = s.burn_in;
  sc.samples = s.samples;
  sc.chains = s.chains;
  sc.master_seed = s.seed.value_or(seed);
  sc.theta = s.theta;
  sc.inner = {s.inner_tol, s.inner_max_iters};
  return sc;
}

// ---------------------------------------------------------------- validation

std::vector<CapReport> step_caps(const ExperimentConfig& c, const Model& model) {
  std::vector<CapReport> out;
  for (const auto& s : c.samplers) {
    CapReport r;
    r.sampler = s.label;
    r.tau = s.tau;
    const CapRegime regime = regime_for(s, model);
    r.rule = step_size_cap_rule(s.algorithm, regime);
    try {
      r.cap = step_size_cap(model, s.algorithm, s.theta, regime);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("sampler '" + s.label + "': " + e.what());
    }
    r.ok = s.tau <= r.cap * (1.0 + 1e-12);
    out.push_back(r);
  }
  return out;
}

void validate(const ExperimentConfig& c, const Model& model) {
  if (c.samplers.empty()) throw ConfigError("config: no samplers");
  if (is_2d(c.kind)) {
    c.grid.validate();
    if (c.refine == 0) throw ConfigError("config: refine must be >= 1");
    if (c.init != "data" && c.init != "target_histogram") {
      throw ConfigError("config: init must be data or target_histogram");
    }
  }
  if (!std::is_sorted(c.snapshots.begin(), c.snapshots.end())) {
    throw ConfigError("config: snapshots must be ascending");
  }
  std::set<std::string> labels;
  for (const auto& s : c.samplers) {
    const std::string who = "sampler '" + s.label + "': ";
    if (!labels.insert(s.label).second) throw ConfigError(who + "duplicate label");
    if (s.label.find_first_of(",\n/") != std::string::npos) {
      throw ConfigError(who + "label may not contain ',', '/' or newlines");
    }
    if (!(s.tau > 0.0) || !std::isfinite(s.tau)) throw ConfigError(who + "tau > 0 violated");
    if (s.algorithm == Algorithm::myula && !(s.theta > 0.0)) {
      throw ConfigError(who + "theta > 0 violated");
    }
    if (s.chains == 0) throw ConfigError(who + "chains >= 1 violated");
    if (!s.cap_regime.empty() && s.cap_regime != "strong" && s.cap_regime != "general") {
      throw ConfigError(who + "cap_regime must be strong or general");
    }
    if (!(s.inner_tol > 0.0) || s.inner_max_iters < 1) {
      throw ConfigError(who + "inner solver needs tol > 0 and max_iters >= 1");
    }
    (void)sampler_config(s, model, c.seed);
    const std::size_t iters = s.burn_in + s.samples;
    if (!c.snapshots.empty() && c.snapshots.back() > iters) {
      throw ConfigError(who + "snapshot " + std::to_string(c.snapshots.back()) +
                        " exceeds the iteration count " + std::to_string(iters));
    }
    if (is_imaging(c.kind) && s.samples < 2) throw ConfigError(who + "samples >= 2 violated");
    if (c.kind == ExperimentKind::ar1_oracle && s.chains < 2) {
      throw ConfigError(who + "chains >= 2 violated");
    }
  }
  for (const auto& r : step_caps(c, model)) {
    if (!r.ok) {
      throw ConfigError("sampler '" + r.sampler + "': tau = " + fmt(r.tau) + " violates " +
                        r.rule + " (cap " + fmt(r.cap) + ")");
    }
  }
}

void validate(const ExperimentConfig& c) { validate(c, build_model(c).model); }

// ---------------------------------------------------------------- 2D evaluation

std::vector<std::size_t> log_spaced_iters(std::size_t last, std::size_t count) {
  std::vector<std::size_t> out = {0};
  if (last == 0) return out;
  const std::size_t n = std::max<std::size_t>(count, 2);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n - 2 > 0 ? n - 2 : 1);
    const auto v = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(last), t)));
    if (v > out.back() && v <= last) out.push_back(v);
  }
  if (out.back() != last) out.push_back(last);
  return out;
}

Initializer target_histogram_init(const TargetDensity& target, std::uint64_t seed) {
  std::vector<double> cdf(target.distribution.size());
  std::partial_sum(target.distribution.mass.begin(), target.distribution.mass.end(), cdf.begin());
  const Grid2D g = target.grid;
  return [cdf = std::move(cdf), g, seed](std::size_t chain, std::span<double> x0) {
    std::seed_seq ss{seed, static_cast<std::uint64_t>(chain), std::uint64_t{0x7a11}};
    std::mt19937_64 gen(ss);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double r = u(gen) * cdf.back();
    const auto bin = static_cast<std::size_t>(
        std::min<std::ptrdiff_t>(std::upper_bound(cdf.begin(), cdf.end(), r) - cdf.begin(),
                                 static_cast<std::ptrdiff_t>(cdf.size()) - 1));
    const auto c = g.center(bin);
    x0[0] = c[0] + (u(gen) - 0.5) * g.dx();
    x0[1] = c[1] + (u(gen) - 0.5) * g.dy();
  };
}

Evaluation2D evaluate_2d(const Model& model, const SamplerConfig& sc, const TargetDensity& target,
                         std::span<const std::size_t> snaps, const Initializer& init,
                         std::size_t avg_burn_in) {
  if (model.dim() != 2) throw std::invalid_argument("evaluate_2d: needs a 2D model");
  const Grid2D& grid = target.grid;
  Evaluation2D ev;

  // initial law, before and after the subgradient half step
  {
    const Initializer start = init ? init : start_at_data(model);
    std::vector<double> x0(2 * sc.chains), sg(2 * sc.chains);
    std::vector<double> kx(model.k().range_size()), th(kx.size()), kt(2);
    const double tau = sc.schedule.tau(1);
    for (std::size_t c = 0; c < sc.chains; ++c) {
      std::span<double> x(x0.data() + 2 * c, 2);
      start(c, x);
      model.k().apply(x, kx);
      subgrad_G_select(model.g(), kx, th);
      model.k().adjoint(th, kt);
      sg[2 * c] = x[0] - tau * kt[0];
      sg[2 * c + 1] = x[1] - tau * kt[1];
    }
    ev.w0_sq = optimal_transport(histogram_of(x0, grid).distribution(), target.distribution).cost;
    ev.w0_sq_sg = optimal_transport(histogram_of(sg, grid).distribution(), target.distribution).cost;
  }

  std::vector<Histogram2D> windows(snaps.size(), Histogram2D(grid));
  std::size_t cursor = 0;
  const IterationObserver observer = [&](std::size_t, std::size_t iter,
                                         std::span<const double> x) {
    if (iter == 0) {
      cursor = 0;
      return;
    }
    if (iter <= avg_burn_in) return;
    while (cursor < snaps.size() && snaps[cursor] < iter) ++cursor;
    if (cursor == snaps.size()) return;
    windows[cursor].add(x[0], x[1], sc.schedule.weight(iter));
  };

  const EnsembleResult r = run_ensemble(model, sc, snaps, init, observer);
  ev.stats = r.stats;

  const auto check_pinsker = [&](const DiscreteDistribution& d) {
    ++ev.pinsker_checked;
    if (!pinsker_check(d, target.distribution).pass) ev.pinsker_ok = false;
  };

  for (const Snapshot& s : r.snapshots) {
    const Histogram2D h = histogram_of(s.states, grid);
    ev.clamped += h.clamped();
    ev.binned += h.samples();
    const DiscreteDistribution d = h.distribution();
    ev.iters.push_back(s.iter);
    ev.w2.push_back(w2_exact(d, target.distribution));
    ev.tv.push_back(tv_discrete(d, target.distribution));
    ev.kl.push_back(kl_discrete(d, target.distribution));
    check_pinsker(d);
    if (&s == &r.snapshots.back()) ev.final_histogram = d;
  }

  Histogram2D running(grid);
  for (std::size_t j = 0; j < snaps.size(); ++j) {
    running.add(windows[j]);
    if (snaps[j] <= avg_burn_in || running.samples() == 0) continue;
    const DiscreteDistribution d = running.distribution();
    ev.avg_n.push_back(snaps[j] - avg_burn_in);
    ev.kl_avg.push_back(kl_discrete(d, target.distribution));
    ev.tv_avg.push_back(tv_discrete(d, target.distribution));
    check_pinsker(d);
  }
  return ev;
}

// ---------------------------------------------------------------- runners

namespace {

struct RunContext {
  const ExperimentConfig& cfg;
  const Model& model;
  RegularityConstants constants;
  CurveWriter& curves;
  json& summary;
};

void run_2d(RunContext& ctx) {
  const auto& c = ctx.cfg;
  const TargetDensity target = discretize_target(ctx.model, c.grid, c.refine);
  ctx.summary["target"] = {{"Z", target.Z}, {"log_Z", target.log_Z}, {"refine", target.refine}};
  const bool strong = ctx.constants.tag == RegularityConstants::Tag::strongly_convex_F;

  for (const auto& s : c.samplers) {
    const SamplerConfig sc = sampler_config(s, ctx.model, c.seed);
    const auto snaps = c.snapshots.empty() ? log_spaced_iters(sc.iterations(), c.snapshot_count)
                                           : c.snapshots;
    const Initializer init =
        c.init == "data" ? start_at_data(ctx.model) : target_histogram_init(target, c.seed + 1);
    const Evaluation2D ev = evaluate_2d(ctx.model, sc, target, snaps, init, c.avg_burn_in);

    const std::string& L = s.label;
    for (std::size_t i = 0; i < ev.iters.size(); ++i) {
      ctx.curves.row(ev.iters[i], L, "w2", ev.w2[i]);
      ctx.curves.row(ev.iters[i], L, "w2_sq", ev.w2[i] * ev.w2[i]);
      ctx.curves.row(ev.iters[i], L, "tv", ev.tv[i]);
      ctx.curves.row(ev.iters[i], L, "kl", ev.kl[i]);
    }
    for (std::size_t i = 0; i < ev.avg_n.size(); ++i) {
      ctx.curves.row(ev.avg_n[i] + c.avg_burn_in, L, "kl_avg", ev.kl_avg[i]);
      ctx.curves.row(ev.avg_n[i] + c.avg_burn_in, L, "tv_avg", ev.tv_avg[i]);
    }

    json bounds = {{"dimension_dependent", ctx.constants.dimension_dependent},
                   {"w0_source", "exact W2^2 between the initial histogram and the target"}};
    const bool splitting = s.algorithm == Algorithm::prox_sub || s.algorithm == Algorithm::grad_sub;
    if (splitting && strong) {
      const BoundVariant v =
          s.algorithm == Algorithm::prox_sub ? BoundVariant::prox : BoundVariant::grad;
      const double w0 = v == BoundVariant::prox ? ev.w0_sq : ev.w0_sq_sg;
      try {
        for (std::size_t k : ev.iters) {
          const double b = s.schedule == "constant"
                               ? w2_bound_strong(ctx.constants, s.tau, k, w0, v)
                               : w2_bound_varying(ctx.constants, sc.schedule, k, w0, v);
          ctx.curves.row(k, L, "w2_sq", b, "bound");
        }
        bounds["w2_sq"] = {{"emitted", true}, {"w0_sq", w0}};
      } catch (const std::invalid_argument& e) {
        bounds["w2_sq"] = {{"emitted", false}, {"reason", e.what()}};
      }
    }
    const bool kl_applies = s.algorithm == Algorithm::prox_sub ||
                            s.algorithm == Algorithm::sub ||
                            (s.algorithm == Algorithm::grad_sub && !strong);
    if (kl_applies && s.schedule == "constant") {
      try {
        for (std::size_t n : ev.avg_n) {
          const double b = strong
                               ? kl_bound_strong(ctx.constants, s.tau, n, c.avg_burn_in, ev.w0_sq)
                               : kl_bound_general(ctx.constants, s.tau, n, c.avg_burn_in, ev.w0_sq);
          ctx.curves.row(n + c.avg_burn_in, L, "kl_avg", b, "bound");
        }
        bounds["kl_avg"] = {{"emitted", true}, {"form", strong ? "strong" : "general"}};
      } catch (const std::invalid_argument& e) {
        bounds["kl_avg"] = {{"emitted", false}, {"reason", e.what()}};
      }
    }

    ctx.summary["samplers"][L] = {
        {"algorithm", to_string(s.algorithm)},
        {"tau", s.tau},
        {"seed", sc.master_seed},
        {"stats", stats_json(ev.stats)},
        {"seconds_per_1000", ev.stats.seconds_per_1000()},
        {"acceptance_rate", ev.stats.acceptance_rate()},
        {"clamped", ev.clamped},
        {"binned", ev.binned},
        {"pinsker_ok", ev.pinsker_ok},
        {"pinsker_checked", ev.pinsker_checked},
        {"w0_sq", ev.w0_sq},
        {"w0_sq_after_subgradient", ev.w0_sq_sg},
        {"final_w2", ev.w2.back()},
        {"bounds", bounds}};
  }
}

void run_ar1(RunContext& ctx) {
  const auto& c = ctx.cfg;
  for (const auto& s : c.samplers) {
    const SamplerConfig sc = sampler_config(s, ctx.model, c.seed);
    const auto snaps = c.snapshots.empty() ? log_spaced_iters(sc.iterations(), c.snapshot_count)
                                           : c.snapshots;
    const EnsembleResult r = run_ensemble(ctx.model, sc, snaps);
    double last = 0.0;
    for (const Snapshot& snap : r.snapshots) {
      MomentAccumulator acc(1);
      for (double v : snap.states) acc.accumulate(std::span<const double>(&v, 1));
      last = acc.variance()[0];
      ctx.curves.row(snap.iter, s.label, "variance", last);
    }
    json e = {{"algorithm", to_string(s.algorithm)},
              {"tau", s.tau},
              {"seed", sc.master_seed},
              {"stats", stats_json(r.stats)},
              {"seconds_per_1000", r.stats.seconds_per_1000()},
              {"acceptance_rate", r.stats.acceptance_rate()},
              {"empirical_variance", last}};
    std::optional<double> expected;
    if (s.schedule == "constant") {
      const double t = s.tau;
      if (s.algorithm == Algorithm::grad_sub) expected = 1.0 / (1.0 - t / 2.0);
      if (s.algorithm == Algorithm::prox_sub) expected = 2.0 * (1 + t) * (1 + t) / (2.0 + t);
    }
    if (expected) {
      e["expected_variance"] = *expected;
      e["relative_error"] = std::abs(last - *expected) / *expected;
      for (const Snapshot& snap : r.snapshots) {
        ctx.curves.row(snap.iter, s.label, "variance", *expected, "bound");
      }
    } else {
      e["expected_variance"] = nullptr;
    }
    ctx.summary["samplers"][s.label] = e;
  }
}

void run_imaging(RunContext& ctx, const Image& truth, const std::filesystem::path& dir) {
  const auto& c = ctx.cfg;
  const Image& y = ctx.model.data();
  const std::size_t rows = y.rows(), cols = y.cols();
  write_image_pgm(dir / "truth.pgm", truth);
  write_image_pgm(dir / "data.pgm", y);
  write_image_csv(dir / "data.csv", y);
  const bool strong = ctx.constants.tag == RegularityConstants::Tag::strongly_convex_F;
  const bool phantom_truth = c.image_path.empty();
  const EdgeMasks masks = phantom_truth ? edge_masks(truth) : EdgeMasks{};

  for (const auto& s : c.samplers) {
    const SamplerConfig sc = sampler_config(s, ctx.model, c.seed);
    std::vector<std::size_t> cps;
    for (std::size_t v : log_spaced_iters(s.samples, c.snapshot_count)) {
      if (v > 0) cps.push_back(v);
    }
    const ChainResult r = run_single_chain(ctx.model, sc, cps);
    const Moments mom = finalize(r.moments);
    Image mean(rows, cols, mom.mean), var(rows, cols, mom.variance);

    const std::string& L = s.label;
    for (const auto& [n, m] : r.mean_checkpoints) {
      ctx.curves.row(s.burn_in + n, L, "rmse_truth", rms_diff(m, truth.values()));
    }
    write_image_pgm(dir / ("mean_" + L + ".pgm"), mean);
    write_image_csv(dir / ("mean_" + L + ".csv"), mean);
    const double vmax = *std::max_element(mom.variance.begin(), mom.variance.end());
    Image vscaled = var;
    if (vmax > 0.0) {
      for (double& v : vscaled.values()) v /= vmax;
    }
    write_image_pgm(dir / ("variance_" + L + ".pgm"), vscaled);
    write_image_csv(dir / ("variance_" + L + ".csv"), var);

    // W2^2 from a point mass at y is |y - mean|^2 + trace(cov)
    double w0 = 0.0;
    for (std::size_t i = 0; i < mom.mean.size(); ++i) {
      w0 += (y.values()[i] - mom.mean[i]) * (y.values()[i] - mom.mean[i]) + mom.variance[i];
    }
    json bounds = {{"dimension_dependent", ctx.constants.dimension_dependent},
                   {"note", "indicative only; L_G grows with the number of pixels"},
                   {"w0_sq_estimate", w0}};
    const bool splitting = s.algorithm == Algorithm::prox_sub || s.algorithm == Algorithm::grad_sub;
    if (splitting && strong && s.schedule == "constant") {
      const BoundVariant v =
          s.algorithm == Algorithm::prox_sub ? BoundVariant::prox : BoundVariant::grad;
      try {
        for (const auto& [n, m] : r.mean_checkpoints) {
          (void)m;
          ctx.curves.row(s.burn_in + n, L, "w2_sq",
                         w2_bound_strong(ctx.constants, s.tau, s.burn_in + n, w0, v), "bound");
        }
        bounds["w2_sq"] = {{"emitted", true}};
      } catch (const std::invalid_argument& e) {
        bounds["w2_sq"] = {{"emitted", false}, {"reason", e.what()}};
      }
    }

    json e = {{"algorithm", to_string(s.algorithm)},
              {"tau", s.tau},
              {"seed", sc.master_seed},
              {"burn_in", s.burn_in},
              {"samples", s.samples},
              {"stats", stats_json(r.stats)},
              {"seconds_per_1000", r.stats.seconds_per_1000()},
              {"acceptance_rate", r.stats.acceptance_rate()},
              {"rmse_truth", rms_diff(mom.mean, truth.values())},
              {"mean_variance",
               std::accumulate(mom.variance.begin(), mom.variance.end(), 0.0) /
                   static_cast<double>(mom.variance.size())},
              {"bounds", bounds}};
    if (phantom_truth && !masks.edge.empty() && !masks.flat.empty()) {
      double ve = 0.0, vf = 0.0;
      for (std::size_t i : masks.edge) ve += mom.variance[i];
      for (std::size_t i : masks.flat) vf += mom.variance[i];
      ve /= static_cast<double>(masks.edge.size());
      vf /= static_cast<double>(masks.flat.size());
      e["edge_variance"] = ve;
      e["flat_variance"] = vf;
      e["edge_flat_ratio"] = ve / vf;
    }
    ctx.summary["samplers"][L] = e;
  }
}

}  // namespace

json run_experiment(const ExperimentConfig& c) {
  BuiltModel built = build_model(c);
  const Model& model = built.model;
  validate(c, model);

  const std::filesystem::path dir = c.output_dir;
  std::filesystem::create_directories(dir);
  {
    std::ofstream cfg(dir / "config.json");
    cfg << to_json(c).dump(2) << '\n';
  }

  json summary;
  summary["experiment"] = to_string(c.kind);
  summary["name"] = c.name;
  summary["seed"] = c.seed;
  const RegularityConstants constants = regularity_constants(model);
  summary["constants"] = constants_json(constants);
  json caps = json::array();
  for (const auto& r : step_caps(c, model)) {
    caps.push_back({{"sampler", r.sampler},
                    {"rule", r.rule},
                    {"tau", r.tau},
                    {"cap", std::isinf(r.cap) ? json(nullptr) : json(r.cap)}});
  }
  summary["caps"] = caps;
  summary["samplers"] = json::object();

  const auto t0 = std::chrono::steady_clock::now();
  {
    CurveWriter curves(dir / "curves.csv");
    RunContext ctx{c, model, constants, curves, summary};
    if (is_2d(c.kind)) {
      summary["grid"] = to_json(c)["grid"];
      run_2d(ctx);
    } else if (c.kind == ExperimentKind::ar1_oracle) {
      run_ar1(ctx);
    } else {
      summary["image"] = {{"rows", model.data().rows()},
                          {"cols", model.data().cols()},
                          {"source", c.image_path.empty() ? "phantom" : c.image_path},
                          {"data_seed", c.data_seed}};
      run_imaging(ctx, *built.truth, dir);
    }
  }
  summary["wall_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ofstream out(dir / "summary.json");
  out << summary.dump(2) << '\n';
  return summary;
}

// ---------------------------------------------------------------- presets

namespace {

SamplerSpec spec(Algorithm a, double tau, std::size_t burn_in, std::size_t samples,
                 std::size_t chains, std::string label = {}) {
  SamplerSpec s;
  s.algorithm = a;
  s.tau = tau;
  s.burn_in = burn_in;
  s.samples = samples;
  s.chains = chains;
  s.label = label.empty() ? std::string(to_string(a)) + "_tau" + fmt(tau) : std::move(label);
  return s;
}

ExperimentConfig imaging_preset(ExperimentKind kind, std::string name, std::size_t size,
                                std::size_t burn_in, std::size_t samples, bool full) {
  ExperimentConfig c;
  c.kind = kind;
  c.name = name;
  c.image_size = size;
  c.output_dir = "out/" + name;
  c.snapshot_count = 20;
  const bool den = kind == ExperimentKind::denoise;
  c.sigma = den ? 0.05 : 0.01;
  c.lambda = den ? 30.0 : 20.0;
  const double tau = den ? 1e-5 : 1e-6;
  c.samplers.push_back(spec(Algorithm::grad_sub, tau, burn_in, samples, 1, "grad_sub"));
  c.samplers.push_back(spec(Algorithm::prox_sub, tau, burn_in, samples, 1, "prox_sub"));
  if (!den) c.samplers.back().cap_regime = "general";
  if (full) {
    auto my = spec(Algorithm::myula, tau, burn_in, samples, 1, "myula");
    my.theta = 1e-4;
    c.samplers.push_back(my);
    if (!den) {
      c.samplers.push_back(spec(Algorithm::mh_grad_sub, tau, 3000000, 1000000, 1, "mh_grad_sub"));
    }
  }
  return c;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"ar1",          "tvl2-2d",       "tvl2-2d-timing", "tvl1-2d",
          "denoise-small", "denoise-paper", "deconv-small",   "deconv-paper"};
}

ExperimentConfig preset(std::string_view name) {
  ExperimentConfig c;
  c.name = std::string(name);
  c.output_dir = "out/" + std::string(name);
  if (name == "ar1") {
    c.kind = ExperimentKind::ar1_oracle;
    c.snapshot_count = 10;
    c.samplers = {spec(Algorithm::grad_sub, 0.1, 0, 500, 100000, "grad_sub"),
                  spec(Algorithm::prox_sub, 0.1, 0, 500, 100000, "prox_sub")};
  } else if (name == "tvl2-2d" || name == "tvl1-2d") {
    c.kind = name == "tvl2-2d" ? ExperimentKind::sample2d_tvl2 : ExperimentKind::sample2d_tvl1;
    const Algorithm second = name == "tvl2-2d" ? Algorithm::grad_sub : Algorithm::sub;
    for (double tau : {1e-3, 1e-4}) {
      c.samplers.push_back(spec(Algorithm::prox_sub, tau, 0, 20000, 10000));
      c.samplers.push_back(spec(second, tau, 0, 20000, 10000));
    }
  } else if (name == "tvl2-2d-timing") {
    c.kind = ExperimentKind::sample2d_tvl2;
    c.snapshot_count = 5;
    c.samplers = {spec(Algorithm::grad_sub, 1e-3, 0, 1000, 1000, "grad_sub"),
                  spec(Algorithm::prox_sub, 1e-3, 0, 1000, 1000, "prox_sub"),
                  spec(Algorithm::myula, 1e-3, 0, 1000, 1000, "myula"),
                  spec(Algorithm::pmala, 1e-3, 0, 1000, 1000, "pmala")};
  } else if (name == "denoise-small") {
    c = imaging_preset(ExperimentKind::denoise, c.name, 64, 100000, 10000, false);
  } else if (name == "denoise-paper") {
    c = imaging_preset(ExperimentKind::denoise, c.name, 256, 1000000, 100000, true);
  } else if (name == "deconv-small") {
    c = imaging_preset(ExperimentKind::deconv, c.name, 64, 100000, 10000, false);
  } else if (name == "deconv-paper") {
    c = imaging_preset(ExperimentKind::deconv, c.name, 256, 1000000, 500000, true);
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "'");
  }
  return c;
}

}  // namespace nsl

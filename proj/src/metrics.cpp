#include "nsl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "network_simplex.hpp"

namespace nsl {

namespace {

constexpr double mass_scale = 1e12;

void require_same_support(const DiscreteDistribution& mu, const DiscreteDistribution& nu,
                          const char* what) {
  if (mu.size() != nu.size() || mu.support.size() != mu.size() ||
      nu.support.size() != nu.size()) {
    throw std::invalid_argument(std::string(what) + ": distributions live on different supports");
  }
  if (mu.grid && nu.grid && !(*mu.grid == *nu.grid)) {
    throw std::invalid_argument(std::string(what) + ": grid mismatch");
  }
}

struct Scaled {
  std::vector<Point2> points;
  std::vector<std::int64_t> mass;
  std::vector<std::size_t> index;  // position in the original distribution
};

Scaled scale_masses(const DiscreteDistribution& d) {
  Scaled s;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto q = static_cast<std::int64_t>(std::llround(d.mass[i] * mass_scale));
    if (q > 0) {
      s.points.push_back(d.support[i]);
      s.mass.push_back(q);
      s.index.push_back(i);
    }
  }
  if (s.mass.empty()) throw std::invalid_argument("optimal_transport: distribution has no mass");
  return s;
}

// Moves the rounding discrepancy onto the heaviest atom of the lighter side.
void balance(Scaled& a, Scaled& b) {
  std::int64_t sa = 0, sb = 0;
  for (auto v : a.mass) sa += v;
  for (auto v : b.mass) sb += v;
  if (sa == sb) return;
  Scaled& light = sa < sb ? a : b;
  const auto it = std::max_element(light.mass.begin(), light.mass.end());
  *it += sa < sb ? sb - sa : sa - sb;
}

}  // namespace

TargetDensity discretize_target(const Potential2D& potential, const Grid2D& grid,
                                std::size_t refine) {
  grid.validate();
  if (refine == 0) throw std::invalid_argument("discretize_target: refine must be >= 1");
  const std::size_t r = refine;
  const double hx = grid.dx() / static_cast<double>(r);
  const double hy = grid.dy() / static_cast<double>(r);

  // -U at every sub-point, then a log-sum-exp per bin.
  std::vector<double> log_bin(grid.size());
  std::vector<double> vals(r * r);
  for (std::size_t ix = 0; ix < grid.bins_x; ++ix) {
    for (std::size_t iy = 0; iy < grid.bins_y; ++iy) {
      const double x0 = grid.x_min + static_cast<double>(ix) * grid.dx();
      const double y0 = grid.y_min + static_cast<double>(iy) * grid.dy();
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < r; ++a) {
        for (std::size_t b = 0; b < r; ++b) {
          const double u = potential(x0 + (static_cast<double>(a) + 0.5) * hx,
                                     y0 + (static_cast<double>(b) + 0.5) * hy);
          if (!std::isfinite(u)) throw std::domain_error("discretize_target: U is not finite");
          vals[a * r + b] = -u;
          top = std::max(top, -u);
        }
      }
      double s = 0.0;
      for (double v : vals) s += std::exp(v - top);
      // log of (mean exp(-U)) * bin area
      log_bin[ix * grid.bins_y + iy] =
          top + std::log(s / static_cast<double>(r * r)) + std::log(grid.bin_area());
    }
  }
  const double top = *std::max_element(log_bin.begin(), log_bin.end());
  double s = 0.0;
  for (double v : log_bin) s += std::exp(v - top);
  TargetDensity t;
  t.log_Z = top + std::log(s);
  t.Z = std::exp(t.log_Z);
  t.grid = grid;
  t.refine = refine;
  t.distribution.support = grid.centers();
  t.distribution.grid = grid;
  t.distribution.mass.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    t.distribution.mass[i] = std::exp(log_bin[i] - t.log_Z);
  }
  return t;
}

TargetDensity discretize_target(const Model& model, const Grid2D& grid, std::size_t refine) {
  if (model.dim() != 2) throw std::invalid_argument("discretize_target: model must be 2D");
  std::vector<double> kx(model.k().range_size());
  return discretize_target(
      [&model, &kx](double a, double b) {
        const double x[2] = {a, b};
        return eval_U(model, x, kx);
      },
      grid, refine);
}

TransportResult optimal_transport(const DiscreteDistribution& mu, const DiscreteDistribution& nu) {
  mu.check_normalized(1e-9);
  nu.check_normalized(1e-9);
  Scaled a = scale_masses(mu);
  Scaled b = scale_masses(nu);
  balance(a, b);
  detail::TransportSimplex solver(a.points, a.mass, b.points, b.mass);
  if (!solver.run()) throw std::runtime_error("optimal_transport: solver failed");
  TransportResult res;
  res.pivots = solver.pivots();
  for (const auto& f : solver.flows()) {
    res.plan.push_back({a.index[f.source], b.index[f.sink],
                        static_cast<double>(f.amount) / mass_scale});
  }
  res.cost = std::max(0.0, solver.total_cost() / mass_scale);
  return res;
}

double w2_exact(const DiscreteDistribution& mu, const DiscreteDistribution& nu) {
  return std::sqrt(optimal_transport(mu, nu).cost);
}

double kl_discrete(const DiscreteDistribution& mu, const DiscreteDistribution& nu) {
  require_same_support(mu, nu, "kl_discrete");
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double p = mu.mass[i];
    if (p <= 0.0) continue;
    const double q = nu.mass[i];
    if (q <= 0.0) return std::numeric_limits<double>::infinity();
    s += p * std::log(p / q);
  }
  return std::max(0.0, s);
}

double tv_discrete(const DiscreteDistribution& mu, const DiscreteDistribution& nu) {
  require_same_support(mu, nu, "tv_discrete");
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) s += std::abs(mu.mass[i] - nu.mass[i]);
  return 0.5 * s;
}

InequalityCheck pinsker_check(const DiscreteDistribution& mu, const DiscreteDistribution& nu) {
  InequalityCheck c;
  c.lhs = tv_discrete(mu, nu);
  c.rhs = std::sqrt(kl_discrete(mu, nu) / 2.0);
  c.pass = c.lhs <= c.rhs + 1e-12;
  return c;
}

InequalityCheck mean_error_bound_check(const DiscreteDistribution& mu,
                                       const DiscreteDistribution& nu) {
  const Point2 a = mu.mean();
  const Point2 b = nu.mean();
  InequalityCheck c;
  c.lhs = (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]);
  c.rhs = optimal_transport(mu, nu).cost;
  c.pass = c.lhs <= c.rhs + 1e-9;
  return c;
}

}  // namespace nsl

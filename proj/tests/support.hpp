// Independent reference implementations used by the tests.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "nsl/estimation.hpp"
#include "nsl/linops.hpp"

namespace testsupport {

inline nsl::DiscreteDistribution random_distribution(std::size_t n, std::mt19937_64& gen,
                                                     double spread = 2.0) {
  std::uniform_real_distribution<double> pos(-spread, spread);
  std::uniform_real_distribution<double> w(0.05, 1.0);
  nsl::DiscreteDistribution d;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d.support.push_back({pos(gen), pos(gen)});
    d.mass.push_back(w(gen));
    s += d.mass.back();
  }
  for (double& p : d.mass) p /= s;
  return d;
}

// Minimum transport cost by enumerating every basis of the transportation
// polytope (n + m - 1 cells) and keeping the cheapest feasible vertex.
inline double brute_force_ot(const nsl::DiscreteDistribution& a,
                             const nsl::DiscreteDistribution& b) {
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  const int cells = n * m;
  const int k = n + m - 1;
  Eigen::MatrixXd C(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const double dx = a.support[i][0] - b.support[j][0];
      const double dy = a.support[i][1] - b.support[j][1];
      C(i, j) = dx * dx + dy * dy;
    }
  }
  Eigen::VectorXd rhs(n + m);
  for (int i = 0; i < n; ++i) rhs(i) = a.mass[i];
  for (int j = 0; j < m; ++j) rhs(n + j) = b.mass[j];

  double best = std::numeric_limits<double>::infinity();
  std::vector<int> pick(k);
  for (int i = 0; i < k; ++i) pick[i] = i;
  while (true) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + m, k);
    for (int c = 0; c < k; ++c) {
      A(pick[c] / m, c) = 1.0;
      A(n + pick[c] % m, c) = 1.0;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (qr.rank() == k) {
      const Eigen::VectorXd x = qr.solve(rhs);
      if ((A * x - rhs).cwiseAbs().maxCoeff() < 1e-12 && x.minCoeff() > -1e-13) {
        double cost = 0.0;
        for (int c = 0; c < k; ++c) cost += x(c) * C(pick[c] / m, pick[c] % m);
        best = std::min(best, cost);
      }
    }
    int i = k - 1;
    while (i >= 0 && pick[i] == cells - k + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int j = i + 1; j < k; ++j) pick[j] = pick[j - 1] + 1;
  }
  return best;
}

// Standard normal conditioned on z > a (Robert's exponential proposal in the tail).
inline double normal_above(double a, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  if (a <= 0.5) {
    while (true) {
      const double z = nd(gen);
      if (z > a) return z;
    }
  }
  const double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
  std::exponential_distribution<double> ex(alpha);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  while (true) {
    const double z = a + ex(gen);
    if (u(gen) <= std::exp(-0.5 * (z - alpha) * (z - alpha))) return z;
  }
}

inline double log_phi_cdf(double z) { return std::log(0.5 * std::erfc(-z / std::sqrt(2.0))); }

// Exact draws from pi(x) ~ exp(-|x - y|^2/(2 s^2) - lambda |x2 - x1|). In the
// rotated frame u = (x1+x2)/sqrt2, v = (x2-x1)/sqrt2 the law factorizes:
// u ~ N(u_y, s^2), v has density ~ exp(-(v - v_y)^2/(2 s^2) - sqrt2 lambda |v|),
// a two-piece mixture of truncated normals.
class TvL2Exact {
 public:
  TvL2Exact(double y1, double y2, double s, double lambda) : s_(s) {
    const double r2 = std::sqrt(2.0);
    uy_ = (y1 + y2) / r2;
    const double vy = (y2 - y1) / r2;
    const double a = r2 * lambda;
    mu_pos_ = vy - a * s * s;
    mu_neg_ = vy + a * s * s;
    const double lw_pos = (mu_pos_ * mu_pos_ - vy * vy) / (2 * s * s) + log_phi_cdf(mu_pos_ / s);
    const double lw_neg = (mu_neg_ * mu_neg_ - vy * vy) / (2 * s * s) + log_phi_cdf(-mu_neg_ / s);
    const double top = std::max(lw_pos, lw_neg);
    p_pos_ = std::exp(lw_pos - top) / (std::exp(lw_pos - top) + std::exp(lw_neg - top));
  }

  nsl::Point2 draw(std::mt19937_64& gen) const {
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double u = uy_ + s_ * nd(gen);
    double v;
    if (u01(gen) < p_pos_) {
      v = mu_pos_ + s_ * normal_above(-mu_pos_ / s_, gen);
    } else {
      v = -(-mu_neg_ + s_ * normal_above(mu_neg_ / s_, gen));
    }
    const double r2 = std::sqrt(2.0);
    return {(u - v) / r2, (u + v) / r2};
  }

  double p_positive() const { return p_pos_; }

 private:
  double s_, uy_, mu_pos_, mu_neg_, p_pos_;
};

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testsupport

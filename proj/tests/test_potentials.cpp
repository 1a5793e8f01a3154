#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "nsl/potentials.hpp"
#include "support.hpp"

using namespace nsl;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& gen, double s = 1.0) {
  std::normal_distribution<double> nd(0.0, s);
  std::vector<double> v(n);
  for (double& e : v) e = nd(gen);
  return v;
}

Image random_image(std::size_t n, std::size_t m, std::mt19937_64& gen) {
  Image x(n, m);
  x.values() = random_vec(n * m, gen);
  return x;
}

// Dense matrix of x -> k * x on an n x m grid, built column by column.
Eigen::MatrixXd dense_conv(const Image& kernel, std::size_t n, std::size_t m) {
  Eigen::MatrixXd A(n * m, n * m);
  for (std::size_t c = 0; c < n * m; ++c) {
    Image e(n, m);
    e.values()[c] = 1.0;
    const Image col = convolve2d_periodic(e, kernel);
    for (std::size_t r = 0; r < n * m; ++r) A(r, c) = col.values()[r];
  }
  return A;
}

// prox of theta lambda |x2 - x1|: shrink the difference coordinate.
std::array<double, 2> pairwise_shrink(double x1, double x2, double t) {
  const double d = x2 - x1;
  const double s = (d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0)) * std::min(t, std::abs(d) / 2.0);
  return {x1 + s, x2 - s};
}

}  // namespace

TEST_CASE("U on the 2D TV-L2 model") {
  const Model m = Model::tv_l2_2d({-1, 1}, 1.0, 5.0);
  const double y[2] = {-1, 1};
  CHECK(eval_U(m, y) == doctest::Approx(10.0));
  const double flat[2] = {0.5, 0.5};
  CHECK(eval_U(m, flat) == doctest::Approx(m.eval_F(flat)));
  const Model free = Model::tv_l2_2d({-1, 1}, 1.0, 0.0);
  const double x[2] = {0.3, 2.0};
  CHECK(eval_U(free, x) == doctest::Approx(free.eval_F(x)));
}

TEST_CASE("smooth F gradients") {
  const Model m = Model::tv_l2_2d({-1, 1}, 1.0, 5.0);
  double g[2];
  const double y[2] = {-1, 1};
  grad_F(m, y, g);
  CHECK(g[0] == 0.0);
  CHECK(g[1] == 0.0);
  const double x[2] = {0, 1};
  grad_F(m, x, g);
  CHECK(g[0] == doctest::Approx(1.0));
  CHECK(g[1] == doctest::Approx(0.0));

  const Model l1 = Model::tv_l1_2d({-1, 1}, 1.0, 5.0);
  CHECK_THROWS_AS(grad_F(l1, x, g), std::invalid_argument);
}

TEST_CASE("conv_l2 gradient against central differences") {
  std::mt19937_64 gen(1);
  const Image k = gaussian_kernel(3, 0.9);
  const Model m = Model::tv_deconv(random_image(6, 6, gen), k, 0.5, 1.0);
  const auto x = random_vec(36, gen);
  std::vector<double> g(36);
  grad_F(m, x, g);
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t i = 0; i < 36; ++i) {
    auto xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const double fd = (m.eval_F(xp) - m.eval_F(xm)) / (2 * h);
    worst = std::max(worst, std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i])));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("prox of F examples") {
  const Model m = Model::tv_l2_2d({-1, 1}, 1.0, 5.0);
  const double y[2] = {-1, 1};
  double out[2];
  prox_F(m, 0.7, y, out);
  CHECK(out[0] == doctest::Approx(-1.0));
  CHECK(out[1] == doctest::Approx(1.0));

  const Model l1 = Model::tv_l1_2d({-1, 1}, 1.0, 5.0);
  const double x[2] = {-1 + 0.3, 1 - 2.0};
  prox_F(l1, 0.5, x, out);
  CHECK(out[0] == doctest::Approx(-1.0));
  CHECK(out[1] == doctest::Approx(1 - 1.5));
}

TEST_CASE("Fourier prox of the blur term matches a dense linear solve") {
  std::mt19937_64 gen(2);
  const Image k = gaussian_kernel(5, 1.0);
  const Eigen::MatrixXd A = dense_conv(k, 8, 8);
  for (int t = 0; t < 10; ++t) {
    const double sigma = 0.1 + 0.5 * t / 10.0, tau = 0.01 * (t + 1);
    const Image y = random_image(8, 8, gen);
    const Model m = Model::tv_deconv(y, k, sigma, 1.0);
    const auto x = random_vec(64, gen);
    std::vector<double> out(64);
    prox_F(m, tau, x, out);
    const double c = tau / (sigma * sigma);
    const Eigen::Map<const Eigen::VectorXd> xv(x.data(), 64), yv(y.values().data(), 64);
    const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(64, 64) + c * A.transpose() * A;
    const Eigen::VectorXd ref = M.ldlt().solve(xv + c * A.transpose() * yv);
    double worst = 0.0;
    for (int i = 0; i < 64; ++i) worst = std::max(worst, std::abs(ref(i) - out[i]));
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("prox optimality residuals") {
  std::mt19937_64 gen(3);
  const Model m = Model::tv_deconv(random_image(6, 6, gen), gaussian_kernel(3, 1.0), 0.3, 1.0);
  const auto x = random_vec(36, gen);
  std::vector<double> p(36), g(36);
  const double tau = 0.05;
  prox_F(m, tau, x, p);
  grad_F(m, p, g);
  for (std::size_t i = 0; i < 36; ++i) CHECK(std::abs((x[i] - p[i]) / tau - g[i]) < 1e-8);

  const Model l1 = Model::tv_l1_2d({0.2, -0.4}, 2.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const auto v = random_vec(2, gen);
    double q[2];
    prox_F(l1, 0.3, v, q);
    const double yv[2] = {0.2, -0.4};
    for (int i = 0; i < 2; ++i) {
      const double r = (v[i] - q[i]) / 0.3;
      if (q[i] != yv[i]) {
        CHECK(r == doctest::Approx((q[i] > yv[i] ? 1.0 : -1.0) / 2.0));
      } else {
        CHECK(std::abs(r) <= 0.5 + 1e-12);
      }
    }
  }
}

TEST_CASE("prox maps are nonexpansive") {
  std::mt19937_64 gen(4);
  const Model l2 = Model::tv_l2_2d({-1, 1}, 0.7, 5.0);
  const Model l1 = Model::tv_l1_2d({-1, 1}, 1.0, 5.0);
  for (int t = 0; t < 200; ++t) {
    const auto a = random_vec(2, gen, 3.0), b = random_vec(2, gen, 3.0);
    for (const Model* m : {&l2, &l1}) {
      double pa[2], pb[2];
      prox_F(*m, 0.4, a, pa);
      prox_F(*m, 0.4, b, pb);
      const double lhs = std::hypot(pa[0] - pb[0], pa[1] - pb[1]);
      CHECK(lhs <= std::hypot(a[0] - b[0], a[1] - b[1]) + 1e-12);
    }
    const GSpec g{GKind::scaled_abs, 5.0};
    const auto op = LinearOperator::difference2d();
    const auto qa = prox_GK_pd(g, op, 0.3, a, {1e-10, 100000}).point;
    const auto qb = prox_GK_pd(g, op, 0.3, b, {1e-10, 100000}).point;
    CHECK(std::hypot(qa[0] - qb[0], qa[1] - qb[1]) <=
          std::hypot(a[0] - b[0], a[1] - b[1]) + 1e-8);
  }
}

TEST_CASE("subgradient selection") {
  const GSpec g{GKind::scaled_abs, 5.0};
  double out[3];
  const double zero[1] = {0.0};
  subgrad_G_select(g, zero, std::span<double>(out, 1));
  CHECK(out[0] == 0.0);
  const double neg[1] = {-3.0};
  subgrad_G_select(g, neg, std::span<double>(out, 1));
  CHECK(out[0] == -5.0);
  const GSpec tv{GKind::aniso_tv_l1, 2.0};
  const double mixed[3] = {1.5, 0.0, -0.1};
  subgrad_G_select(tv, mixed, out);
  CHECK(out[0] == 2.0);
  CHECK(out[1] == 0.0);
  CHECK(out[2] == -2.0);

  std::mt19937_64 gen(5);
  for (int t = 0; t < 200; ++t) {
    auto p = random_vec(6, gen);
    if (t % 3 == 0) p[t % 6] = 0.0;
    const auto r = random_vec(6, gen);
    std::vector<double> q(6);
    subgrad_G_select(tv, p, q);
    double lin = 0.0;
    for (int i = 0; i < 6; ++i) lin += q[i] * (r[i] - p[i]);
    CHECK(tv.value(p) + lin <= tv.value(r) + 1e-12);
  }
}

TEST_CASE("Lipschitz constants of the data terms and G") {
  CHECK(NonsmoothF::l1_shift(Image(1, 2), 1.0).lipschitz() == doctest::Approx(std::sqrt(2.0)));
  const GSpec g{GKind::scaled_abs, 5.0};
  CHECK(g.lipschitz(1) == 5.0);
  const GSpec tv{GKind::aniso_tv_l1, 3.0};
  CHECK(tv.lipschitz(2 * 4 * 5) == doctest::Approx(3.0 * std::sqrt(40.0)));
  const SmoothF f = SmoothF::l2_shift(Image(2, 2), 0.05);
  CHECK(f.lipschitz_grad() == doctest::Approx(400.0));
  CHECK(f.strong_convexity() == doctest::Approx(400.0));
}

TEST_CASE("primal-dual prox of G o K matches pairwise shrinkage") {
  std::mt19937_64 gen(6);
  const auto op = LinearOperator::difference2d();
  const GSpec g{GKind::scaled_abs, 5.0};
  for (double theta : {1e-4, 1e-2, 1.0}) {
    for (int t = 0; t < 50; ++t) {
      const auto x = random_vec(2, gen, 2.0);
      const auto r = prox_GK_pd(g, op, theta, x, {1e-8, 1000000});
      CHECK(r.converged);
      const auto ref = pairwise_shrink(x[0], x[1], theta * 5.0);
      CHECK(std::abs(r.point[0] - ref[0]) < 1e-6);
      CHECK(std::abs(r.point[1] - ref[1]) < 1e-6);
    }
  }
  const double flat[2] = {0.4, 0.4};
  const auto f = prox_GK_pd(g, op, 0.5, flat);
  CHECK(f.point[0] == doctest::Approx(0.4));
  CHECK(f.point[1] == doctest::Approx(0.4));
  const auto z = prox_GK_pd(GSpec{GKind::scaled_abs, 0.0}, op, 0.5, std::vector<double>{1, 3});
  CHECK(z.point[0] == 1.0);
  CHECK(z.point[1] == 3.0);
}

TEST_CASE("primal-dual objective is close to the closed-form optimum") {
  std::mt19937_64 gen(7);
  const auto op = LinearOperator::difference2d();
  const GSpec g{GKind::scaled_abs, 5.0};
  const auto objective = [&](const std::array<double, 2>& z, const std::vector<double>& x) {
    return ((z[0] - x[0]) * (z[0] - x[0]) + (z[1] - x[1]) * (z[1] - x[1])) / (2 * 0.1) +
           5.0 * std::abs(z[1] - z[0]);
  };
  for (int t = 0; t < 100; ++t) {
    const auto x = random_vec(2, gen, 2.0);
    const auto r = prox_GK_pd(g, op, 0.1, x);
    const double got = objective({r.point[0], r.point[1]}, x);
    const double best = objective(pairwise_shrink(x[0], x[1], 0.5), x);
    CHECK(got >= best - 1e-12);
    CHECK(got - best < 1e-3);
  }
}

TEST_CASE("primal-dual non-convergence is reported") {
  const auto r = prox_GK_pd(GSpec{GKind::scaled_abs, 5.0}, LinearOperator::difference2d(), 1.0,
                            std::vector<double>{-2.0, 3.0}, {1e-14, 2});
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 2);
  CHECK(r.point.size() == 2);
}

TEST_CASE("prox of F + G o K against grid search") {
  const Model m = Model::tv_l2_2d({-1, 1}, 1.0, 5.0);
  const double tau = 0.2;
  const std::vector<double> x = {0.5, 1.5};
  const auto r = prox_FGK_pd(m, tau, x, {1e-10, 100000});
  const int n = 2001;
  const double h = 8.0 / (n - 1);
  double best = 1e300;
  std::array<double, 2> arg{};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double z[2] = {-4 + i * h, -4 + j * h};
      const double v = eval_U(m, z) * tau +
                       0.5 * ((z[0] - x[0]) * (z[0] - x[0]) + (z[1] - x[1]) * (z[1] - x[1]));
      if (v < best) {
        best = v;
        arg = {z[0], z[1]};
      }
    }
  }
  CHECK(std::abs(r.point[0] - arg[0]) <= h);
  CHECK(std::abs(r.point[1] - arg[1]) <= h);
}

TEST_CASE("prox of F + G o K degenerate cases") {
  const Model free = Model::tv_l2_2d({-1, 1}, 1.0, 0.0);
  const std::vector<double> x = {2.0, -0.5};
  const auto r = prox_FGK_pd(free, 0.3, x);
  double ref[2];
  prox_F(free, 0.3, x, ref);
  CHECK(r.point[0] == doctest::Approx(ref[0]));
  CHECK(r.point[1] == doctest::Approx(ref[1]));

  const Model m = Model::tv_l2_2d({0.25, 0.25}, 1.0, 5.0);
  const auto f = prox_FGK_pd(m, 0.3, std::vector<double>{0.25, 0.25});
  CHECK(f.point[0] == doctest::Approx(0.25));
  CHECK(f.point[1] == doctest::Approx(0.25));
}

TEST_CASE("Moreau envelope") {
  const auto op = LinearOperator::difference2d();
  const GSpec g{GKind::scaled_abs, 5.0};
  const std::vector<double> flat = {0.7, 0.7};
  CHECK(moreau_value(g, op, 0.1, flat) == doctest::Approx(0.0));
  const auto g0 = moreau_grad(g, op, 0.1, flat);
  CHECK(g0[0] == doctest::Approx(0.0));
  CHECK(g0[1] == doctest::Approx(0.0));

  const PdOptions tight{1e-12, 1000000};
  const std::vector<double> x = {-0.3, 0.05};
  const double theta = 0.02;
  const auto grad = moreau_grad(g, op, theta, x, tight);
  const double h = 1e-5;
  for (int i = 0; i < 2; ++i) {
    auto xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const double fd =
        (moreau_value(g, op, theta, xp, tight) - moreau_value(g, op, theta, xm, tight)) / (2 * h);
    CHECK(std::abs(fd - grad[i]) <= 1e-4 * std::max(1.0, std::abs(grad[i])));
  }

  // the envelope decreases as theta grows
  double prev = 1e300;
  for (double th : {1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
    const double v = moreau_value(g, op, th, x, tight);
    CHECK(v <= prev + 1e-12);
    prev = v;
  }

  std::mt19937_64 gen(8);
  for (int t = 0; t < 100; ++t) {
    const auto a = random_vec(2, gen), b = random_vec(2, gen);
    const auto ga = moreau_grad(g, op, 0.05, a, tight), gb = moreau_grad(g, op, 0.05, b, tight);
    CHECK(std::hypot(ga[0] - gb[0], ga[1] - gb[1]) <=
          std::hypot(a[0] - b[0], a[1] - b[1]) / 0.05 + 1e-6);
  }
}

TEST_CASE("Model validation") {
  CHECK_THROWS_AS(Model(SmoothF::l2_shift(Image(3, 3), 1.0), GSpec{GKind::aniso_tv_l1, 1.0},
                        LinearOperator::grad2d(4, 4)),
                  std::invalid_argument);
  CHECK_THROWS_AS(SmoothF::l2_shift(Image(2, 2), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(NonsmoothF::l1_shift(Image(1, 2), -1.0), std::invalid_argument);
}

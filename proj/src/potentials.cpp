#include "nsl/potentials.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace nsl {

namespace {

constexpr double kSingularThreshold = 1e-14;

double sign_or_zero(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument(std::string(what) + " must be positive and finite");
  }
}

void require_size(std::span<const double> x, std::size_t n, const char* where) {
  if (x.size() != n) {
    throw std::invalid_argument(std::string(where) + ": expected " + std::to_string(n) +
                                " entries, got " + std::to_string(x.size()));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// FourierConvolution

FourierConvolution::FourierConvolution(std::size_t rows, std::size_t cols, const Image& kernel)
    : rows_(rows), cols_(cols) {
  std::vector<std::complex<double>> a(rows * cols);
  std::vector<std::complex<double>> b(rows * cols);
  const int n = static_cast<int>(rows);
  const int m = static_cast<int>(cols);
  forward_plan_ = fftw_plan_dft_2d(n, m, reinterpret_cast<fftw_complex*>(a.data()),
                                   reinterpret_cast<fftw_complex*>(b.data()), FFTW_FORWARD,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
  backward_plan_ = fftw_plan_dft_2d(n, m, reinterpret_cast<fftw_complex*>(a.data()),
                                    reinterpret_cast<fftw_complex*>(b.data()), FFTW_BACKWARD,
                                    FFTW_ESTIMATE | FFTW_UNALIGNED);
  const Image embedded = embed_kernel(kernel, rows, cols);
  forward(embedded.span(), khat_);
}

FourierConvolution::~FourierConvolution() {
  if (forward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  if (backward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(backward_plan_));
}

void FourierConvolution::forward(std::span<const double> x,
                                 std::vector<std::complex<double>>& out) const {
  std::vector<std::complex<double>> in(x.begin(), x.end());
  out.resize(in.size());
  fftw_execute_dft(static_cast<fftw_plan>(forward_plan_),
                   reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

void FourierConvolution::inverse(std::vector<std::complex<double>>& in,
                                 std::span<double> out) const {
  std::vector<std::complex<double>> tmp(in.size());
  fftw_execute_dft(static_cast<fftw_plan>(backward_plan_),
                   reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(tmp.data()));
  const double scale = 1.0 / static_cast<double>(tmp.size());
  for (std::size_t i = 0; i < tmp.size(); ++i) out[i] = tmp[i].real() * scale;
}

// ---------------------------------------------------------------------------
// SmoothF

SmoothF SmoothF::l2_shift(Image y, double sigma) {
  require_positive(sigma, "sigma");
  SmoothF f;
  f.kind_ = SmoothKind::l2_shift;
  f.y_ = std::move(y);
  f.sigma_ = sigma;
  f.lipschitz_grad_ = 1.0 / (sigma * sigma);
  f.strong_convexity_ = 1.0 / (sigma * sigma);
  return f;
}

SmoothF SmoothF::conv_l2(Image y, const Image& kernel, double sigma) {
  require_positive(sigma, "sigma");
  SmoothF f;
  f.kind_ = SmoothKind::conv_l2;
  f.sigma_ = sigma;
  f.kernel_ = kernel;
  f.blur_ = std::make_shared<const LinearOperator>(
      LinearOperator::conv2d(y.rows(), y.cols(), kernel));
  f.fourier_ = std::make_shared<const FourierConvolution>(y.rows(), y.cols(), kernel);
  double top = 0.0;
  double bottom = std::numeric_limits<double>::infinity();
  for (const auto& v : f.fourier_->transfer()) {
    top = std::max(top, std::norm(v));
    bottom = std::min(bottom, std::norm(v));
  }
  // rounding leaves ~1e-33 where the transfer function has exact zeros
  if (bottom < 1e-12 * top) bottom = 0.0;
  f.lipschitz_grad_ = top / (sigma * sigma);
  f.strong_convexity_ = bottom / (sigma * sigma);
  std::vector<std::complex<double>> yhat;
  f.fourier_->forward(y.span(), yhat);
  f.yhat_ = std::make_shared<const std::vector<std::complex<double>>>(std::move(yhat));
  f.y_ = std::move(y);
  return f;
}

double SmoothF::value(std::span<const double> x) const {
  require_size(x, y_.size(), "SmoothF::value");
  const double inv = 1.0 / (2.0 * sigma_ * sigma_);
  double s = 0.0;
  if (kind_ == SmoothKind::l2_shift) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = x[i] - y_.values()[i];
      s += r * r;
    }
  } else {
    std::vector<double> ax(x.size());
    blur_->apply(x, ax);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = ax[i] - y_.values()[i];
      s += r * r;
    }
  }
  return s * inv;
}

void SmoothF::gradient(std::span<const double> x, std::span<double> out) const {
  require_size(x, y_.size(), "SmoothF::gradient");
  const double inv = 1.0 / (sigma_ * sigma_);
  if (kind_ == SmoothKind::l2_shift) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - y_.values()[i]) * inv;
    return;
  }
  std::vector<double> r(x.size());
  blur_->apply(x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = (r[i] - y_.values()[i]) * inv;
  blur_->adjoint(r, out);
}

void SmoothF::prox(double tau, std::span<const double> x, std::span<double> out) const {
  require_size(x, y_.size(), "SmoothF::prox");
  require_positive(tau, "prox step");
  const double c = tau / (sigma_ * sigma_);
  if (kind_ == SmoothKind::l2_shift) {
    const double scale = 1.0 / (1.0 + c);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = scale * (x[i] + c * y_.values()[i]);
    return;
  }
  // (I + c A^T A) z = x + c A^T y diagonalizes in the Fourier basis.
  std::vector<std::complex<double>> xhat;
  fourier_->forward(x, xhat);
  const auto& yhat = *yhat_;
  const auto& khat = fourier_->transfer();
  for (std::size_t i = 0; i < xhat.size(); ++i) {
    const double denom = 1.0 + c * std::norm(khat[i]);
    if (std::abs(denom) < kSingularThreshold) {
      throw SingularProx("conv_l2 prox: vanishing Fourier denominator at bin " +
                         std::to_string(i));
    }
    xhat[i] = (xhat[i] + c * std::conj(khat[i]) * yhat[i]) / denom;
  }
  fourier_->inverse(xhat, out);
}

// ---------------------------------------------------------------------------
// NonsmoothF

NonsmoothF NonsmoothF::l1_shift(Image y, double b) {
  require_positive(b, "b");
  NonsmoothF f;
  f.y_ = std::move(y);
  f.b_ = b;
  return f;
}

double NonsmoothF::lipschitz() const {
  return std::sqrt(static_cast<double>(y_.size())) / b_;
}

double NonsmoothF::value(std::span<const double> x) const {
  require_size(x, y_.size(), "NonsmoothF::value");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y_.values()[i]);
  return s / b_;
}

void NonsmoothF::prox(double tau, std::span<const double> x, std::span<double> out) const {
  require_size(x, y_.size(), "NonsmoothF::prox");
  require_positive(tau, "prox step");
  const double t = tau / b_;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = x[i] - y_.values()[i];
    out[i] = y_.values()[i] + sign_or_zero(r) * std::max(0.0, std::abs(r) - t);
  }
}

void NonsmoothF::subgradient(std::span<const double> x, std::span<double> out) const {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = sign_or_zero(x[i] - y_.values()[i]) / b_;
}

// ---------------------------------------------------------------------------
// GSpec

double GSpec::value(std::span<const double> p) const {
  double s = 0.0;
  for (double v : p) s += std::abs(v);
  return lambda * s;
}

double GSpec::lipschitz(std::size_t range_dim) const {
  if (kind == GKind::scaled_abs) return lambda;
  return lambda * std::sqrt(static_cast<double>(range_dim));
}

void subgrad_G_select(const GSpec& g, std::span<const double> p, std::span<double> out) {
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = g.lambda * sign_or_zero(p[i]);
}

// ---------------------------------------------------------------------------
// Model

Model::Model(DataTerm f, GSpec g, LinearOperator k)
    : f_(std::move(f)), g_(g), k_(std::move(k)) {
  const std::size_t fdim = std::visit([](const auto& t) { return t.dim(); }, f_);
  if (fdim != k_.domain_size()) {
    throw std::invalid_argument("Model: data term has " + std::to_string(fdim) +
                                " entries but K acts on " + std::to_string(k_.domain_size()));
  }
  if (!(g_.lambda >= 0.0) || !std::isfinite(g_.lambda)) {
    throw std::invalid_argument("Model: lambda must be finite and >= 0");
  }
}

Model Model::tv_l2_2d(Vec2 y, double sigma, double lambda) {
  return Model(SmoothF::l2_shift(Image(1, 2, {y.x1, y.x2}), sigma),
               GSpec{GKind::scaled_abs, lambda}, LinearOperator::difference2d());
}

Model Model::tv_l1_2d(Vec2 y, double b, double lambda) {
  return Model(NonsmoothF::l1_shift(Image(1, 2, {y.x1, y.x2}), b),
               GSpec{GKind::scaled_abs, lambda}, LinearOperator::difference2d());
}

Model Model::tv_denoise(Image y, double sigma, double lambda) {
  const std::size_t n = y.rows();
  const std::size_t m = y.cols();
  return Model(SmoothF::l2_shift(std::move(y), sigma), GSpec{GKind::aniso_tv_l1, lambda},
               LinearOperator::grad2d(n, m));
}

Model Model::tv_deconv(Image y, const Image& kernel, double sigma, double lambda) {
  const std::size_t n = y.rows();
  const std::size_t m = y.cols();
  return Model(SmoothF::conv_l2(std::move(y), kernel, sigma), GSpec{GKind::aniso_tv_l1, lambda},
               LinearOperator::grad2d(n, m));
}

const SmoothF& Model::smooth_f() const {
  if (const auto* f = std::get_if<SmoothF>(&f_)) return *f;
  throw std::invalid_argument("model data term is not differentiable");
}

const Image& Model::data() const {
  return std::visit([](const auto& t) -> const Image& { return t.data(); }, f_);
}

double Model::eval_F(std::span<const double> x) const {
  return std::visit([&](const auto& t) { return t.value(x); }, f_);
}

double Model::eval_GK(std::span<const double> x, std::span<double> kx_scratch) const {
  if (g_.lambda == 0.0) return 0.0;
  k_.apply(x, kx_scratch);
  return g_.value(kx_scratch);
}

double eval_U(const Model& model, std::span<const double> x) {
  std::vector<double> kx(model.k().range_size());
  return eval_U(model, x, kx);
}

double eval_U(const Model& model, std::span<const double> x, std::span<double> kx_scratch) {
  return model.eval_F(x) + model.eval_GK(x, kx_scratch);
}

void grad_F(const Model& model, std::span<const double> x, std::span<double> out) {
  model.smooth_f().gradient(x, out);
}

void prox_F(const Model& model, double tau, std::span<const double> x, std::span<double> out) {
  std::visit([&](const auto& t) { t.prox(tau, x, out); }, model.f());
}

void subgrad_F_select(const Model& model, std::span<const double> x, std::span<double> out) {
  if (const auto* f = std::get_if<SmoothF>(&model.f())) {
    f->gradient(x, out);
  } else {
    std::get<NonsmoothF>(model.f()).subgradient(x, out);
  }
}

// ---------------------------------------------------------------------------
// Primal-dual prox solver

namespace {

// Solves min_z h(z) + weight * lambda |Kz|_1 where the primal prox of h with
// step t is supplied by `primal_prox(t, v, out)`.
template <class PrimalProx>
PdResult chambolle_pock(const LinearOperator& k, double dual_bound, std::span<const double> x,
                        PdOptions opts, PrimalProx&& primal_prox) {
  if (!(opts.tol > 0.0)) throw std::invalid_argument("primal-dual tol must be positive");
  const std::size_t n = k.domain_size();
  const std::size_t r = k.range_size();
  PdResult res;
  res.point.assign(x.begin(), x.end());
  if (dual_bound == 0.0) {
    // G vanishes; only h remains.
    primal_prox(std::numeric_limits<double>::infinity(), x, std::span<double>(res.point));
    res.converged = true;
    return res;
  }
  const double step = 0.95 / std::sqrt(k.norm_sq_bound());
  std::vector<double> z(x.begin(), x.end());
  std::vector<double> zbar = z;
  std::vector<double> znew(n);
  std::vector<double> p(r, 0.0);
  std::vector<double> kz(r);
  std::vector<double> ktp(n);
  std::vector<double> v(n);
  for (int it = 1; it <= opts.max_iters; ++it) {
    k.apply(zbar, kz);
    for (std::size_t i = 0; i < r; ++i) {
      p[i] = std::clamp(p[i] + step * kz[i], -dual_bound, dual_bound);
    }
    k.adjoint(p, ktp);
    for (std::size_t i = 0; i < n; ++i) v[i] = z[i] - step * ktp[i];
    primal_prox(step, v, znew);
    double diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      diff = std::max(diff, std::abs(znew[i] - z[i]));
      zbar[i] = 2.0 * znew[i] - z[i];
    }
    z.swap(znew);
    res.iterations = it;
    if (diff < opts.tol) {
      res.converged = true;
      break;
    }
  }
  res.point = std::move(z);
  return res;
}

}  // namespace

PdResult prox_GK_pd(const GSpec& g, const LinearOperator& k, double theta,
                    std::span<const double> x, PdOptions opts) {
  require_positive(theta, "theta");
  require_size(x, k.domain_size(), "prox_GK_pd");
  // h(z) = |z - x|^2 / 2 scaled problem: argmin theta G(Kz) + |z - x|^2 / 2.
  auto primal = [&](double t, std::span<const double> v, std::span<double> out) {
    if (std::isinf(t)) {
      std::copy(x.begin(), x.end(), out.begin());
      return;
    }
    const double s = 1.0 / (1.0 + t);
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] + t * x[i]) * s;
  };
  return chambolle_pock(k, theta * g.lambda, x, opts, primal);
}

PdResult prox_FGK_pd(const Model& model, double tau, std::span<const double> x,
                     PdOptions opts) {
  require_positive(tau, "tau");
  require_size(x, model.dim(), "prox_FGK_pd");
  // h(z) = tau F(z) + |z - x|^2 / 2; its prox with step t is
  // prox_{t tau/(1+t) F}((v + t x)/(1+t)).
  std::vector<double> mid(x.size());
  auto primal = [&](double t, std::span<const double> v, std::span<double> out) {
    if (std::isinf(t)) {
      prox_F(model, tau, x, out);
      return;
    }
    const double s = 1.0 / (1.0 + t);
    for (std::size_t i = 0; i < v.size(); ++i) mid[i] = (v[i] + t * x[i]) * s;
    prox_F(model, t * tau * s, mid, out);
  };
  return chambolle_pock(model.k(), tau * model.g().lambda, x, opts, primal);
}

MoreauResult moreau_envelope(const GSpec& g, const LinearOperator& k, double theta,
                             std::span<const double> x, PdOptions opts) {
  const PdResult pr = prox_GK_pd(g, k, theta, x, opts);
  MoreauResult out;
  out.converged = pr.converged;
  out.gradient.resize(x.size());
  double dist = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - pr.point[i];
    dist += d * d;
    out.gradient[i] = d / theta;
  }
  std::vector<double> kz(k.range_size());
  k.apply(pr.point, kz);
  out.value = dist / (2.0 * theta) + g.value(kz);
  return out;
}

double moreau_value(const GSpec& g, const LinearOperator& k, double theta,
                    std::span<const double> x, PdOptions opts) {
  return moreau_envelope(g, k, theta, x, opts).value;
}

std::vector<double> moreau_grad(const GSpec& g, const LinearOperator& k, double theta,
                                std::span<const double> x, PdOptions opts) {
  return moreau_envelope(g, k, theta, x, opts).gradient;
}

}  // namespace nsl

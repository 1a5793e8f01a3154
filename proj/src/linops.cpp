#include "nsl/linops.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace nsl {

Image::Image(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Image::Image(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw std::invalid_argument("Image: data length " + std::to_string(data_.size()) +
                                " does not match " + std::to_string(rows_) + "x" +
                                std::to_string(cols_));
  }
}

double apply_difference(Vec2 x) { return x.x2 - x.x1; }

Vec2 adjoint_difference(double s) { return {-s, s}; }

namespace {

void grad2d_raw(std::size_t n, std::size_t m, std::span<const double> x, std::span<double> p1,
                std::span<double> p2) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t idx = i * m + j;
      p1[idx] = (i + 1 < n) ? x[idx + m] - x[idx] : 0.0;
      p2[idx] = (j + 1 < m) ? x[idx + 1] - x[idx] : 0.0;
    }
  }
}

// Negative discrete divergence; exact transpose of grad2d_raw.
void grad2d_adjoint_raw(std::size_t n, std::size_t m, std::span<const double> p1,
                        std::span<const double> p2, std::span<double> out) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t idx = i * m + j;
      double v = 0.0;
      if (i + 1 < n) v -= p1[idx];
      if (i > 0) v += p1[idx - m];
      if (j + 1 < m) v -= p2[idx];
      if (j > 0) v += p2[idx - 1];
      out[idx] = v;
    }
  }
}

void check_kernel(const Image& kernel, std::size_t n, std::size_t m) {
  const std::size_t s = kernel.rows();
  if (s == 0 || kernel.cols() != s || s % 2 == 0) {
    throw std::invalid_argument("convolution kernel must be square with odd size");
  }
  if (s > std::min(n, m)) {
    throw std::invalid_argument("convolution kernel larger than image");
  }
}

// out = k * x (circular), or the adjoint (correlation) when `adjoint` is set.
void conv_raw(std::size_t n, std::size_t m, const Image& kernel, std::span<const double> x,
              std::span<double> out, bool adjoint) {
  const auto s = static_cast<long>(kernel.rows());
  const long c = s / 2;
  const auto ln = static_cast<long>(n);
  const auto lm = static_cast<long>(m);
  for (long i = 0; i < ln; ++i) {
    for (long j = 0; j < lm; ++j) {
      double acc = 0.0;
      for (long a = 0; a < s; ++a) {
        const long di = a - c;
        const long ii = adjoint ? (i + di) : (i - di);
        const long wi = ((ii % ln) + ln) % ln;
        for (long b = 0; b < s; ++b) {
          const long dj = b - c;
          const long jj = adjoint ? (j + dj) : (j - dj);
          const long wj = ((jj % lm) + lm) % lm;
          acc += kernel(static_cast<std::size_t>(a), static_cast<std::size_t>(b)) *
                 x[static_cast<std::size_t>(wi * lm + wj)];
        }
      }
      out[static_cast<std::size_t>(i * lm + j)] = acc;
    }
  }
}

}  // namespace

PairField apply_grad2d(const Image& x) {
  PairField p{Image(x.rows(), x.cols()), Image(x.rows(), x.cols())};
  grad2d_raw(x.rows(), x.cols(), x.span(), p.p1.span(), p.p2.span());
  return p;
}

Image adjoint_grad2d(const PairField& p) {
  if (!p.p1.same_shape(p.p2)) throw std::invalid_argument("PairField planes differ in shape");
  Image out(p.p1.rows(), p.p1.cols());
  grad2d_adjoint_raw(out.rows(), out.cols(), p.p1.span(), p.p2.span(), out.span());
  return out;
}

Image convolve2d_periodic(const Image& x, const Image& kernel) {
  check_kernel(kernel, x.rows(), x.cols());
  Image out(x.rows(), x.cols());
  conv_raw(x.rows(), x.cols(), kernel, x.span(), out.span(), false);
  return out;
}

ComplexImage dft2(const Image& x) {
  ComplexImage X{x.rows(), x.cols(), std::vector<std::complex<double>>(x.size())};
  if (x.size() == 0) return X;
  std::vector<std::complex<double>> in(x.values().begin(), x.values().end());
  fftw_plan plan = fftw_plan_dft_2d(
      static_cast<int>(x.rows()), static_cast<int>(x.cols()),
      reinterpret_cast<fftw_complex*>(in.data()), reinterpret_cast<fftw_complex*>(X.data.data()),
      FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  return X;
}

Image idft2(const ComplexImage& X) {
  Image out(X.rows, X.cols);
  if (X.data.empty()) return out;
  std::vector<std::complex<double>> in = X.data;
  std::vector<std::complex<double>> tmp(X.data.size());
  fftw_plan plan = fftw_plan_dft_2d(
      static_cast<int>(X.rows), static_cast<int>(X.cols),
      reinterpret_cast<fftw_complex*>(in.data()), reinterpret_cast<fftw_complex*>(tmp.data()),
      FFTW_BACKWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  const double scale = 1.0 / static_cast<double>(X.data.size());
  for (std::size_t i = 0; i < tmp.size(); ++i) out.values()[i] = tmp[i].real() * scale;
  return out;
}

Image embed_kernel(const Image& kernel, std::size_t rows, std::size_t cols) {
  check_kernel(kernel, rows, cols);
  const std::size_t s = kernel.rows();
  const std::size_t c = s / 2;
  Image out(rows, cols);
  for (std::size_t a = 0; a < s; ++a) {
    for (std::size_t b = 0; b < s; ++b) {
      const std::size_t i = (a + rows - c) % rows;
      const std::size_t j = (b + cols - c) % cols;
      out(i, j) += kernel(a, b);
    }
  }
  return out;
}

Image gaussian_kernel(std::size_t size, double stddev) {
  if (size % 2 == 0 || size == 0) throw std::invalid_argument("kernel size must be odd");
  if (!(stddev > 0.0)) throw std::invalid_argument("kernel stddev must be positive");
  Image k(size, size);
  const double c = static_cast<double>(size / 2);
  double total = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = 0; j < size; ++j) {
      const double di = static_cast<double>(i) - c;
      const double dj = static_cast<double>(j) - c;
      k(i, j) = std::exp(-(di * di + dj * dj) / (2.0 * stddev * stddev));
      total += k(i, j);
    }
  }
  for (double& v : k.values()) v /= total;
  return k;
}

LinearOperator::LinearOperator(OperatorKind kind, std::size_t rows, std::size_t cols)
    : kind_(kind), rows_(rows), cols_(cols) {}

LinearOperator LinearOperator::difference2d() {
  LinearOperator op(OperatorKind::difference2d, 1, 2);
  // K*K = [[1,-1],[-1,1]]
  op.norm_sq_bound_ = 2.0;
  return op;
}

LinearOperator LinearOperator::grad2d(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("grad2d needs a non-empty grid");
  LinearOperator op(OperatorKind::grad2d, rows, cols);
  // K*K is a Kronecker sum of two path-graph Laplacians whose spectra are
  // 2 - 2cos(pi k / n), k = 0..n-1.
  const auto top = [](std::size_t n) {
    return 2.0 - 2.0 * std::cos(std::numbers::pi * static_cast<double>(n - 1) /
                                static_cast<double>(n));
  };
  op.norm_sq_bound_ = top(rows) + top(cols);
  return op;
}

LinearOperator LinearOperator::conv2d(std::size_t rows, std::size_t cols, const Image& kernel) {
  check_kernel(kernel, rows, cols);
  LinearOperator op(OperatorKind::conv2d, rows, cols);
  op.kernel_ = kernel;
  // Circulant: singular values are |k_hat| over the DFT bins.
  const ComplexImage khat = dft2(embed_kernel(kernel, rows, cols));
  double top = 0.0;
  for (const auto& v : khat.data) top = std::max(top, std::norm(v));
  op.norm_sq_bound_ = top;
  return op;
}

std::size_t LinearOperator::range_size() const {
  switch (kind_) {
    case OperatorKind::difference2d:
      return 1;
    case OperatorKind::grad2d:
      return 2 * rows_ * cols_;
    case OperatorKind::conv2d:
      return rows_ * cols_;
  }
  return 0;
}

void LinearOperator::apply(std::span<const double> x, std::span<double> out) const {
  if (x.size() != domain_size() || out.size() != range_size()) {
    throw std::invalid_argument("LinearOperator::apply: shape mismatch");
  }
  switch (kind_) {
    case OperatorKind::difference2d:
      out[0] = x[1] - x[0];
      break;
    case OperatorKind::grad2d: {
      const std::size_t n = rows_ * cols_;
      grad2d_raw(rows_, cols_, x, out.subspan(0, n), out.subspan(n, n));
      break;
    }
    case OperatorKind::conv2d:
      conv_raw(rows_, cols_, kernel_, x, out, false);
      break;
  }
}

void LinearOperator::adjoint(std::span<const double> p, std::span<double> out) const {
  if (p.size() != range_size() || out.size() != domain_size()) {
    throw std::invalid_argument("LinearOperator::adjoint: shape mismatch");
  }
  switch (kind_) {
    case OperatorKind::difference2d:
      out[0] = -p[0];
      out[1] = p[0];
      break;
    case OperatorKind::grad2d: {
      const std::size_t n = rows_ * cols_;
      grad2d_adjoint_raw(rows_, cols_, p.subspan(0, n), p.subspan(n, n), out);
      break;
    }
    case OperatorKind::conv2d:
      conv_raw(rows_, cols_, kernel_, p, out, true);
      break;
  }
}

NormEstimate power_iteration_norm_sq(const LinearOperator& op, int iters, double tol,
                                     std::uint64_t seed) {
  if (iters < 1) throw std::invalid_argument("power iteration needs iters >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> v(op.domain_size());
  for (double& e : v) e = normal(rng);
  std::vector<double> kv(op.range_size());
  std::vector<double> w(op.domain_size());

  NormEstimate est;
  double previous = 0.0;
  for (int it = 1; it <= iters; ++it) {
    const double nv = std::sqrt(norm_sq(v));
    if (nv == 0.0) {
      est.value = 0.0;
      est.iterations = it;
      est.converged = true;
      return est;
    }
    for (double& e : v) e /= nv;
    op.apply(v, kv);
    op.adjoint(kv, w);
    // Rayleigh quotient of K*K at the unit vector v.
    const double lambda = dot(v, w);
    est.value = lambda;
    est.iterations = it;
    if (it > 1 && std::abs(lambda - previous) <= tol * std::max(std::abs(lambda), 1e-300)) {
      est.converged = true;
      return est;
    }
    previous = lambda;
    v.swap(w);
  }
  return est;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm_sq(std::span<const double> a) { return dot(a, a); }

}  // namespace nsl

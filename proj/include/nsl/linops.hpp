#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace nsl {

struct Vec2 {
  double x1 = 0.0;
  double x2 = 0.0;
};

/// Row-major n x m real image. Also used as a generic flat state for the
/// low-dimensional models (a Vec2 is a 1 x 2 image).
class Image {
 public:
  Image() = default;
  Image(std::size_t rows, std::size_t cols, double fill = 0.0);
  Image(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> span() { return data_; }
  std::span<const double> span() const { return data_; }
  const std::vector<double>& values() const { return data_; }
  std::vector<double>& values() { return data_; }

  bool same_shape(const Image& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Output of the forward-difference operator: vertical (p1) and horizontal
/// (p2) difference planes, each shaped like the source image.
struct PairField {
  Image p1;
  Image p2;
};

struct ComplexImage {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::complex<double>> data;
};

double apply_difference(Vec2 x);
Vec2 adjoint_difference(double s);

PairField apply_grad2d(const Image& x);
Image adjoint_grad2d(const PairField& p);

/// Circular convolution with an odd-sized kernel whose middle entry is the
/// origin.
Image convolve2d_periodic(const Image& x, const Image& kernel);

/// Unnormalized forward transform; the inverse carries the 1/(nm) factor.
ComplexImage dft2(const Image& x);
Image idft2(const ComplexImage& X);

/// Zero-pads an odd kernel to rows x cols with its centre moved to (0,0),
/// so that dft2(embed) is the transfer function of convolve2d_periodic.
Image embed_kernel(const Image& kernel, std::size_t rows, std::size_t cols);

/// Normalized s x s Gaussian kernel (entries sum to one).
Image gaussian_kernel(std::size_t size, double stddev);

enum class OperatorKind { difference2d, grad2d, conv2d };

/// A linear map K acting on flat row-major buffers, with its adjoint and a
/// certified upper bound on the squared operator norm.
class LinearOperator {
 public:
  static LinearOperator difference2d();
  static LinearOperator grad2d(std::size_t rows, std::size_t cols);
  static LinearOperator conv2d(std::size_t rows, std::size_t cols, const Image& kernel);

  OperatorKind kind() const { return kind_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t domain_size() const { return rows_ * cols_; }
  std::size_t range_size() const;
  double norm_sq_bound() const { return norm_sq_bound_; }
  const Image& kernel() const { return kernel_; }

  void apply(std::span<const double> x, std::span<double> out) const;
  void adjoint(std::span<const double> p, std::span<double> out) const;

 private:
  LinearOperator(OperatorKind kind, std::size_t rows, std::size_t cols);

  OperatorKind kind_;
  std::size_t rows_;
  std::size_t cols_;
  Image kernel_;
  double norm_sq_bound_ = 0.0;
};

struct NormEstimate {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Largest eigenvalue of K*K by power iteration from a seeded random start.
NormEstimate power_iteration_norm_sq(const LinearOperator& op, int iters, double tol,
                                     std::uint64_t seed = 0x5eed);

double dot(std::span<const double> a, std::span<const double> b);
double norm_sq(std::span<const double> a);

}  // namespace nsl

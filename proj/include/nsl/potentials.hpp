#pragma once

#include <complex>
#include <memory>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "nsl/linops.hpp"

namespace nsl {

/// Thrown when the Fourier-domain prox denominator vanishes.
class SingularProx : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cached FFTW plans for one image shape plus the transfer function of a
/// fixed periodic convolution. Plans are created once; executing them from
/// several threads on distinct buffers is safe.
class FourierConvolution {
 public:
  FourierConvolution(std::size_t rows, std::size_t cols, const Image& kernel);
  ~FourierConvolution();
  FourierConvolution(const FourierConvolution&) = delete;
  FourierConvolution& operator=(const FourierConvolution&) = delete;

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const std::vector<std::complex<double>>& transfer() const { return khat_; }

  void forward(std::span<const double> x, std::vector<std::complex<double>>& out) const;
  /// Inverse transform including the 1/(nm) factor; keeps the real part.
  void inverse(std::vector<std::complex<double>>& in, std::span<double> out) const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<std::complex<double>> khat_;
  void* forward_plan_ = nullptr;
  void* backward_plan_ = nullptr;
};

enum class SmoothKind { l2_shift, conv_l2 };

/// F(x) = |A x - y|^2 / (2 sigma^2) with A the identity or a periodic blur.
class SmoothF {
 public:
  static SmoothF l2_shift(Image y, double sigma);
  static SmoothF conv_l2(Image y, const Image& kernel, double sigma);

  SmoothKind kind() const { return kind_; }
  const Image& data() const { return y_; }
  double sigma() const { return sigma_; }
  const Image& kernel() const { return kernel_; }
  std::size_t dim() const { return y_.size(); }

  double lipschitz_grad() const { return lipschitz_grad_; }
  /// Strong convexity modulus; may be 0 for conv_l2.
  double strong_convexity() const { return strong_convexity_; }

  double value(std::span<const double> x) const;
  void gradient(std::span<const double> x, std::span<double> out) const;
  /// Exact prox_{tau F}(x). Throws SingularProx for a vanishing Fourier denominator.
  void prox(double tau, std::span<const double> x, std::span<double> out) const;

 private:
  SmoothKind kind_ = SmoothKind::l2_shift;
  Image y_;
  double sigma_ = 1.0;
  Image kernel_;
  std::shared_ptr<const FourierConvolution> fourier_;
  std::shared_ptr<const std::vector<std::complex<double>>> yhat_;
  std::shared_ptr<const LinearOperator> blur_;
  double lipschitz_grad_ = 0.0;
  double strong_convexity_ = 0.0;
};

/// F(x) = |x - y|_1 / b.
class NonsmoothF {
 public:
  static NonsmoothF l1_shift(Image y, double b);

  const Image& data() const { return y_; }
  double scale() const { return b_; }
  std::size_t dim() const { return y_.size(); }
  /// Lipschitz constant w.r.t. the 2-norm: sqrt(d)/b.
  double lipschitz() const;

  double value(std::span<const double> x) const;
  void prox(double tau, std::span<const double> x, std::span<double> out) const;
  /// sign(x - y)/b with 0 at ties.
  void subgradient(std::span<const double> x, std::span<double> out) const;

 private:
  Image y_;
  double b_ = 1.0;
};

enum class GKind { scaled_abs, aniso_tv_l1 };

/// G(p) = lambda |p|_1 on the range of K.
struct GSpec {
  GKind kind = GKind::scaled_abs;
  double lambda = 0.0;

  double value(std::span<const double> p) const;
  /// Lipschitz constant of G on R^range_dim (lambda * sqrt(range_dim) for TV).
  double lipschitz(std::size_t range_dim) const;
};

/// Measurable selection lambda*sign(p) with 0 at p = 0.
void subgrad_G_select(const GSpec& g, std::span<const double> p, std::span<double> out);

using DataTerm = std::variant<SmoothF, NonsmoothF>;

/// Target potential U(x) = F(x) + G(Kx).
class Model {
 public:
  Model(DataTerm f, GSpec g, LinearOperator k);

  static Model tv_l2_2d(Vec2 y, double sigma, double lambda);
  static Model tv_l1_2d(Vec2 y, double b, double lambda);
  static Model tv_denoise(Image y, double sigma, double lambda);
  static Model tv_deconv(Image y, const Image& kernel, double sigma, double lambda);

  const DataTerm& f() const { return f_; }
  const GSpec& g() const { return g_; }
  const LinearOperator& k() const { return k_; }
  std::size_t dim() const { return k_.domain_size(); }
  bool smooth() const { return std::holds_alternative<SmoothF>(f_); }
  const SmoothF& smooth_f() const;
  const Image& data() const;

  double eval_F(std::span<const double> x) const;
  double eval_GK(std::span<const double> x, std::span<double> kx_scratch) const;

 private:
  DataTerm f_;
  GSpec g_;
  LinearOperator k_;
};

double eval_U(const Model& model, std::span<const double> x);
double eval_U(const Model& model, std::span<const double> x, std::span<double> kx_scratch);

/// Throws std::invalid_argument for a non-smooth F.
void grad_F(const Model& model, std::span<const double> x, std::span<double> out);
void prox_F(const Model& model, double tau, std::span<const double> x, std::span<double> out);
/// Gradient for smooth F, the L1 sign selection otherwise.
void subgrad_F_select(const Model& model, std::span<const double> x, std::span<double> out);

struct PdOptions {
  double tol = 1e-4;
  int max_iters = 10000;
};

struct PdResult {
  std::vector<double> point;
  int iterations = 0;
  bool converged = false;
};

/// prox_{theta (G o K)}(x) by Chambolle-Pock, stopping when consecutive primal
/// iterates differ by less than tol in the max norm.
PdResult prox_GK_pd(const GSpec& g, const LinearOperator& k, double theta,
                    std::span<const double> x, PdOptions opts = {});

/// prox_{tau (F + G o K)}(x); F enters through its own prox in the primal step.
PdResult prox_FGK_pd(const Model& model, double tau, std::span<const double> x,
                     PdOptions opts = {});

struct MoreauResult {
  double value = 0.0;
  std::vector<double> gradient;
  bool converged = false;
};

/// Moreau envelope of G o K with parameter theta: value and gradient
/// (x - prox)/theta, both through prox_GK_pd.
MoreauResult moreau_envelope(const GSpec& g, const LinearOperator& k, double theta,
                             std::span<const double> x, PdOptions opts = {});
double moreau_value(const GSpec& g, const LinearOperator& k, double theta,
                    std::span<const double> x, PdOptions opts = {});
std::vector<double> moreau_grad(const GSpec& g, const LinearOperator& k, double theta,
                                std::span<const double> x, PdOptions opts = {});

}  // namespace nsl

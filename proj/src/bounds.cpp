#include "nsl/bounds.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "nsl/samplers.hpp"

namespace nsl {

namespace {

void require_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("bounds: tau must be > 0");
}

void require_n(std::size_t n) {
  if (n == 0) throw std::invalid_argument("bounds: n must be >= 1");
}

void require_w0(double w0_sq) {
  if (!(w0_sq >= 0.0)) throw std::invalid_argument("bounds: W0_sq must be >= 0");
}

double contraction(const RegularityConstants& c, BoundVariant v) {
  return v == BoundVariant::prox ? c.m / 2.0 : c.m;
}

double bias_factor(const RegularityConstants& c) {
  return 2.0 * c.L_gradF * static_cast<double>(c.d) + c.lg2k2();
}

void require_strong(const RegularityConstants& c) {
  c.validate();
  if (!(c.m > 0.0)) throw std::invalid_argument("strongly convex bound needs m > 0");
  if (c.tag == RegularityConstants::Tag::lipschitz_F) {
    throw std::invalid_argument("strongly convex bound needs a smooth F");
  }
}

void check_cap(const RegularityConstants& c, double tau, BoundVariant v) {
  const double cap = strong_step_cap(c, v);
  if (tau > cap * (1.0 + 1e-12)) {
    throw std::invalid_argument(
        "step size " + std::to_string(tau) + " violates " +
        (v == BoundVariant::prox ? "tau <= m/(2 L_gradF^2 - m^2)" : "tau <= 1/L_gradF") +
        " = " + std::to_string(cap));
  }
}

}  // namespace

void RegularityConstants::validate() const {
  for (double v : {L_F, L_gradF, m, L_G, normK_sq}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("RegularityConstants: constants must be finite and >= 0");
    }
  }
  if (L_gradF > 0.0 && m > L_gradF * (1.0 + 1e-12)) {
    throw std::invalid_argument("RegularityConstants: m exceeds L_gradF");
  }
}

RegularityConstants regularity_constants(const Model& model) {
  RegularityConstants c;
  c.d = model.dim();
  if (model.smooth()) {
    const SmoothF& f = model.smooth_f();
    c.L_gradF = f.lipschitz_grad();
    c.m = f.strong_convexity();
    c.tag = c.m > 0.0 ? RegularityConstants::Tag::strongly_convex_F
                      : RegularityConstants::Tag::smooth_F;
  } else {
    c.L_F = std::get<NonsmoothF>(model.f()).lipschitz();
    c.tag = RegularityConstants::Tag::lipschitz_F;
  }
  c.L_G = model.g().lipschitz(model.k().range_size());
  c.normK_sq = model.k().norm_sq_bound();
  c.dimension_dependent = model.k().kind() == OperatorKind::grad2d;
  return c;
}

double phi(const RegularityConstants& c, double tau, PhiKind kind) {
  require_tau(tau);
  const double d = static_cast<double>(c.d);
  if (kind == PhiKind::lipschitz) {
    if (c.tag != RegularityConstants::Tag::lipschitz_F) {
      throw std::invalid_argument("phi: Lipschitz form requested for a smooth F");
    }
    return c.L_F * std::sqrt(2.0 * d * tau);
  }
  if (c.tag == RegularityConstants::Tag::lipschitz_F) {
    throw std::invalid_argument("phi: smooth form requested for a Lipschitz F");
  }
  return tau * c.L_gradF * d;
}

double phi(const RegularityConstants& c, double tau) {
  return phi(c, tau,
             c.tag == RegularityConstants::Tag::lipschitz_F ? PhiKind::lipschitz : PhiKind::smooth);
}

double kl_bound_general(const RegularityConstants& c, double tau, std::size_t n,
                        std::size_t /*burn_in*/, double w0_sq) {
  c.validate();
  require_tau(tau);
  require_n(n);
  require_w0(w0_sq);
  return w0_sq / (2.0 * static_cast<double>(n) * tau) + phi(c, tau) + 0.5 * tau * c.lg2k2();
}

double strong_step_cap(const RegularityConstants& c, BoundVariant variant) {
  require_strong(c);
  if (variant == BoundVariant::grad) return 1.0 / c.L_gradF;
  return c.m / (2.0 * c.L_gradF * c.L_gradF - c.m * c.m);
}

double w2_bound_strong(const RegularityConstants& c, double tau, std::size_t k, double w0_sq,
                       BoundVariant variant) {
  require_strong(c);
  require_tau(tau);
  require_w0(w0_sq);
  check_cap(c, tau, variant);
  const double rho = 1.0 - contraction(c, variant) * tau;
  const double floor = bias_factor(c) * tau * (variant == BoundVariant::prox ? 2.0 : 1.0) / c.m;
  return std::pow(rho, static_cast<double>(k)) * w0_sq + floor;
}

double kl_bound_strong(const RegularityConstants& c, double tau, std::size_t n,
                       std::size_t /*burn_in*/, double w0_sq) {
  c.validate();
  require_tau(tau);
  require_n(n);
  require_w0(w0_sq);
  if (c.tag == RegularityConstants::Tag::lipschitz_F) {
    throw std::invalid_argument("kl_bound_strong needs a smooth F");
  }
  if (c.m > 0.0) check_cap(c, tau, BoundVariant::prox);
  const double d = static_cast<double>(c.d);
  return (1.0 - c.m * tau / 2.0) * w0_sq / (2.0 * static_cast<double>(n) * tau) +
         tau * (c.L_gradF * d + 0.5 * c.lg2k2());
}

double w2_bound_varying(const RegularityConstants& c, const StepSchedule& schedule,
                        std::size_t k, double w0_sq, BoundVariant variant) {
  require_strong(c);
  require_w0(w0_sq);
  const double cap = strong_step_cap(c, variant);
  const double a = contraction(c, variant);
  const double B = bias_factor(c);
  double b = w0_sq;
  for (std::size_t j = 2; j <= k + 1; ++j) {
    const double t = schedule.tau(j);
    if (t > cap * (1.0 + 1e-12)) {
      throw std::invalid_argument("w2_bound_varying: tau_" + std::to_string(j) +
                                  " exceeds the step-size cap");
    }
    b = (1.0 - a * t) * b + B * t * t;
  }
  return b;
}

}  // namespace nsl

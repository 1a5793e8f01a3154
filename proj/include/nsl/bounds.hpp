#pragma once

#include <cstddef>

#include "nsl/potentials.hpp"

namespace nsl {

class StepSchedule;

/// Dimension and regularity constants of U = F + G o K.
struct RegularityConstants {
  enum class Tag { lipschitz_F, smooth_F, strongly_convex_F };

  std::size_t d = 0;
  double L_F = 0.0;
  double L_gradF = 0.0;
  double m = 0.0;
  double L_G = 0.0;
  double normK_sq = 0.0;
  Tag tag = Tag::smooth_F;
  /// Set for imaging models, where L_G grows like sqrt(nm) and every bound
  /// below is far from tight.
  bool dimension_dependent = false;

  void validate() const;
  /// L_G^2 |K|^2
  double lg2k2() const { return L_G * L_G * normK_sq; }
};

RegularityConstants regularity_constants(const Model& model);

enum class PhiKind { lipschitz, smooth };
enum class BoundVariant { prox, grad };

/// L_F sqrt(2 d tau) for Lipschitz F, tau L_gradF d for smooth F. Throws on a
/// kind that the constants' tag does not support.
double phi(const RegularityConstants& c, double tau, PhiKind kind);
/// phi with the kind implied by the tag.
double phi(const RegularityConstants& c, double tau);

/// Constant-step KL bound on the running average nu_n^N with unit weights:
/// W0_sq/(2 n tau) + phi(tau) + tau L_G^2 |K|^2 / 2.
double kl_bound_general(const RegularityConstants& c, double tau, std::size_t n,
                        std::size_t burn_in, double w0_sq);

/// Largest tau for which the strongly convex analysis holds:
/// m/(2 L_gradF^2 - m^2) for prox, 1/L_gradF for grad.
double strong_step_cap(const RegularityConstants& c, BoundVariant variant);

/// (1 - c tau)^k W0_sq + (2 L_gradF d + L_G^2 |K|^2) tau * (2/m or 1/m), with
/// c = m/2 for prox and m for grad. Throws when tau exceeds the variant's cap.
double w2_bound_strong(const RegularityConstants& c, double tau, std::size_t k, double w0_sq,
                       BoundVariant variant);

/// (1 - m tau/2) W0_sq/(2 n tau) + tau (L_gradF d + L_G^2 |K|^2 / 2).
double kl_bound_strong(const RegularityConstants& c, double tau, std::size_t n,
                       std::size_t burn_in, double w0_sq);

/// Product/sum form of the W2 bound for a varying schedule, evaluated by the
/// one-step recursion b_j = (1 - c tau_j) b_{j-1} + B tau_j^2, j = 2..k+1.
double w2_bound_varying(const RegularityConstants& c, const StepSchedule& schedule,
                        std::size_t k, double w0_sq, BoundVariant variant);

}  // namespace nsl

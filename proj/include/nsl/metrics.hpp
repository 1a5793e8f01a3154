#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "nsl/estimation.hpp"
#include "nsl/potentials.hpp"

namespace nsl {

/// Piecewise-constant approximation of pi on a grid.
struct TargetDensity {
  DiscreteDistribution distribution;
  /// Integral of exp(-U) over the grid rectangle (midpoint rule).
  double Z = 0.0;
  double log_Z = 0.0;
  Grid2D grid;
  std::size_t refine = 8;
};

using Potential2D = std::function<double(double x1, double x2)>;

/// Bin mass = mean of exp(-U) over refine x refine midpoints times the bin
/// area, normalized. Needs a two-dimensional model.
TargetDensity discretize_target(const Model& model, const Grid2D& grid, std::size_t refine = 8);
TargetDensity discretize_target(const Potential2D& potential, const Grid2D& grid,
                                std::size_t refine = 8);

struct TransportPlanEntry {
  std::size_t from = 0;
  std::size_t to = 0;
  double mass = 0.0;
};

struct TransportResult {
  /// Optimal squared-Euclidean cost, i.e. W2^2.
  double cost = 0.0;
  std::vector<TransportPlanEntry> plan;
  std::size_t pivots = 0;
};

/// Exact discrete optimal transport by network simplex. Masses are rounded to
/// integer multiples of 1e-12 before solving.
TransportResult optimal_transport(const DiscreteDistribution& mu, const DiscreteDistribution& nu);

/// Exact W2 distance (square root of the optimal cost).
double w2_exact(const DiscreteDistribution& mu, const DiscreteDistribution& nu);

/// KL(mu | nu) = sum mu_i log(mu_i / nu_i); +inf when mu is not << nu.
double kl_discrete(const DiscreteDistribution& mu, const DiscreteDistribution& nu);

/// Total variation distance 1/2 sum |mu_i - nu_i|.
double tv_discrete(const DiscreteDistribution& mu, const DiscreteDistribution& nu);

struct InequalityCheck {
  bool pass = false;
  double lhs = 0.0;
  double rhs = 0.0;
};

/// tv <= sqrt(kl/2) + 1e-12.
InequalityCheck pinsker_check(const DiscreteDistribution& mu, const DiscreteDistribution& nu);

/// |mean(mu) - mean(nu)|^2 <= W2^2 + 1e-9.
InequalityCheck mean_error_bound_check(const DiscreteDistribution& mu,
                                       const DiscreteDistribution& nu);

}  // namespace nsl

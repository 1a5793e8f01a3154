#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace nsl {

using Point2 = std::array<double, 2>;

/// Uniform rectangular binning of [x_min, x_max] x [y_min, y_max].
struct Grid2D {
  double x_min = -4.0;
  double x_max = 4.0;
  double y_min = -4.0;
  double y_max = 4.0;
  std::size_t bins_x = 50;
  std::size_t bins_y = 50;

  void validate() const;
  std::size_t size() const { return bins_x * bins_y; }
  double dx() const { return (x_max - x_min) / static_cast<double>(bins_x); }
  double dy() const { return (y_max - y_min) / static_cast<double>(bins_y); }
  double bin_area() const { return dx() * dy(); }
  /// Flat bin index (ix * bins_y + iy); out-of-range points are clamped and
  /// `clamped` is set.
  std::size_t locate(double x, double y, bool& clamped) const;
  Point2 center(std::size_t bin) const;
  std::vector<Point2> centers() const;

  bool operator==(const Grid2D&) const = default;
};

/// Probability masses on a finite set of points in the plane.
struct DiscreteDistribution {
  std::vector<Point2> support;
  std::vector<double> mass;
  std::optional<Grid2D> grid;

  std::size_t size() const { return mass.size(); }
  double total() const;
  Point2 mean() const;
  /// Throws unless masses are >= 0 and sum to one within tol.
  void check_normalized(double tol = 1e-12) const;
};

DiscreteDistribution point_mass_on(const Grid2D& grid, std::size_t bin);

/// Bin counts accumulated from samples; mergeable across shards.
class Histogram2D {
 public:
  explicit Histogram2D(Grid2D grid);

  void add(double x, double y, double weight = 1.0);
  void add(const Histogram2D& other);
  void reset();

  const Grid2D& grid() const { return grid_; }
  std::size_t samples() const { return samples_; }
  std::size_t clamped() const { return clamped_; }
  double clamped_fraction() const;
  const std::vector<double>& counts() const { return counts_; }
  DiscreteDistribution distribution() const;

 private:
  Grid2D grid_;
  std::vector<double> counts_;
  double weight_total_ = 0.0;
  std::size_t samples_ = 0;
  std::size_t clamped_ = 0;
};

struct HistogramResult {
  DiscreteDistribution distribution;
  std::size_t clamped = 0;
};

HistogramResult histogram(std::span<const Point2> samples, const Grid2D& grid);

/// Weighted mixture Lambda^{-1} sum_{k=N+1}^{N+n} lambda_k mu_k, where
/// distributions[k] is mu_k and weights[k] is lambda_k.
DiscreteDistribution mixture_average(std::span<const DiscreteDistribution> distributions,
                                     std::span<const double> weights, std::size_t burn_in,
                                     std::size_t n);

/// Streaming per-coordinate mean and variance (Welford), mergeable with the
/// pairwise update of Chan et al.
class MomentAccumulator {
 public:
  MomentAccumulator() = default;
  explicit MomentAccumulator(std::size_t dim);

  void accumulate(std::span<const double> sample);
  void merge(const MomentAccumulator& other);

  std::size_t dim() const { return mean_.size(); }
  std::size_t count() const { return count_; }
  const std::vector<double>& mean() const { return mean_; }
  /// Unbiased variance (divisor count - 1). Throws when count < 2.
  std::vector<double> variance() const;

 private:
  std::size_t count_ = 0;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

struct Moments {
  std::vector<double> mean;
  std::vector<double> variance;
};

Moments finalize(const MomentAccumulator& acc);

}  // namespace nsl

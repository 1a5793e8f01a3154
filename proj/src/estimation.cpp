#include "nsl/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace nsl {

void Grid2D::validate() const {
  if (!(x_min < x_max) || !(y_min < y_max)) throw std::invalid_argument("Grid2D: empty range");
  if (bins_x == 0 || bins_y == 0) throw std::invalid_argument("Grid2D: zero bins");
}

std::size_t Grid2D::locate(double x, double y, bool& clamped) const {
  const auto axis = [&clamped](double v, double lo, double hi, std::size_t bins) {
    double f = (v - lo) / (hi - lo) * static_cast<double>(bins);
    if (!(f >= 0.0)) {  // also catches NaN
      clamped = true;
      return std::size_t{0};
    }
    if (f >= static_cast<double>(bins)) {
      // The closed upper edge belongs to the last bin.
      if (v > hi) clamped = true;
      return bins - 1;
    }
    return static_cast<std::size_t>(f);
  };
  clamped = false;
  const std::size_t ix = axis(x, x_min, x_max, bins_x);
  const std::size_t iy = axis(y, y_min, y_max, bins_y);
  return ix * bins_y + iy;
}

Point2 Grid2D::center(std::size_t bin) const {
  const std::size_t ix = bin / bins_y;
  const std::size_t iy = bin % bins_y;
  return {x_min + (static_cast<double>(ix) + 0.5) * dx(),
          y_min + (static_cast<double>(iy) + 0.5) * dy()};
}

std::vector<Point2> Grid2D::centers() const {
  std::vector<Point2> out(size());
  for (std::size_t b = 0; b < out.size(); ++b) out[b] = center(b);
  return out;
}

double DiscreteDistribution::total() const {
  return std::accumulate(mass.begin(), mass.end(), 0.0);
}

Point2 DiscreteDistribution::mean() const {
  Point2 m{0.0, 0.0};
  for (std::size_t i = 0; i < mass.size(); ++i) {
    m[0] += mass[i] * support[i][0];
    m[1] += mass[i] * support[i][1];
  }
  return m;
}

void DiscreteDistribution::check_normalized(double tol) const {
  if (support.size() != mass.size()) {
    throw std::invalid_argument("distribution: support and mass lengths differ");
  }
  for (double p : mass) {
    if (!(p >= 0.0)) throw std::invalid_argument("distribution: negative or NaN mass");
  }
  const double t = total();
  if (std::abs(t - 1.0) > tol) {
    throw std::invalid_argument("distribution: masses sum to " + std::to_string(t));
  }
}

DiscreteDistribution point_mass_on(const Grid2D& grid, std::size_t bin) {
  DiscreteDistribution d{grid.centers(), std::vector<double>(grid.size(), 0.0), grid};
  d.mass.at(bin) = 1.0;
  return d;
}

Histogram2D::Histogram2D(Grid2D grid) : grid_(grid), counts_(grid.size(), 0.0) {
  grid_.validate();
}

void Histogram2D::add(double x, double y, double weight) {
  bool clamped = false;
  counts_[grid_.locate(x, y, clamped)] += weight;
  weight_total_ += weight;
  ++samples_;
  if (clamped) ++clamped_;
}

void Histogram2D::add(const Histogram2D& other) {
  if (!(other.grid_ == grid_)) throw std::invalid_argument("Histogram2D: grid mismatch");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  weight_total_ += other.weight_total_;
  samples_ += other.samples_;
  clamped_ += other.clamped_;
}

void Histogram2D::reset() {
  std::fill(counts_.begin(), counts_.end(), 0.0);
  weight_total_ = 0.0;
  samples_ = 0;
  clamped_ = 0;
}

double Histogram2D::clamped_fraction() const {
  return samples_ == 0 ? 0.0 : static_cast<double>(clamped_) / static_cast<double>(samples_);
}

DiscreteDistribution Histogram2D::distribution() const {
  if (weight_total_ <= 0.0) throw std::invalid_argument("Histogram2D: no samples");
  DiscreteDistribution d{grid_.centers(), counts_, grid_};
  for (double& p : d.mass) p /= weight_total_;
  return d;
}

HistogramResult histogram(std::span<const Point2> samples, const Grid2D& grid) {
  if (samples.empty()) throw std::invalid_argument("histogram: no samples");
  Histogram2D h(grid);
  for (const auto& s : samples) h.add(s[0], s[1]);
  return {h.distribution(), h.clamped()};
}

DiscreteDistribution mixture_average(std::span<const DiscreteDistribution> distributions,
                                     std::span<const double> weights, std::size_t burn_in,
                                     std::size_t n) {
  if (n == 0) throw std::invalid_argument("mixture_average: n must be >= 1");
  const std::size_t last = burn_in + n;
  if (distributions.size() <= last || weights.size() <= last) {
    throw std::invalid_argument("mixture_average: need distributions/weights up to index " +
                                std::to_string(last));
  }
  const DiscreteDistribution& first = distributions[burn_in + 1];
  DiscreteDistribution out{first.support, std::vector<double>(first.size(), 0.0), first.grid};
  double total_weight = 0.0;
  for (std::size_t k = burn_in + 1; k <= last; ++k) {
    const DiscreteDistribution& d = distributions[k];
    if (d.size() != out.size() || d.grid != out.grid) {
      throw std::invalid_argument("mixture_average: grid mismatch");
    }
    if (!(weights[k] >= 0.0)) throw std::invalid_argument("mixture_average: negative weight");
    total_weight += weights[k];
    for (std::size_t i = 0; i < d.size(); ++i) out.mass[i] += weights[k] * d.mass[i];
  }
  if (!(total_weight > 0.0)) throw std::invalid_argument("mixture_average: all weights zero");
  for (double& p : out.mass) p /= total_weight;
  return out;
}

MomentAccumulator::MomentAccumulator(std::size_t dim) : mean_(dim, 0.0), m2_(dim, 0.0) {}

void MomentAccumulator::accumulate(std::span<const double> sample) {
  if (sample.size() != mean_.size()) {
    throw std::invalid_argument("MomentAccumulator: sample dimension mismatch");
  }
  ++count_;
  const double inv = 1.0 / static_cast<double>(count_);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double delta = sample[i] - mean_[i];
    mean_[i] += delta * inv;
    m2_[i] += delta * (sample[i] - mean_[i]);
  }
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  if (other.mean_.size() != mean_.size()) {
    throw std::invalid_argument("MomentAccumulator: merge dimension mismatch");
  }
  const double na = static_cast<double>(count_);
  const double nb = static_cast<double>(other.count_);
  const double n = na + nb;
  for (std::size_t i = 0; i < mean_.size(); ++i) {
    const double delta = other.mean_[i] - mean_[i];
    mean_[i] += delta * nb / n;
    m2_[i] += other.m2_[i] + delta * delta * na * nb / n;
  }
  count_ += other.count_;
}

std::vector<double> MomentAccumulator::variance() const {
  if (count_ < 2) throw std::domain_error("variance undefined for fewer than two samples");
  std::vector<double> v(m2_.size());
  const double denom = static_cast<double>(count_ - 1);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::max(0.0, m2_[i] / denom);
  return v;
}

Moments finalize(const MomentAccumulator& acc) { return {acc.mean(), acc.variance()}; }

}  // namespace nsl

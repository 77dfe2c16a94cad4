#pragma once

// Gain (signal-strength) array manifold of a circular array of identical
// directional elements, and amplitude-error perturbation of it.

#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dirmusic/errors.hpp"
#include "dirmusic/pattern.hpp"

namespace dirmusic {

/// Element boresight offsets in degrees. Element k sees the incoming bearing
/// advanced by its offset.
class ArrayConfig {
 public:
  /// N elements with offsets 360 * k / N, k = 0..N-1.
  static ArrayConfig uniform(std::size_t n_elements) {
    if (n_elements == 0) throw InvalidInput("ArrayConfig: element count must be >= 1");
    std::vector<double> off(n_elements);
    for (std::size_t k = 0; k < n_elements; ++k) {
      off[k] = 360.0 * static_cast<double>(k) / static_cast<double>(n_elements);
    }
    return ArrayConfig(std::move(off), true);
  }

  /// Explicit offsets, strictly increasing in [0, 360).
  static ArrayConfig with_offsets(std::vector<double> offsets_deg) {
    if (offsets_deg.empty()) throw InvalidInput("ArrayConfig: at least one offset required");
    for (std::size_t k = 0; k < offsets_deg.size(); ++k) {
      const double o = offsets_deg[k];
      if (!std::isfinite(o) || o < 0.0 || o >= 360.0) {
        throw InvalidInput("ArrayConfig: offset " + std::to_string(k + 1) + " outside [0, 360)");
      }
      if (k > 0 && !(o > offsets_deg[k - 1])) {
        throw InvalidInput("ArrayConfig: offsets must be strictly increasing");
      }
    }
    return ArrayConfig(std::move(offsets_deg), false);
  }

  std::size_t size() const { return offsets_.size(); }
  std::span<const double> offsets() const { return offsets_; }
  bool is_uniform() const { return uniform_; }

 private:
  ArrayConfig(std::vector<double> off, bool uniform) : offsets_(std::move(off)), uniform_(uniform) {}

  std::vector<double> offsets_;
  bool uniform_ = false;
};

/// Per-element gains g_k(theta); length equals the element count.
using GainVector = Eigen::VectorXd;

/// Half-width of the zero-mean uniform amplitude error added to each gain.
struct ManifoldPerturbation {
  double half_width = 0.0;
};

inline GainVector steering_vector(const GaussianMixturePattern& p, const ArrayConfig& arr, double theta_deg) {
  const auto off = arr.offsets();
  GainVector g(static_cast<Eigen::Index>(off.size()));
  for (std::size_t k = 0; k < off.size(); ++k) {
    g(static_cast<Eigen::Index>(k)) = p.at_wrapped(wrap_angle(theta_deg + off[k]));
  }
  return g;
}

/// Adds one independent U(-eps, eps) draw to every entry. Results are not
/// clamped, so near-zero gains may turn negative.
template <class URBG>
GainVector perturb(const GainVector& g, ManifoldPerturbation pert, URBG& rng) {
  if (!std::isfinite(pert.half_width) || pert.half_width < 0.0) {
    throw InvalidInput("perturb: half-width must be finite and >= 0");
  }
  if (pert.half_width == 0.0) return g;
  std::uniform_real_distribution<double> u(-pert.half_width, pert.half_width);
  GainVector out = g;
  for (Eigen::Index k = 0; k < out.size(); ++k) out(k) += u(rng);
  return out;
}

/// Search grid 0, step, 2*step, ... strictly below 360.
inline std::vector<double> uniform_grid(double step_deg = 1.0) {
  if (!std::isfinite(step_deg) || step_deg <= 0.0 || step_deg > 360.0) {
    throw InvalidInput("uniform_grid: step must be in (0, 360]");
  }
  const auto n = static_cast<std::size_t>(std::ceil(360.0 / step_deg - 1e-9));
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) grid[i] = static_cast<double>(i) * step_deg;
  return grid;
}

/// N x |grid| matrix whose column j is steering_vector(grid[j]).
inline Eigen::MatrixXd manifold_matrix(const GaussianMixturePattern& p, const ArrayConfig& arr,
                                       std::span<const double> grid) {
  if (grid.empty()) throw InvalidInput("manifold_matrix: empty grid");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(arr.size()), static_cast<Eigen::Index>(grid.size()));
  for (std::size_t j = 0; j < grid.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = steering_vector(p, arr, grid[j]);
  return m;
}

}  // namespace dirmusic

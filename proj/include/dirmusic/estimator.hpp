#pragma once

// Dir-MUSIC: subspace DOA estimation against a gain-only array manifold.
//
//   R    = X X^T / T
//   R    = V diag(lambda) V^T, lambda descending
//   E_n  = V[:, M..N-1]                 (M = number of sources)
//   P(t) = 1 / ||E_n^T g(t)||^2
//
// The estimate is the grid bearing maximising P. Everything is real valued.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dirmusic/errors.hpp"
#include "dirmusic/manifold.hpp"
#include "dirmusic/pattern.hpp"
#include "dirmusic/signal.hpp"

namespace dirmusic {

using CovarianceMatrix = Eigen::MatrixXd;

/// Eigenvalues sorted descending; column j of vectors pairs with values(j).
/// The first entry of magnitude > 1e-12 in each column is nonnegative.
struct EigenPair {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

/// N x (N - M) orthonormal basis of the noise subspace.
using NoiseSubspace = Eigen::MatrixXd;

struct SpatialSpectrum {
  std::vector<double> grid;
  std::vector<double> values;
};

struct DoaEstimate {
  double theta_deg = 0.0;
  double peak_value = 0.0;
  std::size_t grid_index = 0;
  std::size_t snapshots_used = 0;
  SpatialSpectrum spectrum;  // empty unless requested
};

/// How g(theta) enters the spectrum denominator. `raw` is the published
/// estimator; `unit_steering` divides by ||g(theta)||^2 and is a diagnostic
/// variant only.
enum class SpectrumNormalization { raw, unit_steering };

inline constexpr double kSpectrumFloor = 1e-30;

/// (1/T) X X^T, computed on one triangle and mirrored so the result is
/// exactly symmetric.
inline CovarianceMatrix sample_covariance(const SnapshotMatrix& x) {
  if (x.cols() < 2) throw InvalidInput("sample_covariance: need at least 2 snapshots");
  if (x.rows() < 1) throw InvalidInput("sample_covariance: need at least 1 channel");
  const auto n = x.rows();
  CovarianceMatrix r = CovarianceMatrix::Zero(n, n);
  r.selfadjointView<Eigen::Lower>().rankUpdate(x, 1.0 / static_cast<double>(x.cols()));
  r.triangularView<Eigen::StrictlyUpper>() = r.transpose();
  return r;
}

namespace detail {

inline void jacobi_rotate(Eigen::MatrixXd& a, Eigen::MatrixXd& v, Eigen::Index p, Eigen::Index q) {
  const double apq = a(p, q);
  const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
  const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;
  const auto n = a.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double akp = a(k, p);
    const double akq = a(k, q);
    a(k, p) = c * akp - s * akq;
    a(k, q) = s * akp + c * akq;
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    const double apk = a(p, k);
    const double aqk = a(q, k);
    a(p, k) = c * apk - s * aqk;
    a(q, k) = s * apk + c * aqk;
  }
  a(p, q) = 0.0;
  a(q, p) = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double vkp = v(k, p);
    const double vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

}  // namespace detail

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
inline EigenPair eig_sym(const CovarianceMatrix& r) {
  if (r.rows() != r.cols() || r.rows() == 0) throw InvalidInput("eig_sym: matrix must be square and non-empty");
  if (!r.allFinite()) throw InvalidInput("eig_sym: matrix has non-finite entries");
  const double scale = r.cwiseAbs().maxCoeff();
  const double asym = (r - r.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) throw InvalidInput("eig_sym: matrix is not symmetric");

  const auto n = r.rows();
  Eigen::MatrixXd a = 0.5 * (r + r.transpose());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);

  const double frob2 = a.squaredNorm();
  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= 1e-34 * frob2 || off == 0.0) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) != 0.0) detail::jacobi_rotate(a, v, p, q);
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });

  EigenPair out{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto src = order[static_cast<std::size_t>(j)];
    out.values(j) = a(src, src);
    Eigen::VectorXd col = v.col(src);
    for (Eigen::Index k = 0; k < n; ++k) {
      if (std::fabs(col(k)) > 1e-12) {
        if (col(k) < 0.0) col = -col;
        break;
      }
    }
    out.vectors.col(j) = col;
  }
  return out;
}

/// Eigenvectors belonging to the N - n_sources smallest eigenvalues.
inline NoiseSubspace noise_subspace(const EigenPair& e, std::size_t n_sources = 1) {
  const auto n = static_cast<std::size_t>(e.vectors.cols());
  if (n_sources >= n) {
    throw InvalidInput("noise_subspace: source count " + std::to_string(n_sources) + " must be below element count " +
                       std::to_string(n));
  }
  return e.vectors.rightCols(static_cast<Eigen::Index>(n - n_sources));
}

/// P(theta) over the grid for a precomputed manifold (column j = g(grid[j])).
inline SpatialSpectrum spatial_spectrum(const NoiseSubspace& en, const Eigen::MatrixXd& manifold,
                                        std::span<const double> grid,
                                        SpectrumNormalization norm = SpectrumNormalization::raw) {
  if (grid.empty()) throw InvalidInput("spatial_spectrum: empty grid");
  if (manifold.cols() != static_cast<Eigen::Index>(grid.size()) || manifold.rows() != en.rows()) {
    throw InvalidInput("spatial_spectrum: manifold shape does not match grid and subspace");
  }
  const Eigen::MatrixXd proj = en.transpose() * manifold;
  SpatialSpectrum out{std::vector<double>(grid.begin(), grid.end()), std::vector<double>(grid.size())};
  for (Eigen::Index j = 0; j < proj.cols(); ++j) {
    double d = proj.col(j).squaredNorm();
    if (norm == SpectrumNormalization::unit_steering) {
      const double g2 = manifold.col(j).squaredNorm();
      d = g2 > 0.0 ? d / g2 : 0.0;
    }
    out.values[static_cast<std::size_t>(j)] = 1.0 / std::max(d, kSpectrumFloor);
  }
  return out;
}

inline SpatialSpectrum spatial_spectrum(const NoiseSubspace& en, const GaussianMixturePattern& p,
                                        const ArrayConfig& arr, std::span<const double> grid,
                                        SpectrumNormalization norm = SpectrumNormalization::raw) {
  return spatial_spectrum(en, manifold_matrix(p, arr, grid), grid, norm);
}

/// Index of the spectrum maximum; equal peaks resolve to the smallest angle.
inline std::size_t spectrum_argmax(const SpatialSpectrum& s) {
  if (s.values.empty()) throw InvalidInput("spectrum_argmax: empty spectrum");
  std::size_t best = 0;
  for (std::size_t j = 1; j < s.values.size(); ++j) {
    if (s.values[j] > s.values[best] || (s.values[j] == s.values[best] && s.grid[j] < s.grid[best])) best = j;
  }
  return best;
}

/// Signed circular difference estimate - truth in (-180, 180].
inline double angular_error(double estimate_deg, double truth_deg) {
  if (!std::isfinite(estimate_deg) || !std::isfinite(truth_deg)) throw DomainError("angular_error: non-finite angle");
  const double d = wrap_angle(estimate_deg - truth_deg);
  return d > 180.0 ? d - 360.0 : d;
}

/// ||E_n^T g|| / ||g||; zero when g lies in the signal subspace.
inline double orthogonality_residual(const NoiseSubspace& en, const GainVector& g) {
  const double gn = g.norm();
  if (gn == 0.0) throw InvalidInput("orthogonality_residual: zero steering vector");
  return (en.transpose() * g).norm() / gn;
}

/// Estimator bound to one pattern, array and search grid. The manifold is
/// evaluated once at construction; all methods are const and thread-safe.
class DirMusic {
 public:
  DirMusic(GaussianMixturePattern pattern, ArrayConfig array, std::vector<double> grid = uniform_grid(1.0),
           SpectrumNormalization norm = SpectrumNormalization::raw, std::size_t n_sources = 1)
      : pattern_(std::move(pattern)),
        array_(std::move(array)),
        grid_(std::move(grid)),
        norm_(norm),
        n_sources_(n_sources),
        manifold_(manifold_matrix(pattern_, array_, grid_)) {
    for (double th : grid_) {
      if (!std::isfinite(th) || th < 0.0 || th >= 360.0) throw InvalidInput("DirMusic: grid angles must lie in [0, 360)");
    }
  }

  const GaussianMixturePattern& pattern() const { return pattern_; }
  const ArrayConfig& array() const { return array_; }
  const std::vector<double>& grid() const { return grid_; }
  const Eigen::MatrixXd& manifold() const { return manifold_; }
  SpectrumNormalization normalization() const { return norm_; }

  /// Spacing of the first two grid points (360 for a single-point grid).
  double grid_step() const { return grid_.size() > 1 ? grid_[1] - grid_[0] : 360.0; }

  SpatialSpectrum spectrum(const NoiseSubspace& en) const { return spatial_spectrum(en, manifold_, grid_, norm_); }

  /// With no more elements than sources there is no noise subspace; an
  /// N x 0 basis is returned and the spectrum is flat at the floor.
  NoiseSubspace noise_subspace_of(const SnapshotMatrix& x) const {
    check_rows(x);
    const EigenPair e = eig_sym(sample_covariance(x));
    if (array_.size() <= n_sources_) return NoiseSubspace(x.rows(), 0);
    return noise_subspace(e, n_sources_);
  }

  DoaEstimate estimate(const SnapshotMatrix& x, bool keep_spectrum = false) const {
    SpatialSpectrum s = spectrum(noise_subspace_of(x));
    const std::size_t best = spectrum_argmax(s);
    DoaEstimate out;
    out.theta_deg = s.grid[best];
    out.peak_value = s.values[best];
    out.grid_index = best;
    out.snapshots_used = static_cast<std::size_t>(x.cols());
    if (keep_spectrum) out.spectrum = std::move(s);
    return out;
  }

 private:
  void check_rows(const SnapshotMatrix& x) const {
    if (x.rows() != static_cast<Eigen::Index>(array_.size())) {
      throw InvalidInput("DirMusic: snapshot block has " + std::to_string(x.rows()) + " channels, array has " +
                         std::to_string(array_.size()) + " elements");
    }
  }

  GaussianMixturePattern pattern_;
  ArrayConfig array_;
  std::vector<double> grid_;
  SpectrumNormalization norm_;
  std::size_t n_sources_;
  Eigen::MatrixXd manifold_;
};

inline DoaEstimate estimate_doa(const SnapshotMatrix& x, const GaussianMixturePattern& p, const ArrayConfig& arr,
                                std::vector<double> grid = uniform_grid(1.0)) {
  return DirMusic(p, arr, std::move(grid)).estimate(x);
}

/// Noise-free ambiguity scan: for each grid bearing, the strongest spectrum
/// value at least `guard_deg` away from it. Large values flag bearings whose
/// gain vectors are nearly proportional.
struct AmbiguityRow {
  double theta_deg = 0.0;
  double worst_angle_deg = 0.0;
  double max_offpeak = 0.0;
};

inline std::vector<AmbiguityRow> ambiguity_scan(const DirMusic& est, double guard_deg = 5.0) {
  const auto& grid = est.grid();
  const auto& m = est.manifold();
  std::vector<AmbiguityRow> rows;
  rows.reserve(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const Eigen::VectorXd g = m.col(static_cast<Eigen::Index>(j));
    const NoiseSubspace en = noise_subspace(eig_sym(g * g.transpose()), 1);
    const SpatialSpectrum s = est.spectrum(en);
    AmbiguityRow row{grid[j], grid[j], 0.0};
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (std::fabs(angular_error(grid[i], grid[j])) < guard_deg) continue;
      if (s.values[i] > row.max_offpeak) {
        row.max_offpeak = s.values[i];
        row.worst_angle_deg = grid[i];
      }
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace dirmusic

#pragma once

// Single-element directional gain pattern modelled as a sum of Gaussians in
// bearing, plus a Levenberg-Marquardt fitter for measured samples.

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

namespace dirmusic {

/// Map an angle in degrees to [0, 360).
inline double wrap_angle(double deg) {
  if (!std::isfinite(deg)) {
    throw DomainError("wrap_angle: non-finite angle");
  }
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  // fmod of a tiny negative value can round up to exactly 360
  if (r >= 360.0) r = 0.0;
  return r;
}

/// One term a * exp(-(theta - b)^2 / c^2). Angles in degrees.
struct GaussianComponent {
  double amplitude = 0.0;
  double center_deg = 0.0;
  double width_deg = 1.0;

  double operator()(double wrapped_deg) const {
    const double d = (wrapped_deg - center_deg) / width_deg;
    return amplitude * std::exp(-d * d);
  }
};

class GaussianMixturePattern {
 public:
  explicit GaussianMixturePattern(std::vector<GaussianComponent> components)
      : components_(std::move(components)) {
    if (components_.empty()) {
      throw InvalidInput("GaussianMixturePattern: at least one component required");
    }
    for (std::size_t i = 0; i < components_.size(); ++i) {
      const auto& c = components_[i];
      const std::string at = " (component " + std::to_string(i + 1) + ")";
      if (!std::isfinite(c.amplitude) || c.amplitude < 0.0) {
        throw InvalidInput("GaussianMixturePattern: amplitude must be finite and >= 0" + at);
      }
      if (!std::isfinite(c.center_deg) || c.center_deg < 0.0 || c.center_deg >= 360.0) {
        throw InvalidInput("GaussianMixturePattern: center must lie in [0, 360)" + at);
      }
      if (!std::isfinite(c.width_deg) || c.width_deg <= 0.0) {
        throw InvalidInput("GaussianMixturePattern: width must be finite and > 0" + at);
      }
    }
  }

  const std::vector<GaussianComponent>& components() const { return components_; }
  std::size_t size() const { return components_.size(); }

  /// Gain at an already wrapped bearing. Prefer eval_pattern() for raw input.
  double at_wrapped(double wrapped_deg) const {
    double sum = 0.0;
    for (const auto& c : components_) sum += c(wrapped_deg);
    return sum;
  }

  double operator()(double theta_deg) const { return at_wrapped(wrap_angle(theta_deg)); }

  /// Flat parameter vector [a1, b1, c1, a2, b2, c2, ...].
  std::vector<double> parameters() const {
    std::vector<double> p;
    p.reserve(3 * components_.size());
    for (const auto& c : components_) {
      p.push_back(c.amplitude);
      p.push_back(c.center_deg);
      p.push_back(c.width_deg);
    }
    return p;
  }

  static GaussianMixturePattern from_parameters(std::span<const double> p) {
    if (p.empty() || p.size() % 3 != 0) {
      throw InvalidInput("GaussianMixturePattern: parameter count must be a positive multiple of 3");
    }
    std::vector<GaussianComponent> comps;
    for (std::size_t i = 0; i < p.size(); i += 3) comps.push_back({p[i], p[i + 1], p[i + 2]});
    return GaussianMixturePattern(std::move(comps));
  }

  friend bool operator==(const GaussianMixturePattern& a, const GaussianMixturePattern& b) {
    return a.parameters() == b.parameters();
  }

 private:
  std::vector<GaussianComponent> components_;
};

/// The measured spiral-antenna pattern at 1.25 GHz as a three-term mixture.
inline GaussianMixturePattern preset_pattern() {
  return GaussianMixturePattern({
      {0.5255, 218.1, 51.73},
      {0.3405, 304.8, 41.0},
      {0.6251, 156.1, 109.1},
  });
}

/// Gain of the pattern at bearing theta (wrapped into [0, 360) first).
/// The mixture is not periodic, so g(0) and g(360 - eps) differ slightly.
inline double eval_pattern(const GaussianMixturePattern& p, double theta_deg) {
  return p(theta_deg);
}

struct PatternSample {
  double angle_deg = 0.0;
  double gain = 0.0;
};

// ---------------------------------------------------------------------------
// Fitting

namespace fitting {

/// Residuals r_j = model(theta_j) - gain_j for a flat parameter vector.
inline Eigen::VectorXd residuals(std::span<const double> params, std::span<const PatternSample> samples) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t j = 0; j < samples.size(); ++j) {
    const double th = wrap_angle(samples[j].angle_deg);
    double model = 0.0;
    for (std::size_t i = 0; i + 2 < params.size(); i += 3) {
      const double d = (th - params[i + 1]) / params[i + 2];
      model += params[i] * std::exp(-d * d);
    }
    r(static_cast<Eigen::Index>(j)) = model - samples[j].gain;
  }
  return r;
}

/// Analytic Jacobian d r_j / d p_i (rows: samples, cols: parameters).
inline Eigen::MatrixXd jacobian(std::span<const double> params, std::span<const PatternSample> samples) {
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(params.size()));
  for (std::size_t j = 0; j < samples.size(); ++j) {
    const double th = wrap_angle(samples[j].angle_deg);
    const auto row = static_cast<Eigen::Index>(j);
    for (std::size_t i = 0; i + 2 < params.size(); i += 3) {
      const double a = params[i];
      const double b = params[i + 1];
      const double c = params[i + 2];
      const double diff = th - b;
      const double e = std::exp(-(diff * diff) / (c * c));
      const auto col = static_cast<Eigen::Index>(i);
      jac(row, col) = e;
      jac(row, col + 1) = a * e * 2.0 * diff / (c * c);
      jac(row, col + 2) = a * e * 2.0 * diff * diff / (c * c * c);
    }
  }
  return jac;
}

/// Sum of squared residuals.
inline double objective(std::span<const double> params, std::span<const PatternSample> samples) {
  return residuals(params, samples).squaredNorm();
}

/// Gradient of objective(): 2 J^T r.
inline Eigen::VectorXd gradient(std::span<const double> params, std::span<const PatternSample> samples) {
  return 2.0 * jacobian(params, samples).transpose() * residuals(params, samples);
}

}  // namespace fitting

struct FitOptions {
  int max_iterations = 200;
  double relative_tolerance = 1e-9;
  double initial_width_deg = 60.0;
  double min_width_deg = 1.0;
  double min_separation_deg = 30.0;
};

struct FitResult {
  GaussianMixturePattern pattern;
  double initial_rss = 0.0;
  double final_rss = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> rss_trace;  // objective after each accepted step, starting at the initial guess
  std::size_t n_samples = 0;

  double rmse() const { return n_samples == 0 ? 0.0 : std::sqrt(final_rss / static_cast<double>(n_samples)); }
};

namespace detail {

inline double circular_distance(double a, double b) {
  const double d = std::fabs(wrap_angle(a) - wrap_angle(b));
  return std::min(d, 360.0 - d);
}

// Seeds one component per well separated local maximum, strongest first.
inline std::vector<double> initial_guess(std::span<const PatternSample> samples, std::size_t k,
                                         const FitOptions& opt) {
  std::vector<PatternSample> sorted(samples.begin(), samples.end());
  for (auto& s : sorted) s.angle_deg = wrap_angle(s.angle_deg);
  std::sort(sorted.begin(), sorted.end(),
            [](const PatternSample& a, const PatternSample& b) { return a.angle_deg < b.angle_deg; });

  const std::size_t n = sorted.size();
  std::vector<std::size_t> maxima;
  for (std::size_t j = 0; j < n; ++j) {
    const double g = sorted[j].gain;
    if (g >= sorted[(j + n - 1) % n].gain && g >= sorted[(j + 1) % n].gain) maxima.push_back(j);
  }
  std::vector<std::size_t> by_gain(n);
  std::iota(by_gain.begin(), by_gain.end(), std::size_t{0});
  auto stronger = [&](std::size_t a, std::size_t b) {
    if (sorted[a].gain != sorted[b].gain) return sorted[a].gain > sorted[b].gain;
    return a < b;
  };
  std::sort(maxima.begin(), maxima.end(), stronger);
  std::sort(by_gain.begin(), by_gain.end(), stronger);

  std::vector<std::size_t> chosen;
  auto try_pick = [&](const std::vector<std::size_t>& pool, double sep) {
    for (std::size_t idx : pool) {
      if (chosen.size() == k) return;
      if (std::find(chosen.begin(), chosen.end(), idx) != chosen.end()) continue;
      const bool far = std::all_of(chosen.begin(), chosen.end(), [&](std::size_t c) {
        return circular_distance(sorted[c].angle_deg, sorted[idx].angle_deg) >= sep;
      });
      if (far) chosen.push_back(idx);
    }
  };
  try_pick(maxima, opt.min_separation_deg);
  for (double sep = opt.min_separation_deg; chosen.size() < k; sep *= 0.5) {
    try_pick(by_gain, sep);
    if (sep < 1e-9) try_pick(by_gain, 0.0);
  }

  std::vector<double> p;
  for (std::size_t idx : chosen) {
    p.push_back(std::max(sorted[idx].gain, 0.0));
    p.push_back(sorted[idx].angle_deg);
    p.push_back(std::max(opt.initial_width_deg, opt.min_width_deg));
  }
  return p;
}

inline void project(std::vector<double>& p, const FitOptions& opt) {
  constexpr double kCenterMax = 360.0 - 1e-9;
  for (std::size_t i = 0; i < p.size(); i += 3) {
    p[i] = std::max(p[i], 0.0);
    p[i + 1] = std::clamp(p[i + 1], 0.0, kCenterMax);
    p[i + 2] = std::max(p[i + 2], opt.min_width_deg);
  }
}

}  // namespace detail

/// Least-squares fit of a k-term mixture to measured samples.
///
/// Damped Gauss-Newton (Levenberg-Marquardt with Marquardt diagonal scaling)
/// and an analytic Jacobian. Amplitudes are kept >= 0, widths >= min_width_deg
/// and centers in [0, 360) by projection after each step. Stops when an
/// accepted step changes the objective by less than relative_tolerance, when
/// no damping level produces a decrease, or after max_iterations (in which
/// case converged is false and the best iterate is returned).
inline FitResult fit_pattern(std::span<const PatternSample> samples, std::size_t k, const FitOptions& opt = {}) {
  if (k == 0) throw InvalidInput("fit_pattern: component count must be >= 1");
  if (samples.size() < 3 * k) {
    throw InvalidInput("fit_pattern: need at least " + std::to_string(3 * k) + " samples for " +
                       std::to_string(k) + " components, got " + std::to_string(samples.size()));
  }
  {
    std::vector<double> angles;
    for (const auto& s : samples) {
      if (!std::isfinite(s.gain)) throw InvalidInput("fit_pattern: non-finite gain");
      angles.push_back(wrap_angle(s.angle_deg));
    }
    std::sort(angles.begin(), angles.end());
    if (std::adjacent_find(angles.begin(), angles.end()) != angles.end()) {
      throw InvalidInput("fit_pattern: sample angles must be distinct after wrapping");
    }
  }

  std::vector<double> p = detail::initial_guess(samples, k, opt);
  detail::project(p, opt);

  Eigen::VectorXd r = fitting::residuals(p, samples);
  double rss = r.squaredNorm();
  FitResult out{GaussianMixturePattern::from_parameters(p), rss, rss, 0, false, {rss}, samples.size()};

  double lambda = 1e-3;
  int iter = 0;
  for (; iter < opt.max_iterations; ++iter) {
    const Eigen::MatrixXd jac = fitting::jacobian(p, samples);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;
    const Eigen::VectorXd scale = jtj.diagonal().cwiseMax(1e-12);

    bool accepted = false;
    std::vector<double> candidate;
    Eigen::VectorXd cand_r;
    double cand_rss = rss;
    while (lambda <= 1e16) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal() += lambda * scale;
      const Eigen::VectorXd step = damped.ldlt().solve(-jtr);
      candidate = p;
      for (std::size_t i = 0; i < p.size(); ++i) candidate[i] += step(static_cast<Eigen::Index>(i));
      detail::project(candidate, opt);
      cand_r = fitting::residuals(candidate, samples);
      cand_rss = cand_r.squaredNorm();
      if (std::isfinite(cand_rss) && cand_rss < rss) {
        accepted = true;
        lambda = std::max(lambda * 0.3, 1e-12);
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // no descent direction left at any damping: a local minimum
      out.converged = true;
      break;
    }
    const double rel_change = (rss - cand_rss) / std::max(rss, std::numeric_limits<double>::min());
    p = std::move(candidate);
    r = std::move(cand_r);
    rss = cand_rss;
    out.rss_trace.push_back(rss);
    if (rel_change < opt.relative_tolerance || rss == 0.0) {
      out.converged = true;
      ++iter;
      break;
    }
  }

  out.iterations = iter;
  out.final_rss = rss;
  out.pattern = GaussianMixturePattern::from_parameters(p);
  return out;
}

/// Samples of a pattern at evenly spaced bearings from 0 (inclusive) to 360.
inline std::vector<PatternSample> sample_pattern(const GaussianMixturePattern& p, double step_deg) {
  if (!(step_deg > 0.0) || step_deg > 360.0) throw InvalidInput("sample_pattern: step must be in (0, 360]");
  std::vector<PatternSample> out;
  const auto n = static_cast<std::size_t>(std::llround(std::floor(360.0 / step_deg - 1e-9))) + 1;
  for (std::size_t i = 0; i < n; ++i) {
    const double th = static_cast<double>(i) * step_deg;
    out.push_back({th, p(th)});
  }
  return out;
}

}  // namespace dirmusic

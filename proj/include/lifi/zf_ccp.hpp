#pragma once

// QoS-constrained sum-rate maximization over zero-forcing gains.
//
// For admitted users S with ZF precoder W = H_S^+ diag(g), maximize
//   sum_k R(g_k),  R(g) = 1/2 ln(1 + 2 g^2 / (pi e N0 B))
// subject to the per-AP amplitude budget sum_k |W_mk| <= Delta and R(g_k) >= R_th.
//
// With s_k = c g_k^2 (c = 2/(pi e N0 B)) the objective is concave and separable while
// each budget row reads sum_k B_mk sqrt(s_k) <= 1, a reverse-convex constraint. The
// convex-concave procedure replaces sqrt by its tangent (an upper bound), so every
// subproblem is a concave maximization over a polytope contained in the true
// feasible set. Subproblems are solved with a primal log-barrier Newton method.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "lifi/error.hpp"
#include "lifi/rng.hpp"

namespace lifi {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kPiE = std::numbers::pi * std::numbers::e;

/// Rate in nats/s/Hz delivered by ZF gain g (A) against noise power N0*B (A^2).
inline double rate_of_gain(double gain, double noise_term) {
  return 0.5 * std::log1p(2.0 * gain * gain / (kPiE * noise_term));
}

/// Smallest gain that reaches `rate_threshold`.
inline double min_gain(double rate_threshold, double noise_term) {
  return std::sqrt(std::expm1(2.0 * rate_threshold) * kPiE * noise_term / 2.0);
}

/// Right inverse H^+ (M x K) of a full-row-rank K x M channel matrix.
inline Matrix zf_pseudoinverse(const Matrix& h) {
  if (h.rows() == 0) return Matrix(h.cols(), 0);
  if (h.rows() > h.cols())
    throw NumericError("zero forcing needs K <= M (got K=" + std::to_string(h.rows()) +
                       ", M=" + std::to_string(h.cols()) + ")");
  Eigen::JacobiSVD<Matrix> svd(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double smax = sv(0), smin = sv(sv.size() - 1);
  if (!(smax > 0) || smin <= 1e-12 * smax) {
    // The left singular vector of the smallest singular value spans the dependent
    // combination of user rows.
    const Vector u = svd.matrixU().col(sv.size() - 1);
    std::string rows;
    for (Eigen::Index k = 0; k < u.size(); ++k)
      if (std::abs(u(k)) > 1e-6) rows += (rows.empty() ? "" : ",") + std::to_string(k);
    throw NumericError("channel matrix is rank deficient: user rows {" + rows +
                       "} are linearly dependent");
  }
  return svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
}

inline double condition_ratio(const Matrix& h) {
  if (h.rows() == 0) return 1.0;
  Eigen::JacobiSVD<Matrix> svd(h);
  const Vector& sv = svd.singularValues();
  return sv(0) > 0 ? sv(sv.size() - 1) / sv(0) : 0.0;
}

struct ProblemSpec {
  Matrix channel;             // K x M, row k = h_k^T
  double headroom = 0.5;      // Delta, A
  double noise_term = 2e-14;  // N0 * B, A^2
  double rate_threshold = 1.0;  // R_th, nats/s/Hz
};

inline void validate(const ProblemSpec& p) {
  if (!(p.headroom > 0)) throw ConfigError("headroom Delta must be positive");
  if (!(p.noise_term > 0)) throw ConfigError("noise term must be positive");
  if (!(p.rate_threshold >= 0)) throw ConfigError("rate threshold must be >= 0");
  if (!p.channel.allFinite()) throw ConfigError("channel matrix has non-finite entries");
  if ((p.channel.array() < 0).any()) throw ConfigError("channel gains must be nonnegative");
}

struct PrecoderSolution {
  std::vector<int> admitted;  // indices into the rows of the input channel
  Vector gains;               // g, one per admitted user (A)
  Matrix precoder;            // W = H_adm^+ diag(g), M x K_adm
  Vector rates;               // design rates, nats/s/Hz
  double objective = 0.0;     // sum of design rates
  std::vector<double> trace;  // objective per CCP iteration of the winning start
  int iterations = 0;
  double solve_time = 0.0;  // s

  /// max_m sum_k |W_mk|
  double peak_amplitude() const {
    return precoder.size() ? precoder.cwiseAbs().rowwise().sum().maxCoeff() : 0.0;
  }
};

inline Matrix select_rows(const Matrix& h, const std::vector<int>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), h.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = h.row(rows[i]);
  return out;
}

/// Greedy admission: first remove users until the channel has full row rank (dropping
/// the row whose removal best conditions the remainder), then, while the QoS corner
/// point g = g_min * 1 overloads some AP, drop the user with the largest total load
/// sum_m |H^+_mk| g_min. May return an empty set.
inline std::vector<int> admission_control(const ProblemSpec& spec) {
  validate(spec);
  std::vector<int> s(static_cast<std::size_t>(spec.channel.rows()));
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = static_cast<int>(k);
  // At most M users can be separated.
  while (s.size() > static_cast<std::size_t>(spec.channel.cols())) s.pop_back();
  const double g_min = min_gain(spec.rate_threshold, spec.noise_term);

  auto drop = [&](std::size_t pos) { s.erase(s.begin() + static_cast<std::ptrdiff_t>(pos)); };
  while (!s.empty()) {
    const Matrix h = select_rows(spec.channel, s);
    if (condition_ratio(h) <= 1e-12) {
      std::size_t best = 0;
      double best_ratio = -1.0;
      for (std::size_t k = 0; k < s.size(); ++k) {
        std::vector<int> rest = s;
        rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(k));
        const double r = condition_ratio(select_rows(spec.channel, rest));
        if (r > best_ratio) best_ratio = r, best = k;
      }
      drop(best);
      continue;
    }
    if (g_min == 0.0) break;
    const Matrix a = zf_pseudoinverse(h).cwiseAbs();
    const Vector ap_load = a.rowwise().sum() * g_min;
    if (ap_load.maxCoeff() <= spec.headroom) break;
    Eigen::Index worst = 0;
    a.colwise().sum().maxCoeff(&worst);
    drop(static_cast<std::size_t>(worst));
  }
  return s;
}

struct CcpOptions {
  int max_iterations = 100;
  double tolerance = 1e-7;  // relative objective improvement
  int starts = 5;
  std::uint64_t seed = 1;
  double barrier_gap = 1e-10;  // duality-gap target of each subproblem (nats)
  int max_newton_steps = 500;
};

namespace detail {

// Normalized problem: maximize sum 1/2 log1p(s) s.t. sum_k B_mk sqrt(s_k) <= 1, s >= lo.
struct NormalizedProblem {
  Matrix b;   // M x K
  Vector lo;  // K
  double c = 0;
};

inline double sum_rate(const Vector& s) { return 0.5 * s.array().log1p().sum(); }

inline double max_budget(const NormalizedProblem& np, const Vector& s) {
  return (np.b * s.cwiseSqrt()).maxCoeff();
}

inline constexpr int kMaxStageSteps = 200;

/// Maximizes the concave objective over {G s <= h0} by a log-barrier Newton method,
/// starting from a strictly feasible s. Returns false when the Newton budget runs out.
inline bool barrier_maximize(const Matrix& g, const Vector& h0, Vector& s, const CcpOptions& opt,
                             int& newton_budget) {
  const auto n_con = static_cast<double>(g.rows());
  double t = 1.0;
  const double mu = 20.0;
  while (true) {
    for (int it = 0; it < kMaxStageSteps; ++it) {
      if (--newton_budget < 0) return false;
      const Vector slack = h0 - g * s;
      const Vector inv = slack.cwiseInverse();
      const Vector d1 = (0.5 / (1.0 + s.array())).matrix();
      const Vector grad = -t * d1 + g.transpose() * inv;
      Matrix hess = g.transpose() * inv.cwiseAbs2().asDiagonal() * g;
      hess.diagonal() += t * (0.5 / (1.0 + s.array()).square()).matrix();
      // Jacobi-scaled Newton step, diagonal step as fallback.
      const Vector scale = hess.diagonal().cwiseSqrt().cwiseInverse();
      const Matrix scaled = scale.asDiagonal() * hess * scale.asDiagonal();
      Vector step = -(scale.asDiagonal() * scaled.ldlt().solve(scale.asDiagonal() * grad));
      double decrement = -grad.dot(step);
      if (!(decrement > 0) || !step.allFinite()) {
        step = -(scale.cwiseAbs2().asDiagonal() * grad);
        decrement = -grad.dot(step);
      }
      if (!std::isfinite(decrement) || !step.allFinite()) return false;
      const double noise = 1e-12 * std::max(1.0, t * sum_rate(s));
      if (decrement / 2.0 <= noise) break;
      // Largest step that keeps every slack positive, then Armijo backtracking.
      const Vector gd = g * step;
      double alpha = 1.0;
      for (Eigen::Index i = 0; i < gd.size(); ++i)
        if (gd(i) > 0) alpha = std::min(alpha, 0.99 * slack(i) / gd(i));
      auto phi = [&](const Vector& x) {
        const Vector sl = h0 - g * x;
        if ((sl.array() <= 0).any()) return std::numeric_limits<double>::infinity();
        return -t * sum_rate(x) - sl.array().log().sum();
      };
      const double f0 = phi(s);
      while (phi(s + alpha * step) > f0 - 0.25 * alpha * decrement) {
        alpha *= 0.5;
        if (alpha < 1e-16) break;
      }
      if (alpha < 1e-16) break;
      // Step below the resolution of s.
      if (alpha * step.norm() <= 1e-15 * (1.0 + s.norm())) break;
      s += alpha * step;
    }
    if (n_con / t < opt.barrier_gap) return true;
    t *= mu;
  }
}

struct CcpRun {
  Vector s;
  std::vector<double> trace;
};

/// CCP ascent from a strictly feasible start.
inline CcpRun ccp_from(const NormalizedProblem& np, Vector s, const CcpOptions& opt) {
  const Eigen::Index k = s.size();
  const Eigen::Index m = np.b.rows();
  CcpRun run;
  double f = sum_rate(s);
  run.trace.push_back(f);
  int newton_budget = opt.max_newton_steps * std::max(1, opt.max_iterations);
  Matrix g(m + k, k);
  Vector h0(m + k);
  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    // Tangent of sqrt at the current iterate: sqrt(x) <= sqrt(p)/2 + x/(2 sqrt(p)).
    const Vector root = s.cwiseSqrt();
    g.topRows(m) = np.b * (0.5 * root.cwiseInverse()).asDiagonal();
    h0.head(m) = Vector::Ones(m) - 0.5 * np.b * root;
    g.bottomRows(k) = -Matrix::Identity(k, k);
    h0.tail(k) = -np.lo;
    Vector next = s;
    if (!barrier_maximize(g, h0, next, opt, newton_budget)) {
      std::string msg = "CCP subproblem did not converge; trace:";
      for (double v : run.trace) msg += " " + std::to_string(v);
      throw NumericError(msg);
    }
    const double f_next = sum_rate(next);
    if (!(f_next >= f)) break;  // no ascent left at this precision
    s = next;
    run.trace.push_back(f_next);
    const double gain = f_next - f;
    f = f_next;
    if (gain < opt.tolerance * std::max(1.0, std::abs(f))) break;
  }
  run.s = s;
  return run;
}

inline NormalizedProblem normalize(const Matrix& abs_pinv, const ProblemSpec& spec) {
  NormalizedProblem np;
  np.c = 2.0 / (kPiE * spec.noise_term);
  np.b = abs_pinv / (spec.headroom * std::sqrt(np.c));
  np.lo = Vector::Constant(abs_pinv.cols(), std::expm1(2.0 * spec.rate_threshold));
  return np;
}

inline PrecoderSolution finish(const ProblemSpec& spec, const std::vector<int>& users,
                               const Matrix& pinv, const Vector& gains) {
  PrecoderSolution sol;
  sol.admitted = users;
  sol.gains = gains;
  sol.precoder = pinv * gains.asDiagonal();
  sol.rates.resize(gains.size());
  for (Eigen::Index k = 0; k < gains.size(); ++k)
    sol.rates(k) = rate_of_gain(gains(k), spec.noise_term);
  sol.objective = sol.rates.sum();
  return sol;
}

}  // namespace detail

/// CCP over all users in `spec` (the caller has already run admission control).
/// Best of `starts` random strictly feasible initial points.
inline PrecoderSolution ccp_solve(const ProblemSpec& spec, const CcpOptions& opt = {}) {
  validate(spec);
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::Index k = spec.channel.rows();
  std::vector<int> users(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) users[static_cast<std::size_t>(i)] = static_cast<int>(i);
  if (k == 0) return {};
  const Matrix pinv = zf_pseudoinverse(spec.channel);
  const auto np = detail::normalize(pinv.cwiseAbs(), spec);

  const Vector v0 = np.lo.cwiseSqrt();
  const Vector slack0 = Vector::Ones(np.b.rows()) - np.b * v0;
  if (slack0.minCoeff() < 0)
    throw InfeasibleError("QoS corner point violates the per-AP budget; run admission control");

  Rng rng(derive_seed(opt.seed, stream::kSolver));
  std::uniform_real_distribution<double> dir(0.05, 1.0), frac(0.2, 0.95);
  detail::CcpRun best;
  double best_f = -std::numeric_limits<double>::infinity();
  for (int start = 0; start < std::max(1, opt.starts); ++start) {
    Vector d(k);
    for (Eigen::Index i = 0; i < k; ++i) d(i) = dir(rng);
    const Vector bd = np.b * d;
    double reach = std::numeric_limits<double>::infinity();
    for (Eigen::Index m = 0; m < bd.size(); ++m)
      if (bd(m) > 0) reach = std::min(reach, slack0(m) / bd(m));
    const double rho = frac(rng);
    detail::CcpRun run;
    if (!(reach > 0) || !std::isfinite(reach)) {
      // Corner point on the budget boundary: the feasible set has no interior.
      run.s = np.lo;
      run.trace = {detail::sum_rate(np.lo)};
    } else {
      const Vector v = v0 + rho * reach * d;
      run = detail::ccp_from(np, v.cwiseAbs2(), opt);
    }
    const double f = detail::sum_rate(run.s);
    if (f > best_f) best_f = f, best = std::move(run);
  }
  const Vector gains = (best.s / np.c).cwiseSqrt();
  auto sol = detail::finish(spec, users, pinv, gains);
  sol.trace = best.trace;
  sol.iterations = static_cast<int>(best.trace.size()) - 1;
  sol.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

/// Exhaustive reference for K <= 2: a 400-point-per-axis grid over t = g^2 on the box
/// [t_min, t_max]^K, filtered for feasibility, followed by repeated zoom-in regridding
/// around the incumbent. The search works on the raw budget sum_k |H^+_mk| g_k <= Delta.
inline PrecoderSolution grid_oracle_solve(const ProblemSpec& spec, int resolution = 400,
                                          int refinements = 40) {
  validate(spec);
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::Index k = spec.channel.rows();
  if (k == 0) return {};
  if (k > 2) throw ConfigError("grid oracle supports at most two users");
  const Matrix pinv = zf_pseudoinverse(spec.channel);
  const Matrix a = pinv.cwiseAbs();
  const double g_min = min_gain(spec.rate_threshold, spec.noise_term);
  const double t_lo = g_min * g_min;

  auto feasible = [&](const Vector& g) {
    return ((a * g).array() <= spec.headroom).all() && (g.array() >= g_min).all();
  };
  auto value = [&](const Vector& g) {
    double v = 0;
    for (Eigen::Index i = 0; i < g.size(); ++i) v += rate_of_gain(g(i), spec.noise_term);
    return v;
  };
  if (!feasible(Vector::Constant(k, g_min)))
    throw InfeasibleError("empty feasible set: QoS corner point violates the per-AP budget");

  // Per-user box: largest t_k with the other users at their minimum.
  Vector t_hi(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    double cap = std::numeric_limits<double>::infinity();
    for (Eigen::Index m = 0; m < a.rows(); ++m) {
      double rest = spec.headroom;
      for (Eigen::Index j = 0; j < k; ++j)
        if (j != i) rest -= a(m, j) * g_min;
      if (a(m, i) > 0) cap = std::min(cap, rest / a(m, i));
    }
    t_hi(i) = cap * cap;
  }

  Vector best_g = Vector::Constant(k, g_min);
  double best_v = value(best_g);
  Vector lo = Vector::Constant(k, t_lo), hi = t_hi;
  int res = resolution;
  for (int round = 0; round <= refinements; ++round) {
    const Vector step = (hi - lo) / std::max(1, res - 1);
    Vector t(k), g(k);
    if (k == 1) {
      for (int i = 0; i < res; ++i) {
        t(0) = lo(0) + i * step(0);
        g = t.cwiseSqrt();
        if (feasible(g) && value(g) > best_v) best_v = value(g), best_g = g;
      }
    } else {
      for (int i = 0; i < res; ++i)
        for (int j = 0; j < res; ++j) {
          t << lo(0) + i * step(0), lo(1) + j * step(1);
          g = t.cwiseSqrt();
          if (feasible(g)) {
            const double v = value(g);
            if (v > best_v) best_v = v, best_g = g;
          }
        }
    }
    // Zoom to +-2 cells around the incumbent.
    const Vector tb = best_g.cwiseAbs2();
    lo = (tb - 2 * step).cwiseMax(Vector::Constant(k, t_lo));
    hi = (tb + 2 * step).cwiseMin(t_hi);
    res = 41;
  }
  auto sol = detail::finish(spec, {}, pinv, best_g);
  sol.admitted.resize(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) sol.admitted[static_cast<std::size_t>(i)] = static_cast<int>(i);
  sol.trace = {sol.objective};
  sol.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

enum class SolverKind { kCcp, kMultiStart, kGrid };

inline const char* to_string(SolverKind s) {
  switch (s) {
    case SolverKind::kCcp: return "ccp";
    case SolverKind::kMultiStart: return "multistart";
    case SolverKind::kGrid: return "grid";
  }
  return "?";
}

inline SolverKind parse_solver(const std::string& s) {
  if (s == "ccp") return SolverKind::kCcp;
  if (s == "multistart") return SolverKind::kMultiStart;
  if (s == "grid") return SolverKind::kGrid;
  throw ConfigError("solver must be ccp, multistart or grid; got '" + s + "'");
}

inline constexpr int kMultiStartStarts = 50;

/// Reference solver: grid for K <= 2, multi-start CCP (>= 50 starts) otherwise.
inline PrecoderSolution oracle_solve(const ProblemSpec& spec, const CcpOptions& opt = {}) {
  if (spec.channel.rows() <= 2) return grid_oracle_solve(spec);
  CcpOptions many = opt;
  many.starts = std::max(opt.starts, kMultiStartStarts);
  return ccp_solve(spec, many);
}

/// Admission control followed by the chosen solver; indices in the result refer to
/// rows of spec.channel and the solve time covers both stages.
inline PrecoderSolution solve_precoder(const ProblemSpec& spec, SolverKind kind,
                                       const CcpOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<int> admitted = admission_control(spec);
  PrecoderSolution sol;
  if (!admitted.empty()) {
    ProblemSpec sub = spec;
    sub.channel = select_rows(spec.channel, admitted);
    switch (kind) {
      case SolverKind::kCcp: sol = ccp_solve(sub, opt); break;
      case SolverKind::kMultiStart: {
        CcpOptions many = opt;
        many.starts = std::max(opt.starts, kMultiStartStarts);
        sol = ccp_solve(sub, many);
        break;
      }
      case SolverKind::kGrid: sol = grid_oracle_solve(sub); break;
    }
    sol.admitted = admitted;
  } else {
    sol.precoder = Matrix(spec.channel.cols(), 0);
  }
  sol.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

/// Rates obtained when precoder W (M x K) is applied to the true channel rows
/// (K x M), treating residual inter-user interference as noise.
inline Vector realized_rates(const Matrix& precoder, const Matrix& true_channel,
                             double noise_term) {
  if (true_channel.cols() != precoder.rows() || true_channel.rows() != precoder.cols())
    throw ConfigError("precoder and channel dimensions disagree");
  const Matrix e = true_channel * precoder;
  const Eigen::Index k = e.rows();
  Vector r(k);
  const double noise = kPiE * noise_term / 2.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    const double signal = e(i, i) * e(i, i);
    double interference = 0.0;
    for (Eigen::Index j = 0; j < k; ++j)
      if (j != i) interference += e(i, j) * e(i, j);
    r(i) = 0.5 * std::log1p(signal / (interference + noise));
  }
  return r;
}

}  // namespace lifi

#pragma once

// Smallest eigenpairs of c(-Lap) + V in the dmu-weighted inner product, the
// Sobolev and log-Sobolev functionals, and the truncation family f_k.
//
// All energies use the summation-by-parts Dirichlet form of DiffusionOperator,
// so the quadratic forms here are exactly the Rayleigh quotients of the
// discrete operators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "hrf/errors.hpp"
#include "hrf/geometry.hpp"
#include "hrf/random.hpp"
#include "hrf/tridiagonal.hpp"

namespace hrf {

struct EigenResult {
  double lambda = 0.0;
  GridField eigenfield;  // int v^2 dmu = 1
  double residual = 0.0;
  std::size_t iterations = 0;
  bool flagged = false;  // set when a required sign condition fails
  std::string note;
};

class EigenConvergenceError : public SolverError {
 public:
  EigenConvergenceError(const std::string& what, EigenResult best) : SolverError(what), best_(std::move(best)) {}
  const EigenResult& best() const { return best_; }

 private:
  EigenResult best_;
};

namespace detail {

/// Symmetric pencil K - sigma W of c(-Lap) + V with W = diag(rho dx).
struct WeightedPencil {
  std::vector<double> weight;  // rho_i dx
  std::vector<double> off;     // K(i, i+1) = -c kappa_{i+1/2} / dx
  std::vector<double> diag;    // K(i, i)

  WeightedPencil(const DiffusionOperator& lap, double c, const GridField& V) {
    const std::size_t n = lap.size();
    const double dx = lap.spacing();
    weight.resize(n);
    off.resize(n);
    diag.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      weight[i] = lap.density()[i] * dx;
      off[i] = -c * lap.flux_coefficient(i) / dx;
    }
    for (std::size_t i = 0; i < n; ++i) {
      diag[i] = c * (lap.flux_coefficient(i) + lap.flux_coefficient((i + n - 1) % n)) / dx + V[i] * weight[i];
    }
  }

  std::size_t size() const { return diag.size(); }

  std::vector<double> apply(const std::vector<double>& v) const {
    const std::size_t n = size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = diag[i] * v[i] + off[i] * v[(i + 1) % n] + off[(i + n - 1) % n] * v[(i + n - 1) % n];
    }
    return out;
  }

  /// Solves (K - sigma W) x = rhs.
  std::vector<double> solve_shifted(double sigma, const std::vector<double>& rhs) const {
    const std::size_t n = size();
    std::vector<double> lower(n), d(n), upper(n);
    for (std::size_t i = 0; i < n; ++i) {
      lower[i] = off[(i + n - 1) % n];
      upper[i] = off[i];
      d[i] = diag[i] - sigma * weight[i];
    }
    return solve_cyclic_tridiagonal(lower, d, upper, rhs);
  }

  double wdot(const std::vector<double>& a, const std::vector<double>& b) const {
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) s += weight[i] * a[i] * b[i];
    return s;
  }
};

}  // namespace detail

/// Smallest eigenpair of c(-Lap) + V by shifted inverse iteration, finished
/// with Rayleigh-quotient shifts. Throws EigenConvergenceError with the best
/// iterate after `cap` iterations.
inline EigenResult smallest_eigenpair(const ReducedGeometry& g, double c, const GridField& V, std::size_t cap = 500) {
  require_same_grid(g.radial_sq, V, "smallest_eigenpair");
  require_finite(V, "potential");
  if (!(c > 0.0)) throw DomainError("eigenproblem needs a positive diffusion coefficient");
  const DiffusionOperator lap(g);
  const detail::WeightedPencil P(lap, c, V);
  const std::size_t n = P.size();

  double arclength = 0.0;
  for (std::size_t i = 0; i < n; ++i) arclength += std::sqrt(g.radial_sq[i]) * g.spacing();
  const double k1 = 2.0 * std::numbers::pi / arclength;
  const double base_shift = V.min() - c * k1 * k1;

  std::vector<double> v(n, 1.0);
  auto normalize = [&](std::vector<double>& x) {
    const double norm = std::sqrt(P.wdot(x, x));
    for (double& e : x) e /= norm;
  };
  normalize(v);

  EigenResult best;
  best.residual = std::numeric_limits<double>::infinity();
  double lambda = 0.0;
  bool rayleigh = false;
  for (std::size_t it = 1; it <= cap; ++it) {
    const double shift = rayleigh ? lambda : base_shift;
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = P.weight[i] * v[i];
    std::vector<double> x;
    try {
      x = P.solve_shifted(shift, rhs);
    } catch (const SolverError&) {
      if (!rayleigh) throw;
      rayleigh = false;
      continue;
    }
    const double norm = std::sqrt(P.wdot(x, x));
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      if (!rayleigh) throw SolverError("inverse iteration broke down");
      rayleigh = false;
      continue;
    }
    for (double& e : x) e /= norm;

    const std::vector<double> Kx = P.apply(x);
    double rq = 0.0;
    for (std::size_t i = 0; i < n; ++i) rq += x[i] * Kx[i];
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = Kx[i] / P.weight[i] - rq * x[i];
      res += P.weight[i] * r * r;
    }
    res = std::sqrt(res);
    // A Rayleigh step that moved up to a higher eigenvalue is discarded.
    if (rayleigh && rq > best.lambda + 1e-6 * (1.0 + std::abs(best.lambda)) && best.residual < 1e-2) {
      rayleigh = false;
      v.assign(best.eigenfield.values().begin(), best.eigenfield.values().end());
      continue;
    }
    v = x;
    lambda = rq;
    if (res < best.residual) {
      best.lambda = rq;
      best.eigenfield = GridField(x, g.period());
      best.residual = res;
      best.iterations = it;
    }
    if (res <= 1e-9 * std::abs(rq) + 1e-11) break;
    if (!rayleigh && res < 1e-3 * (1.0 + std::abs(rq))) rayleigh = true;
    if (it == cap) {
      throw EigenConvergenceError("inverse iteration did not converge in " + std::to_string(cap) + " iterations", best);
    }
  }

  // sign convention: positive mean, else positive at the largest entry
  GridField& ef = best.eigenfield;
  double mean = lap.integrate(ef.values());
  if (std::abs(mean) < 1e-10) {
    std::size_t imax = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(ef[i]) > std::abs(ef[imax])) imax = i;
    }
    mean = ef[imax];
  }
  if (mean < 0.0) ef = ef.map([](double e) { return -e; });
  return best;
}

/// lambda_0 = inf int (4|grad v|^2 + S v^2) dmu over unit v: smallest
/// eigenvalue of -4 Lap + S.
inline EigenResult f_entropy_lambda0(const CoupledState& state) {
  return smallest_eigenpair(state.geom, 4.0, curvature(state).S);
}

/// lambda_1 = inf W(f)^2 over unit f with W(f)^2 = A int(|grad f|^2 + S f^2/4) + B int f^2.
/// Flagged when lambda_1 <= 0.
inline EigenResult lambda1_W(const CoupledState& state, double A, double B) {
  if (!(A > 0.0)) throw DomainError("lambda1_W needs A > 0");
  const GridField S = curvature(state).S;
  EigenResult r = smallest_eigenpair(state.geom, A, S.map([A, B](double s) { return 0.25 * A * s + B; }));
  if (!(r.lambda > 0.0)) {
    r.flagged = true;
    r.note = "lambda_1 is not positive";
  }
  return r;
}

// ---------------------------------------------------------------------------
// Sobolev functional

/// q = 2n/(n-2).
inline double sobolev_exponent(int n) { return 2.0 * n / (n - 2.0); }

/// (int |v|^q dmu)^{2/q}
inline double sobolev_lhs(const CoupledState& state, const GridField& v) {
  const double q = sobolev_exponent(state.geom.n);
  return std::pow(integrate(state, v.map([q](double e) { return std::pow(std::abs(e), q); })), 2.0 / q);
}

/// int (|grad v|^2 + S v^2 / 4) dmu with the summation-by-parts energy.
inline double w_energy(const CoupledState& state, const GridField& S, const GridField& v) {
  const DiffusionOperator lap(state.geom);
  GridField sv = v;
  for (std::size_t i = 0; i < v.size(); ++i) sv[i] = 0.25 * S[i] * v[i] * v[i];
  return lap.dirichlet_energy(v.values()) + lap.integrate(sv.values());
}

/// W(v)^2 = A int(|grad v|^2 + S v^2/4) dmu + B int v^2 dmu
inline double sobolev_rhs(const CoupledState& state, const GridField& S, const GridField& v, double A, double B) {
  return A * w_energy(state, S, v) + B * integrate(state, v.map([](double e) { return e * e; }));
}

struct SobolevReport {
  double A_used = 0.0;
  double B_used = 0.0;
  double observed_min_quotient = std::numeric_limits<double>::infinity();  // min RHS/LHS
  std::optional<double> predicted_A;
  std::optional<double> predicted_B;
  std::size_t family_size = 0;
  std::size_t violations = 0;
  std::uint64_t seed = 0;
  std::optional<double> minimizer_quotient;  // from the quotient search, when run
};

inline SobolevReport sobolev_check(const CoupledState& state, double A, double B, const std::vector<GridField>& family) {
  if (family.empty()) throw DomainError("sobolev_check needs a nonempty family");
  const GridField S = curvature(state).S;
  SobolevReport rep;
  rep.A_used = A;
  rep.B_used = B;
  rep.family_size = family.size();
  for (const auto& v : family) {
    require_same_grid(state.geom.radial_sq, v, "sobolev_check");
    if (v.max_abs() == 0.0) throw DomainError("sobolev_check family member is identically zero");
    const double lhs = sobolev_lhs(state, v);
    const double rhs = sobolev_rhs(state, S, v, A, B);
    rep.observed_min_quotient = std::min(rep.observed_min_quotient, rhs / lhs);
    if (lhs > rhs) ++rep.violations;
  }
  return rep;
}

/// Seeded trigonometric polynomials c0 + sum_{k<=6} (a_k cos kx + b_k sin kx)
/// with amplitudes decaying like 1/k.
inline std::vector<GridField> trig_family(std::size_t nodes, double period, std::size_t count, std::uint64_t seed) {
  std::vector<GridField> out;
  const double w = 2.0 * std::numbers::pi / period;
  for (std::size_t m = 0; m < count; ++m) {
    CounterRng rng(seed, 0x7219 + m);
    const double c0 = rng.next(-1.0, 1.0);
    double a[7], b[7];
    for (int k = 1; k <= 6; ++k) {
      a[k] = rng.next(-1.0, 1.0) / k;
      b[k] = rng.next(-1.0, 1.0) / k;
    }
    out.push_back(GridField::sample(nodes, period, [&](double x) {
      double v = c0;
      for (int k = 1; k <= 6; ++k) v += a[k] * std::cos(k * w * x) + b[k] * std::sin(k * w * x);
      return v;
    }));
  }
  return out;
}

struct QuotientSearch {
  double quotient = std::numeric_limits<double>::infinity();  // min RHS/LHS found
  GridField minimizer;
  std::size_t steps = 0;
};

/// Minimizes W(v)^2 / ||v||_q^2 by normalized gradient descent with an H^1
/// preconditioner, from several seeded starts plus the constant function.
inline QuotientSearch minimize_sobolev_quotient(const CoupledState& state, double A, double B, std::uint64_t seed,
                                                std::size_t starts = 4, std::size_t cap = 500) {
  const GridField S = curvature(state).S;
  const DiffusionOperator lap(state.geom);
  const std::size_t n = state.geom.nodes();
  const double q = sobolev_exponent(state.geom.n);
  const detail::WeightedPencil precond(lap, 1.0, GridField::constant(n, state.geom.period(), 1.0));

  auto quotient = [&](const GridField& v) { return sobolev_rhs(state, S, v, A, B) / sobolev_lhs(state, v); };
  auto gradient = [&](const GridField& v, double Q) {
    // Gradient of RHS - Q LHS in nodal coordinates, then H^1-preconditioned.
    const GridField lv = lap.apply(v);
    double lq = 0.0;
    for (std::size_t i = 0; i < n; ++i) lq += precond.weight[i] * std::pow(std::abs(v[i]), q);
    const double lhs_scale = 2.0 * std::pow(lq, 2.0 / q - 1.0);
    std::vector<double> gr(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double w = precond.weight[i];
      const double drhs = 2.0 * A * (-lv[i] + 0.25 * S[i] * v[i]) * w + 2.0 * B * v[i] * w;
      const double dlhs = lhs_scale * std::pow(std::abs(v[i]), q - 2.0) * v[i] * w;
      gr[i] = drhs - Q * dlhs;
    }
    return precond.solve_shifted(0.0, gr);
  };
  auto normalized = [&](GridField v) {
    const double m = std::sqrt(integrate(state, v.map([](double e) { return e * e; })));
    return v.map([m](double e) { return e / m; });
  };

  std::vector<GridField> seeds = trig_family(n, state.geom.period(), starts, seed ^ 0x51ED);
  seeds.push_back(GridField::constant(n, state.geom.period(), 1.0));
  QuotientSearch best;
  for (auto& start : seeds) {
    GridField v = normalized(start);
    double Q = quotient(v);
    double step = 0.1;
    for (std::size_t it = 0; it < cap; ++it) {
      const std::vector<double> d = gradient(v, Q);
      double dn = 0.0;
      for (std::size_t i = 0; i < n; ++i) dn = std::max(dn, std::abs(d[i]));
      if (dn < 1e-14) break;
      bool improved = false;
      for (int tries = 0; tries < 30; ++tries) {
        GridField trial = v;
        for (std::size_t i = 0; i < n; ++i) trial[i] -= step * d[i] / dn * v.max_abs();
        if (trial.max_abs() == 0.0) {
          step *= 0.5;
          continue;
        }
        trial = normalized(trial);
        const double Qt = quotient(trial);
        if (Qt < Q) {
          v = trial;
          Q = Qt;
          step *= 1.5;
          improved = true;
          break;
        }
        step *= 0.5;
      }
      ++best.steps;
      if (!improved) break;
    }
    if (Q < best.quotient) {
      best.quotient = Q;
      best.minimizer = v;
    }
  }
  return best;
}

/// Initial Sobolev constants (A0, B0) for
///   ||v||_q^2 <= A int(|grad v|^2 + S v^2/4) + B int v^2.
/// B(A) = 2 vol^{-2/n} + A S0/4 keeps (A/4)S + B > 0; A_min
/// is bisected so that the minimized quotient is >= 1, and A0 = 2 A_min.
struct InitialSobolevConstants {
  double A0 = 0.0;
  double B0 = 0.0;
  double S0 = 0.0;
  double A_min = 0.0;
  double min_quotient = 0.0;  // at (A0, B0)
};

inline InitialSobolevConstants estimate_sobolev_constants(const CoupledState& state, std::uint64_t seed) {
  const GridField S = curvature(state).S;
  const int n = state.geom.n;
  const double vol = volume(state.geom);
  InitialSobolevConstants c;
  c.S0 = std::max(0.0, -S.min());
  auto B_of = [&](double A) { return 2.0 * std::pow(vol, -2.0 / n) + 0.25 * A * c.S0; };
  auto ok = [&](double A) { return minimize_sobolev_quotient(state, A, B_of(A), seed, 3, 300).quotient >= 1.0; };
  double hi = 1.0;
  while (!ok(hi)) {
    hi *= 2.0;
    if (hi > 1e12) throw SolverError("no Sobolev constant found below 1e12");
  }
  double lo = hi;
  while (lo > 1e-12 && ok(0.5 * lo)) lo *= 0.5;
  lo *= 0.5;
  if (lo <= 1e-12) {
    c.A_min = 1e-12;
  } else {
    for (int it = 0; it < 30 && hi - lo > 1e-4 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (ok(mid) ? hi : lo) = mid;
    }
    c.A_min = hi;
  }
  c.A0 = 2.0 * c.A_min;
  c.B0 = B_of(c.A0);
  c.min_quotient = minimize_sobolev_quotient(state, c.A0, c.B0, seed).quotient;
  return c;
}

// ---------------------------------------------------------------------------
// Log-Sobolev

struct LogSobolevResult {
  double residual = 0.0;  // RHS - LHS
  bool renormalized = false;
};

/// RHS - LHS of
///   int v^2 ln v^2 <= eps^2 int(4|grad v|^2 + S v^2) - n ln(2 eps)
///                     + 4(t + eps^2) B0/A0 + (n/2) ln(n A0 / (2e)).
inline LogSobolevResult log_sobolev_residual(const CoupledState& state, GridField v, double eps, double A0, double B0,
                                             double t) {
  if (!(eps > 0.0)) throw DomainError("log-Sobolev needs eps > 0");
  if (!(A0 > 0.0)) throw DomainError("log-Sobolev needs A0 > 0");
  require_same_grid(state.geom.radial_sq, v, "log_sobolev_residual");
  const double m = integrate(state, v.map([](double e) { return e * e; }));
  if (!(m > 0.0)) throw DomainError("log-Sobolev test function is identically zero");
  LogSobolevResult out;
  if (std::abs(m - 1.0) > 1e-12) {
    const double s = 1.0 / std::sqrt(m);
    v = v.map([s](double e) { return e * s; });
    out.renormalized = true;
  }
  const int n = state.geom.n;
  const GridField S = curvature(state).S;
  const double lhs = integrate(state, v.map([](double e) {
    const double w = e * e;
    return w > 0.0 ? w * std::log(w) : 0.0;
  }));
  const double rhs = eps * eps * 4.0 * w_energy(state, S, v) - n * std::log(2.0 * eps) +
                     4.0 * (t + eps * eps) * B0 / A0 + 0.5 * n * std::log(n * A0 / (2.0 * std::numbers::e));
  out.residual = rhs - lhs;
  return out;
}

// ---------------------------------------------------------------------------
// Truncation family

struct TruncationReport {
  double lhs = 0.0;  // sum_k W(f_k)^2
  double rhs = 0.0;  // W(f)^2
  int k_min = 0;
  int k_max = -1;
  std::size_t levels = 0;
  double energy_sum = 0.0;    // sum_k int |grad f_k|^2
  double energy_full = 0.0;   // int |grad f|^2
  double floor_energy = 0.0;  // int |grad min(f, 2^k_min)|^2, the truncated bottom part
  double grad_identity_residual = 0.0;  // |energy_sum + floor_energy - energy_full|
  bool pass = true;
};

/// f_k = min((f - 2^k)^+, 2^k).
inline GridField truncation_level(const GridField& f, int k) {
  const double c = std::ldexp(1.0, k);
  return f.map([c](double v) { return std::min(std::max(v - c, 0.0), c); });
}

inline TruncationReport truncation_claim_check(const CoupledState& state, const GridField& f, double A, double B,
                                               double slack = 0.0) {
  require_same_grid(state.geom.radial_sq, f, "truncation_claim_check");
  require_finite(f, "truncated field");
  if (f.min() < 0.0) throw DomainError("truncation claim needs f >= 0");
  const GridField S = curvature(state).S;
  for (std::size_t i = 0; i < S.size(); ++i) {
    if (0.25 * A * S[i] + B < 0.0) {
      throw PreconditionError("(A/4)S + B < 0 at node " + std::to_string(i) + " (value " +
                              std::to_string(0.25 * A * S[i] + B) + ")");
    }
  }
  const DiffusionOperator lap(state.geom);
  TruncationReport rep;
  const double top = f.max();
  if (top <= 0.0) return rep;
  rep.rhs = sobolev_rhs(state, S, f, A, B);
  rep.energy_full = lap.dirichlet_energy(f.values());
  rep.k_max = static_cast<int>(std::floor(std::log2(top)));
  rep.k_min = static_cast<int>(std::floor(std::log2(top * std::ldexp(1.0, -12))));
  for (int k = rep.k_min; k <= rep.k_max; ++k) {
    const GridField fk = truncation_level(f, k);
    rep.lhs += sobolev_rhs(state, S, fk, A, B);
    rep.energy_sum += lap.dirichlet_energy(fk.values());
    ++rep.levels;
  }
  const double floor = std::ldexp(1.0, rep.k_min);
  const GridField bottom = f.map([floor](double v) { return std::min(v, floor); });
  rep.floor_energy = lap.dirichlet_energy(bottom.values());
  rep.grad_identity_residual = std::abs(rep.energy_sum + rep.floor_energy - rep.energy_full);
  rep.pass = rep.lhs <= rep.rhs + slack;
  return rep;
}

}  // namespace hrf

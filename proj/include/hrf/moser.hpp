#pragma once

// Explicit constants for the parabolic Moser iteration and the sup-bound check
//
//   sup_x f(x, t) <= (C_B + C0_neg S0 + C1 a + C2 / t)^{(n+2)/(2p)}
//                    * (int_0^T int_M f^p dmu dt)^{1/p}
//
// for nonnegative subsolutions of d/dt f <= Lap f + a f.
//
// Iterating the reverse-Hoelder step
//   H(p chi, sigma) <= (4^{1+1/n} A)^{1/(p chi)} (c + 1/(sigma - tau))^{1/p} H(p, tau)
// with chi = 1 + 2/n and p_k = p0 chi^k gives the product constant
//
//   C0 = (4^{1+1/n} A)^{sum_k 1/p_{k+1}} chi^{sum_k k/p_k},
//   sum_k 1/p_k     = (n+2)/(2 p0)     (geometric),
//   sum_k 1/p_{k+1} = n/(2 p0)         (geometric),
//   sum_k k/p_k     = n(n+2)/(4 p0)    (arithmetico-geometric, sum k r^k = r/(1-r)^2).
//
// Writing C0 X^E = (kappa X)^E with E = (n+2)/(2 p0) and
// kappa = C0^{1/E} = (4^{1+1/n} A)^{n/(n+2)} chi^{n/2}, the bracket
// a p0 + S0 + 2B/A + (n+2)/(2 dt) yields C1 = kappa p0, C2 = kappa (n+2)/2,
// C0_neg = kappa and C_B = 2 kappa B / A. The B term comes from a Sobolev
// inequality with an L^2 remainder B int v^2; it vanishes when B = 0.
//
// For 0 < p < 2 the p0 = 2 constants are multiplied by F_p^{1/E} with
//   F_p = Y_p (1 - theta)^{-E} / (1 - 2^{-1/2}),   Y_p = (p/2)(2-p)^{(2-p)/p},
// theta chosen so that 2 theta^E = sqrt(2). Y_p is the Young-inequality
// constant and (1 - theta)^{-E} the cost of the geometric time partition.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "hrf/errors.hpp"
#include "hrf/field_series.hpp"
#include "hrf/flow.hpp"

namespace hrf {

struct MoserConstants {
  int n = 3;
  double p = 2.0;   // exponent the constants are valid for
  double p0 = 2.0;  // base exponent of the iteration (max(p, 2))
  double chi = 5.0 / 3.0;
  double A = 1.0;
  double B = 0.0;
  double C0 = 1.0;
  double C1 = 1.0;
  double C2 = 1.0;
  double C0_neg = 1.0;
  double C_B = 0.0;

  double exponent() const { return (n + 2.0) / (2.0 * p); }
};

/// sum_{k>=0} 1/p_k for p_k = p0 chi^k, chi = 1 + 2/n.
inline double inverse_exponent_sum(int n, double p0) { return (n + 2.0) / (2.0 * p0); }
/// sum_{k>=0} 1/p_{k+1}.
inline double shifted_inverse_exponent_sum(int n, double p0) { return n / (2.0 * p0); }
/// sum_{k>=0} k/p_k.
inline double weighted_inverse_exponent_sum(int n, double p0) { return n * (n + 2.0) / (4.0 * p0); }

inline MoserConstants moser_constants(int n, double p, double A, double B = 0.0) {
  if (n < 3) throw UnsupportedDimensionError("Moser constants need n >= 3");
  if (!(p > 0.0) || !(A > 0.0) || !(B >= 0.0) || !std::isfinite(p)) {
    throw DomainError("Moser constants need p > 0, A > 0 and B >= 0");
  }
  MoserConstants c;
  c.n = n;
  c.p = p;
  c.p0 = std::max(p, 2.0);
  c.chi = 1.0 + 2.0 / n;
  c.A = A;
  c.B = B;
  const double sobolev = std::pow(4.0, 1.0 + 1.0 / n) * A;
  c.C0 = std::pow(sobolev, shifted_inverse_exponent_sum(n, c.p0)) *
         std::pow(c.chi, weighted_inverse_exponent_sum(n, c.p0));
  const double kappa = std::pow(sobolev, n / (n + 2.0)) * std::pow(c.chi, 0.5 * n);
  c.C1 = kappa * c.p0;
  c.C2 = kappa * 0.5 * (n + 2.0);
  c.C0_neg = kappa;
  c.C_B = 2.0 * kappa * B / A;
  if (p < 2.0) {
    const double E = c.exponent();
    const double theta = std::pow(2.0, -0.5 / E);
    const double young = 0.5 * p * std::pow(2.0 - p, (2.0 - p) / p);
    const double factor = young * std::pow(1.0 - theta, -E) / (1.0 - std::sqrt(0.5));
    const double scale = std::pow(factor, 1.0 / E);
    c.C1 *= scale;
    c.C2 *= scale;
    c.C0_neg *= scale;
    c.C_B *= scale;
  }
  return c;
}

struct SupBoundEntry {
  double t = 0.0;  // time since the start of the series
  double sup_f = 0.0;
  double bound = 0.0;
  double ratio = 0.0;
  bool pass = true;
};

struct SupBoundReport {
  double p = 1.0;
  double exponent = 0.0;
  double space_time_integral = 0.0;  // int_0^T int_M f^p dmu dt
  std::vector<SupBoundEntry> entries;
  bool pass = true;
  double max_ratio = 0.0;
};

/// Checks the sup-bound for every output time of `f` after its first.
/// Times are measured from f.times.front(); the caller attests that f is a
/// subsolution (the harness only feeds exact heat-equation solutions).
inline SupBoundReport sup_bound_check(const Trajectory& traj, const FieldSeries& f, double a, double p,
                                      const MoserConstants& constants, double S0) {
  if (f.size() < 2) throw DomainError("sup_bound_check needs at least two times");
  if (!(a >= 0.0) || !(p > 0.0) || !(S0 >= 0.0)) throw DomainError("sup_bound_check needs a >= 0, p > 0, S0 >= 0");
  if (std::abs(constants.p - p) > 1e-12 * p) {
    throw PreconditionError("Moser constants were computed for p = " + std::to_string(constants.p));
  }
  for (const auto& field : f.fields) {
    if (field.min() < -1e-10) throw InvalidFieldError("sup_bound_check needs nonnegative fields");
  }

  SupBoundReport rep;
  rep.p = p;
  rep.exponent = constants.exponent();
  std::vector<double> slice(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    const CoupledState s = traj.state_at(f.times[k]);
    const GridField powered = f.fields[k].map([p](double v) { return std::pow(std::max(v, 0.0), p); });
    slice[k] = integrate(s, powered);
  }
  double total = 0.0;
  for (std::size_t k = 1; k < f.size(); ++k) total += 0.5 * (slice[k] + slice[k - 1]) * (f.times[k] - f.times[k - 1]);
  rep.space_time_integral = total;

  const double norm = std::pow(total, 1.0 / p);
  for (std::size_t k = 1; k < f.size(); ++k) {
    SupBoundEntry e;
    e.t = f.times[k] - f.times.front();
    e.sup_f = std::max(f.fields[k].max(), 0.0);
    const double bracket = constants.C_B + constants.C0_neg * S0 + constants.C1 * a + constants.C2 / e.t;
    e.bound = std::pow(bracket, rep.exponent) * norm;
    e.ratio = e.bound > 0.0 ? e.sup_f / e.bound : (e.sup_f > 0.0 ? INFINITY : 0.0);
    e.pass = e.sup_f <= e.bound;
    rep.pass = rep.pass && e.pass;
    rep.max_ratio = std::max(rep.max_ratio, e.ratio);
    rep.entries.push_back(e);
  }
  return rep;
}

}  // namespace hrf

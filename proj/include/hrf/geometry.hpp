#pragma once

// Symmetry-reduced closed manifolds and their differential operators.
//
// Both backends are multiply-warped products over a circle of length L,
//
//   g = F(x)^2 dx^2 + sum_j h_j(x)^2 g_j,
//
// where each g_j is a unit Einstein fiber of dimension d_j with
// Ric(g_j) = (d_j - 1) K_j g_j. WarpedCircleSphere has one round S^{n-1}
// fiber (K = 1); DiagonalTorus has two flat circle fibers (K = 0) with
// periods Ly, Lz. The geometry stores the squared coefficients F^2 and h_j^2,
// which are the variables the flow evolves.
//
// With arclength derivatives  u_s = u'/F  and  u_ss = (1/F)(u'/F)',  the
// orthonormal-frame Ricci eigenvalues are
//
//   Ric_ss = -sum_j d_j h_j,ss / h_j
//   Ric_j  = -h_j,ss/h_j - (d_j - 1)(h_j,s/h_j)^2 + (d_j - 1) K_j / h_j^2
//            - (h_j,s/h_j) sum_{l != j} d_l h_l,s/h_l.
//
// All stencils are second-order centered on the periodic grid. The
// Laplace-Beltrami operator uses the divergence form
// (1/rho)(kappa u')' with rho = sqrt(det g) and kappa = rho/F^2 averaged to
// half nodes, so it is self-adjoint in the discrete rho-weighted inner product.

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "hrf/errors.hpp"
#include "hrf/grid_field.hpp"

namespace hrf {

enum class Backend { WarpedCircleSphere, DiagonalTorus };

inline std::string_view to_string(Backend b) {
  return b == Backend::WarpedCircleSphere ? "warped-circle-sphere" : "diagonal-torus";
}

inline Backend parse_backend(std::string_view name) {
  if (name == "warped-circle-sphere") return Backend::WarpedCircleSphere;
  if (name == "diagonal-torus") return Backend::DiagonalTorus;
  throw ConfigError("unknown backend '" + std::string(name) + "'");
}

/// Volume of the unit round sphere S^k: 2 pi^{(k+1)/2} / Gamma((k+1)/2).
inline double unit_sphere_volume(int k) {
  const double m = 0.5 * static_cast<double>(k + 1);
  return 2.0 * std::pow(std::numbers::pi, m) / std::tgamma(m);
}

struct FiberFamily {
  int dim = 1;
  double curvature = 0.0;  // K of the unit fiber
  double volume = 1.0;     // volume of the unit fiber
  GridField warp_sq;       // h^2
};

struct ReducedGeometry {
  Backend backend = Backend::WarpedCircleSphere;
  int n = 3;
  GridField radial_sq;  // F^2 (a^2 for the torus)
  std::vector<FiberFamily> fibers;

  std::size_t nodes() const { return radial_sq.size(); }
  double period() const { return radial_sq.period(); }
  double spacing() const { return radial_sq.spacing(); }

  /// Throws DegenerateMetricError / UnsupportedDimensionError.
  void validate() const {
    if (n < 3) throw UnsupportedDimensionError("manifold dimension must be >= 3, got " + std::to_string(n));
    int dims = 1;
    require_finite(radial_sq, "radial coefficient");
    if (radial_sq.min() <= 0.0) throw DegenerateMetricError("radial metric coefficient is not positive");
    for (const auto& f : fibers) {
      require_same_grid(radial_sq, f.warp_sq, "fiber coefficient");
      require_finite(f.warp_sq, "fiber coefficient");
      if (f.warp_sq.min() <= 0.0) throw DegenerateMetricError("fiber metric coefficient is not positive");
      dims += f.dim;
    }
    if (dims != n) throw UnsupportedDimensionError("fiber dimensions do not add up to n");
  }
};

using Profile = std::function<double(double)>;

/// Coefficient initializers. For WarpedCircleSphere: radial = F, warps = {h}.
/// For DiagonalTorus: radial = a, warps = {b, c}.
struct GeometryInit {
  Profile radial;
  std::vector<Profile> warps;
  double period_y = 2.0 * std::numbers::pi;
  double period_z = 2.0 * std::numbers::pi;
};

inline ReducedGeometry build_geometry(Backend backend, int n, std::size_t nodes, double period,
                                      const GeometryInit& init) {
  if (n < 3) throw UnsupportedDimensionError("manifold dimension must be >= 3, got " + std::to_string(n));
  if (backend == Backend::DiagonalTorus && n != 3) {
    throw UnsupportedDimensionError("diagonal torus backend is three-dimensional");
  }
  const std::size_t expected_warps = backend == Backend::DiagonalTorus ? 2 : 1;
  if (!init.radial || init.warps.size() != expected_warps) {
    throw ConfigError("wrong number of coefficient initializers for backend " + std::string(to_string(backend)));
  }
  auto squared = [&](const Profile& p, const char* what) {
    GridField c = GridField::sample(nodes, period, p);
    require_finite(c, what);
    for (std::size_t i = 0; i < nodes; ++i) {
      if (!(c[i] > 0.0)) {
        throw DegenerateMetricError(std::string(what) + " is not positive at node " + std::to_string(i));
      }
    }
    return c.map([](double v) { return v * v; });
  };

  ReducedGeometry g;
  g.backend = backend;
  g.n = n;
  g.radial_sq = squared(init.radial, "radial coefficient");
  if (backend == Backend::WarpedCircleSphere) {
    g.fibers.push_back({n - 1, 1.0, unit_sphere_volume(n - 1), squared(init.warps[0], "warping coefficient")});
  } else {
    g.fibers.push_back({1, 0.0, init.period_y, squared(init.warps[0], "y coefficient")});
    g.fibers.push_back({1, 0.0, init.period_z, squared(init.warps[1], "z coefficient")});
  }
  g.validate();
  return g;
}

/// The pair (g, phi) at time t with coupling alpha(t). phi maps into flat R^m.
struct CoupledState {
  ReducedGeometry geom;
  std::vector<GridField> phi;
  double t = 0.0;
  double alpha = 1.0;

  void validate() const {
    geom.validate();
    if (!(alpha > 0.0)) throw DomainError("coupling alpha must be positive");
    for (const auto& c : phi) {
      require_same_grid(geom.radial_sq, c, "map component");
      require_finite(c, "map component");
    }
  }
};

struct CurvatureReport {
  GridField ric_radial;
  std::vector<GridField> ric_fiber;  // one per fiber family
  GridField R;
  GridField S_radial;
  std::vector<GridField> S_fiber;
  GridField S;
};

namespace detail {

/// Arclength first and second derivatives of a field in the reduced frame.
struct FrameDerivatives {
  std::vector<double> d1;  // u_s
  std::vector<double> d2;  // u_ss
};

inline std::vector<double> sqrt_values(const GridField& f) {
  std::vector<double> r(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) r[i] = std::sqrt(f[i]);
  return r;
}

inline FrameDerivatives frame_derivatives(const std::vector<double>& u, const std::vector<double>& radial,
                                          double dx) {
  const std::size_t n = u.size();
  FrameDerivatives d{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t ip = (i + 1) % n;
    const std::size_t im = (i + n - 1) % n;
    const double f_plus = 0.5 * (radial[i] + radial[ip]);
    const double f_minus = 0.5 * (radial[i] + radial[im]);
    d.d1[i] = (u[ip] - u[im]) / (2.0 * dx * radial[i]);
    d.d2[i] = ((u[ip] - u[i]) / f_plus - (u[i] - u[im]) / f_minus) / (dx * dx * radial[i]);
  }
  return d;
}

inline std::vector<double> centered_derivative(const GridField& u) {
  const std::size_t n = u.size();
  const double dx = u.spacing();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = (u[(i + 1) % n] - u[(i + n - 1) % n]) / (2.0 * dx);
  return d;
}

}  // namespace detail

/// Volume density rho = sqrt(det g) including the unit-fiber volumes, so that
/// integral u dmu = sum_i rho_i u_i dx.
inline GridField volume_density(const ReducedGeometry& g) {
  GridField rho = g.radial_sq.map([](double v) { return std::sqrt(v); });
  for (const auto& f : g.fibers) {
    for (std::size_t i = 0; i < rho.size(); ++i) {
      rho[i] *= std::pow(f.warp_sq[i], 0.5 * f.dim);
    }
    for (std::size_t i = 0; i < rho.size(); ++i) rho[i] *= f.volume;
  }
  return rho;
}

/// Discrete divergence-form Laplace-Beltrami operator of a fixed geometry.
class DiffusionOperator {
 public:
  explicit DiffusionOperator(const ReducedGeometry& g)
      : rho_(volume_density(g)), kappa_half_(g.nodes()), dx_(g.spacing()) {
    const std::size_t n = g.nodes();
    std::vector<double> kappa(n);
    for (std::size_t i = 0; i < n; ++i) kappa[i] = rho_[i] / g.radial_sq[i];
    for (std::size_t i = 0; i < n; ++i) kappa_half_[i] = 0.5 * (kappa[i] + kappa[(i + 1) % n]);
  }

  std::size_t size() const { return kappa_half_.size(); }
  double spacing() const { return dx_; }
  const GridField& density() const { return rho_; }
  /// kappa at the half node between i and i+1.
  double flux_coefficient(std::size_t i) const { return kappa_half_[i]; }

  void apply(std::span<const double> u, std::span<double> out) const {
    const std::size_t n = size();
    const double inv = 1.0 / (dx_ * dx_);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t ip = (i + 1) % n;
      const std::size_t im = (i + n - 1) % n;
      out[i] = (kappa_half_[i] * (u[ip] - u[i]) - kappa_half_[im] * (u[i] - u[im])) * inv / rho_[i];
    }
  }

  GridField apply(const GridField& u) const {
    GridField out = u;
    apply(u.values(), out.values());
    return out;
  }

  double integrate(std::span<const double> u) const {
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) s += rho_[i] * u[i];
    return s * dx_;
  }

  /// Summation-by-parts Dirichlet energy: integral |grad u|^2 dmu = -<u, Lap u>.
  double dirichlet_energy(std::span<const double> u) const {
    const std::size_t n = size();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = u[(i + 1) % n] - u[i];
      s += kappa_half_[i] * d * d;
    }
    return s / dx_;
  }

  /// Gershgorin bound on the spectral radius of -Lap.
  double spectral_bound() const {
    const std::size_t n = size();
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double row = 2.0 * (kappa_half_[i] + kappa_half_[(i + n - 1) % n]) / (rho_[i] * dx_ * dx_);
      m = std::max(m, row);
    }
    return m;
  }

 private:
  GridField rho_;
  std::vector<double> kappa_half_;
  double dx_;
};

inline double integrate(const ReducedGeometry& g, const GridField& u) {
  require_same_grid(g.radial_sq, u, "integrate");
  const GridField rho = volume_density(g);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += rho[i] * u[i];
  return s * g.spacing();
}

inline double integrate(const CoupledState& state, const GridField& u) { return integrate(state.geom, u); }

inline double volume(const ReducedGeometry& g) {
  return integrate(g, GridField::constant(g.nodes(), g.period(), 1.0));
}

inline GridField laplace_beltrami(const ReducedGeometry& g, const GridField& u) {
  require_same_grid(g.radial_sq, u, "laplace_beltrami");
  return DiffusionOperator(g).apply(u);
}

inline GridField laplace_beltrami(const CoupledState& state, const GridField& u) {
  return laplace_beltrami(state.geom, u);
}

/// |grad u|^2 = g^{xx} (u')^2 with centered differences.
inline GridField grad_norm_sq(const ReducedGeometry& g, const GridField& u) {
  require_same_grid(g.radial_sq, u, "grad_norm_sq");
  const auto d = detail::centered_derivative(u);
  GridField out = u;
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = d[i] * d[i] / g.radial_sq[i];
  return out;
}

inline GridField grad_norm_sq(const CoupledState& state, const GridField& u) { return grad_norm_sq(state.geom, u); }

/// sum over map components of |grad phi_c|^2.
inline GridField map_energy_density(const CoupledState& state) {
  GridField e = GridField::constant(state.geom.nodes(), state.geom.period(), 0.0);
  for (const auto& c : state.phi) e = axpy(e, 1.0, grad_norm_sq(state.geom, c));
  return e;
}

struct HessianRadial {
  GridField hess_xx;                // Hess u(e_s, e_s)
  std::vector<GridField> hess_fiber;  // Hess u on each fiber family (orthonormal)
};

/// Distinct Hessian eigenvalues of an x-only function in the reduced frame:
/// radial u_ss and, per fiber family, (h_s/h) u_s.
inline HessianRadial hessian_radial(const ReducedGeometry& g, const GridField& u) {
  require_same_grid(g.radial_sq, u, "hessian_radial");
  const auto radial = detail::sqrt_values(g.radial_sq);
  const double dx = g.spacing();
  const std::vector<double> uv(u.values().begin(), u.values().end());
  const auto du = detail::frame_derivatives(uv, radial, dx);
  HessianRadial h{GridField(du.d2, u.period()), {}};
  for (const auto& f : g.fibers) {
    const auto warp = detail::sqrt_values(f.warp_sq);
    const auto dh = detail::frame_derivatives(warp, radial, dx);
    GridField comp = u;
    for (std::size_t i = 0; i < u.size(); ++i) comp[i] = dh.d1[i] / warp[i] * du.d1[i];
    h.hess_fiber.push_back(std::move(comp));
  }
  return h;
}

inline HessianRadial hessian_radial(const CoupledState& state, const GridField& u) {
  return hessian_radial(state.geom, u);
}

/// Ricci, scalar curvature and the S tensor of the state.
inline CurvatureReport curvature(const CoupledState& state) {
  state.validate();
  const ReducedGeometry& g = state.geom;
  const std::size_t n = g.nodes();
  const double L = g.period();
  const double dx = g.spacing();
  const auto radial = detail::sqrt_values(g.radial_sq);

  const std::size_t families = g.fibers.size();
  std::vector<std::vector<double>> log_d1(families, std::vector<double>(n));  // h_s / h
  std::vector<std::vector<double>> rel_d2(families, std::vector<double>(n));  // h_ss / h
  for (std::size_t j = 0; j < families; ++j) {
    const auto warp = detail::sqrt_values(g.fibers[j].warp_sq);
    const auto d = detail::frame_derivatives(warp, radial, dx);
    for (std::size_t i = 0; i < n; ++i) {
      log_d1[j][i] = d.d1[i] / warp[i];
      rel_d2[j][i] = d.d2[i] / warp[i];
    }
  }

  CurvatureReport rep;
  rep.ric_radial = GridField::constant(n, L, 0.0);
  rep.R = GridField::constant(n, L, 0.0);
  for (std::size_t j = 0; j < families; ++j) rep.ric_fiber.push_back(GridField::constant(n, L, 0.0));

  for (std::size_t i = 0; i < n; ++i) {
    double ric_ss = 0.0;
    for (std::size_t j = 0; j < families; ++j) ric_ss -= g.fibers[j].dim * rel_d2[j][i];
    rep.ric_radial[i] = ric_ss;

    double scalar = 0.0;
    for (std::size_t j = 0; j < families; ++j) {
      const double d = g.fibers[j].dim;
      const double K = g.fibers[j].curvature;
      double cross = 0.0;
      for (std::size_t l = 0; l < families; ++l) {
        if (l != j) cross += g.fibers[l].dim * log_d1[l][i];
      }
      rep.ric_fiber[j][i] = -rel_d2[j][i] - (d - 1.0) * log_d1[j][i] * log_d1[j][i] +
                            (d - 1.0) * K / g.fibers[j].warp_sq[i] - log_d1[j][i] * cross;
      // scalar curvature assembled from its own closed form (not the trace)
      scalar += -2.0 * d * rel_d2[j][i] - d * (d - 1.0) * log_d1[j][i] * log_d1[j][i] +
                d * (d - 1.0) * K / g.fibers[j].warp_sq[i] - d * log_d1[j][i] * cross;
    }
    rep.R[i] = scalar;
  }

  const GridField energy = map_energy_density(state);
  rep.S_radial = axpy(rep.ric_radial, -state.alpha, energy);
  rep.S_fiber = rep.ric_fiber;
  rep.S = axpy(rep.R, -state.alpha, energy);
  return rep;
}

/// Frame-weighted trace Ric_ss + sum_j d_j Ric_j.
inline GridField ricci_trace(const ReducedGeometry& g, const CurvatureReport& c) {
  GridField tr = c.ric_radial;
  for (std::size_t j = 0; j < g.fibers.size(); ++j) tr = axpy(tr, g.fibers[j].dim, c.ric_fiber[j]);
  return tr;
}

}  // namespace hrf

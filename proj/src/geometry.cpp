#include "hierembed/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace hierembed {

namespace {

void check_same_dim(ConstVec x, ConstVec y) {
  if (x.size() != y.size()) {
    throw DimensionError("dimension mismatch: " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  }
}

void check_in_ball(ConstVec x) {
  if (!(squared_norm(x) < 1.0)) throw DomainError("point lies on or outside the unit ball");
}

double clamp_unit(double c) { return std::clamp(c, -1.0, 1.0); }

// -1 / sqrt(1 - c²) with c kept away from ±1.
double d_arccos(double c) {
  const double cc = std::clamp(c, -kGradientClamp, kGradientClamp);
  return -1.0 / std::sqrt(1.0 - cc * cc);
}

double d_arcsin(double s) {
  const double sc = std::clamp(s, -kGradientClamp, kGradientClamp);
  return 1.0 / std::sqrt(1.0 - sc * sc);
}

void axpy(double a, ConstVec x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

double hyper_aperture_arg(double r, double k) { return k * (1.0 - r * r) / r; }

void check_aperture_domain(double r, const ConeParams& p) {
  if (r < p.epsilon() * (1.0 - 1e-12)) {
    throw DomainError("norm " + std::to_string(r) + " below aperture domain floor " + std::to_string(p.epsilon()));
  }
}

struct EuclidTerms {
  double c;  // cos Ξ
  double nx;
  double nd;
  Vec d;  // y - x
};

std::optional<EuclidTerms> euclid_terms(ConstVec x, ConstVec y) {
  EuclidTerms t;
  t.d.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) t.d[i] = y[i] - x[i];
  t.nx = norm(x);
  t.nd = norm(t.d);
  if (t.nx < kDenominatorFloor || t.nd < kDenominatorFloor) return std::nullopt;
  t.c = dot(x, t.d) / (t.nx * t.nd);
  return t;
}

struct HyperTerms {
  double c;
  double num;
  double den;
  double p;   // ‖x‖²
  double q;   // ‖y‖²
  double a;   // <x, y>
  double nd;  // ‖x - y‖
  double s;   // 1 + ‖x‖²‖y‖² - 2<x,y>
};

std::optional<HyperTerms> hyper_terms(ConstVec x, ConstVec y) {
  HyperTerms t;
  t.p = squared_norm(x);
  t.q = squared_norm(y);
  t.a = dot(x, y);
  double dd = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dd += (x[i] - y[i]) * (x[i] - y[i]);
  t.nd = std::sqrt(dd);
  t.s = std::max(1.0 + t.p * t.q - 2.0 * t.a, 0.0);
  t.num = t.a * (1.0 + t.p) - t.p * (1.0 + t.q);
  t.den = std::sqrt(t.p) * t.nd * std::sqrt(t.s);
  if (std::sqrt(t.p) < kDenominatorFloor || t.nd < kDenominatorFloor || t.den < kDenominatorFloor) {
    return std::nullopt;
  }
  t.c = t.num / t.den;
  return t;
}

}  // namespace

std::string_view to_string(Geometry g) {
  switch (g) {
    case Geometry::order: return "oe";
    case Geometry::euclidean_cone: return "ec";
    case Geometry::hyperbolic_cone: return "hc";
  }
  return "?";
}

Geometry parse_geometry(std::string_view s) {
  if (s == "oe") return Geometry::order;
  if (s == "ec") return Geometry::euclidean_cone;
  if (s == "hc") return Geometry::hyperbolic_cone;
  throw std::invalid_argument("unknown geometry '" + std::string(s) + "' (expected oe, ec or hc)");
}

double ConeParams::epsilon() const {
  switch (geometry) {
    case Geometry::order: return 0.0;
    case Geometry::euclidean_cone: return aperture_k;
    case Geometry::hyperbolic_cone:
      return (-1.0 + std::sqrt(1.0 + 4.0 * aperture_k * aperture_k)) / (2.0 * aperture_k);
  }
  return 0.0;
}

double ConeParams::domain_max() const {
  return geometry == Geometry::hyperbolic_cone ? 1.0 : max_norm;
}

double dot(ConstVec a, ConstVec b) { return std::inner_product(a.begin(), a.end(), b.begin(), 0.0); }
double squared_norm(ConstVec a) { return dot(a, a); }
double norm(ConstVec a) { return std::sqrt(squared_norm(a)); }

double oe_energy(ConstVec x, ConstVec y, bool squared) {
  check_same_dim(x, y);
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double m = std::max(0.0, x[i] - y[i]);
    sum += m * m;
  }
  return squared ? sum : std::sqrt(sum);
}

double euclid_xi(ConstVec x, ConstVec y) {
  check_same_dim(x, y);
  const auto t = euclid_terms(x, y);
  if (!t) throw SingularityError("euclidean cone angle undefined (apex at origin or y == x)");
  return std::acos(clamp_unit(t->c));
}

double euclid_aperture(ConstVec x, double k) {
  ConeParams p{k, Geometry::euclidean_cone};
  const double r = norm(x);
  check_aperture_domain(r, p);
  return std::asin(clamp_unit(k / r));
}

double hyper_xi(ConstVec x, ConstVec y) {
  check_same_dim(x, y);
  check_in_ball(x);
  check_in_ball(y);
  const auto t = hyper_terms(x, y);
  if (!t) throw SingularityError("hyperbolic cone angle undefined (apex at origin or y == x)");
  return std::acos(clamp_unit(t->c));
}

double hyper_aperture(ConstVec x, double k) {
  check_in_ball(x);
  ConeParams p{k, Geometry::hyperbolic_cone};
  const double r = norm(x);
  check_aperture_domain(r, p);
  return std::asin(clamp_unit(hyper_aperture_arg(r, k)));
}

double cone_energy(ConstVec x, ConstVec y, const ConeParams& p) {
  switch (p.geometry) {
    case Geometry::euclidean_cone: return std::max(0.0, euclid_xi(x, y) - euclid_aperture(x, p.aperture_k));
    case Geometry::hyperbolic_cone: return std::max(0.0, hyper_xi(x, y) - hyper_aperture(x, p.aperture_k));
    case Geometry::order: break;
  }
  throw std::invalid_argument("cone_energy requires a cone geometry");
}

double energy(ConstVec x, ConstVec y, const ConeParams& p) {
  if (p.geometry == Geometry::order) return oe_energy(x, y, p.squared_order);
  return cone_energy(x, y, p);
}

double poincare_distance(ConstVec x, ConstVec y) {
  check_same_dim(x, y);
  check_in_ball(x);
  check_in_ball(y);
  double dd = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dd += (x[i] - y[i]) * (x[i] - y[i]);
  const double arg = 1.0 + 2.0 * dd / ((1.0 - squared_norm(x)) * (1.0 - squared_norm(y)));
  return std::acosh(std::max(arg, 1.0));
}

Vec exp_map(ConstVec x, ConstVec v) {
  check_same_dim(x, v);
  check_in_ball(x);
  const double nv = norm(v);
  if (nv == 0.0) return Vec(x.begin(), x.end());

  // Closed form divided through by cosh(λ‖v‖) so large steps saturate instead of overflowing.
  const double lambda = 2.0 / (1.0 - squared_norm(x));
  const double t = std::tanh(lambda * nv);
  const double sech = 1.0 / std::cosh(lambda * nv);
  const double xv = dot(x, v) / nv;
  const double q = sech + (lambda - 1.0) + lambda * t * xv;
  const double coef_x = lambda * (1.0 + t * xv) / q;
  const double coef_v = t / (q * nv);

  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = coef_x * x[i] + coef_v * v[i];
  const double n = norm(out);
  if (n >= 1.0 - 1e-15) {
    for (auto& c : out) c *= (1.0 - 1e-15) / n;
  }
  return out;
}

Vec exp_map_origin(ConstVec v) {
  const double nv = norm(v);
  Vec out(v.begin(), v.end());
  if (nv == 0.0) return out;
  double scale = std::tanh(nv) / nv;
  if (scale * nv >= 1.0 - 1e-15) scale = (1.0 - 1e-15) / nv;
  for (auto& c : out) c *= scale;
  return out;
}

double riemannian_scale(ConstVec u) {
  check_in_ball(u);
  const double h = (1.0 - squared_norm(u)) / 2.0;
  return h * h;
}

Vec riemannian_rescale(ConstVec u, ConstVec euclidean_grad) {
  check_same_dim(u, euclidean_grad);
  const double f = riemannian_scale(u);
  Vec out(euclidean_grad.begin(), euclidean_grad.end());
  for (auto& g : out) g *= f;
  return out;
}

void project_to_domain(std::span<double> x, const ConeParams& p, std::mt19937_64& rng) {
  if (p.geometry == Geometry::order) return;
  const double lo = p.epsilon() + kDomainMargin;
  const double hi = p.domain_max() - kDomainMargin;
  const double r = norm(x);
  if (r < kDenominatorFloor) {
    std::normal_distribution<double> gauss;
    for (auto& c : x) c = gauss(rng);
    const double rn = norm(x);
    for (auto& c : x) c *= lo / rn;
    return;
  }
  const double target = std::clamp(r, lo, hi);
  if (target != r) {
    for (auto& c : x) c *= target / r;
  }
}

std::optional<EnergyGradient> try_energy_gradients(ConstVec x, ConstVec y, const ConeParams& p) {
  check_same_dim(x, y);
  const std::size_t n = x.size();
  EnergyGradient out{0.0, Vec(n, 0.0), Vec(n, 0.0)};

  if (p.geometry == Geometry::order) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double m = std::max(0.0, x[i] - y[i]);
      sum += m * m;
    }
    if (sum == 0.0) return out;
    const double e = std::sqrt(sum);
    out.energy = p.squared_order ? sum : e;
    for (std::size_t i = 0; i < n; ++i) {
      const double m = std::max(0.0, x[i] - y[i]);
      const double g = p.squared_order ? 2.0 * m : m / e;
      out.d_x[i] = g;
      out.d_y[i] = -g;
    }
    return out;
  }

  const double r = norm(x);
  if (r < kDenominatorFloor) return std::nullopt;
  check_aperture_domain(r, p);

  if (p.geometry == Geometry::euclidean_cone) {
    const auto t = euclid_terms(x, y);
    if (!t) return std::nullopt;
    const double xi = std::acos(clamp_unit(t->c));
    const double s = p.aperture_k / r;
    const double psi = std::asin(clamp_unit(s));
    out.energy = std::max(0.0, xi - psi);
    if (out.energy == 0.0) return out;

    const double dxi = d_arccos(t->c);
    // ∂c/∂d and ∂c/∂x with d held fixed.
    Vec dc_dd(n), dc_dx(n);
    for (std::size_t i = 0; i < n; ++i) {
      dc_dd[i] = x[i] / (t->nx * t->nd) - t->c * t->d[i] / (t->nd * t->nd);
      dc_dx[i] = t->d[i] / (t->nx * t->nd) - t->c * x[i] / (t->nx * t->nx);
    }
    // dψ/dx = asin'(K/r) · (-K / r²) · x̂
    const double dpsi = d_arcsin(s) * (-p.aperture_k / (r * r)) / r;
    for (std::size_t i = 0; i < n; ++i) {
      out.d_y[i] = dxi * dc_dd[i];
      out.d_x[i] = dxi * (dc_dx[i] - dc_dd[i]) - dpsi * x[i];
    }
    return out;
  }

  // Hyperbolic cones.
  check_in_ball(x);
  check_in_ball(y);
  const auto t = hyper_terms(x, y);
  if (!t) return std::nullopt;
  const double xi = std::acos(clamp_unit(t->c));
  const double g = hyper_aperture_arg(r, p.aperture_k);
  const double psi = std::asin(clamp_unit(g));
  out.energy = std::max(0.0, xi - psi);
  if (out.energy == 0.0) return out;

  const double dxi = d_arccos(t->c);
  const double nd2 = t->nd * t->nd;
  // c = num / den, so ∂c = ∂num / den - c ∂(ln den).
  for (std::size_t i = 0; i < n; ++i) {
    const double dnum_dx = y[i] * (1.0 + t->p) + 2.0 * t->a * x[i] - 2.0 * x[i] * (1.0 + t->q);
    const double dnum_dy = x[i] * (1.0 + t->p) - 2.0 * t->p * y[i];
    const double dlnden_dx = x[i] / t->p + (x[i] - y[i]) / nd2 + (t->q * x[i] - y[i]) / t->s;
    const double dlnden_dy = -(x[i] - y[i]) / nd2 + (t->p * y[i] - x[i]) / t->s;
    out.d_x[i] = dxi * (dnum_dx / t->den - t->c * dlnden_dx);
    out.d_y[i] = dxi * (dnum_dy / t->den - t->c * dlnden_dy);
  }
  // dψ/dx = asin'(g) · g'(r) · x̂ with g'(r) = -K (1/r² + 1)
  const double dpsi = d_arcsin(g) * (-p.aperture_k * (1.0 / (r * r) + 1.0)) / r;
  axpy(-dpsi, x, out.d_x);
  return out;
}

EnergyGradient energy_gradients(ConstVec x, ConstVec y, const ConeParams& p) {
  auto g = try_energy_gradients(x, y, p);
  if (!g) throw SingularityError("energy gradient undefined (apex at origin or y == x)");
  return *std::move(g);
}

}  // namespace hierembed

#ifndef HIEREMBED_GEOMETRY_HPP
#define HIEREMBED_GEOMETRY_HPP

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace hierembed {

using Vec = std::vector<double>;
using ConstVec = std::span<const double>;

/// Embedding family. Order embeddings and Euclidean cones live in R^N, hyperbolic
/// cones in the open unit (Poincare) ball.
enum class Geometry : std::uint8_t { order = 0, euclidean_cone = 1, hyperbolic_cone = 2 };

[[nodiscard]] std::string_view to_string(Geometry g);
[[nodiscard]] Geometry parse_geometry(std::string_view s);  // "oe" | "ec" | "hc"

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Cone axis or angle undefined (apex at the origin, or y == x).
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kDomainMargin = 1e-5;    // δ kept between points and domain edges
inline constexpr double kDenominatorFloor = 1e-15;
inline constexpr double kGradientClamp = 1.0 - 1e-12;

struct ConeParams {
  double aperture_k = 0.1;
  Geometry geometry = Geometry::euclidean_cone;
  double max_norm = 1.0;       // outer edge of the Euclidean-cone domain
  bool squared_order = false;  // order embeddings: ‖max(0, x-y)‖² instead of the plain norm

  /// Smallest norm where the aperture is defined: K for Euclidean cones, the
  /// positive root of K(1-r²)/r = 1 for hyperbolic cones, 0 for order embeddings.
  [[nodiscard]] double epsilon() const;
  /// Supremum of admissible norms (1 for the ball, max_norm for Euclidean cones).
  [[nodiscard]] double domain_max() const;
};

[[nodiscard]] double dot(ConstVec a, ConstVec b);
[[nodiscard]] double squared_norm(ConstVec a);
[[nodiscard]] double norm(ConstVec a);

/// ‖max(0, x - y)‖, zero iff y dominates x coordinate-wise.
[[nodiscard]] double oe_energy(ConstVec x, ConstVec y, bool squared = false);

/// Angle between the cone axis x̂ and y - x.
[[nodiscard]] double euclid_xi(ConstVec x, ConstVec y);
/// arcsin(K / ‖x‖).
[[nodiscard]] double euclid_aperture(ConstVec x, double k);

/// Angle at x between the geodesic continuation of 0→x and the geodesic x→y.
[[nodiscard]] double hyper_xi(ConstVec x, ConstVec y);
/// arcsin(K (1 - ‖x‖²) / ‖x‖).
[[nodiscard]] double hyper_aperture(ConstVec x, double k);

/// max(0, Ξ(x, y) - ψ(x)) for the cone geometries.
[[nodiscard]] double cone_energy(ConstVec x, ConstVec y, const ConeParams& p);
/// Order-violation energy for any geometry.
[[nodiscard]] double energy(ConstVec x, ConstVec y, const ConeParams& p);

[[nodiscard]] double poincare_distance(ConstVec x, ConstVec y);

/// Exponential map of the Poincare ball at x applied to tangent vector v.
[[nodiscard]] Vec exp_map(ConstVec x, ConstVec v);
/// exp_0(v) = tanh(‖v‖) v̂.
[[nodiscard]] Vec exp_map_origin(ConstVec v);

/// (1 / λ_u)² with λ_u = 2 / (1 - ‖u‖²).
[[nodiscard]] double riemannian_scale(ConstVec u);
[[nodiscard]] Vec riemannian_rescale(ConstVec u, ConstVec euclidean_grad);

/// Clips the norm into [ε + δ, domain_max - δ] keeping the direction. A zero
/// vector gets a random direction from `rng`. Order embeddings are unconstrained.
void project_to_domain(std::span<double> x, const ConeParams& p, std::mt19937_64& rng);

struct EnergyGradient {
  double energy = 0.0;
  Vec d_x;
  Vec d_y;
};

/// Energy with analytic gradients; nullopt at points where Ξ is undefined.
/// The hinge subgradient is 0, so pairs with E = 0 get zero gradients.
[[nodiscard]] std::optional<EnergyGradient> try_energy_gradients(ConstVec x, ConstVec y, const ConeParams& p);
/// Throwing variant of try_energy_gradients.
[[nodiscard]] EnergyGradient energy_gradients(ConstVec x, ConstVec y, const ConeParams& p);

}  // namespace hierembed

#endif  // HIEREMBED_GEOMETRY_HPP

#ifndef HIEREMBED_OPTIM_HPP
#define HIEREMBED_OPTIM_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hierembed {

/// Non-finite loss or gradient during training.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OptimizerKind { adam, rsgd };

[[nodiscard]] std::string_view to_string(OptimizerKind k);
[[nodiscard]] OptimizerKind parse_optimizer(std::string_view s);

/// Throws NumericalError naming `what` and the first offending index.
void require_finite(std::span<const double> values, std::string_view what);

/// Dense Adam over a flat parameter buffer.
class Adam {
 public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  Adam() = default;
  Adam(std::size_t size, double lr) : lr_(lr), m_(size, 0.0), v_(size, 0.0) {}

  void step(std::span<double> params, std::span<const double> grads);

  [[nodiscard]] double learning_rate() const { return lr_; }
  [[nodiscard]] std::int64_t steps() const { return t_; }
  [[nodiscard]] std::span<const double> first_moment() const { return m_; }
  [[nodiscard]] std::span<const double> second_moment() const { return v_; }

 private:
  double lr_ = 1e-3;
  std::int64_t t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

}  // namespace hierembed

#endif  // HIEREMBED_OPTIM_HPP

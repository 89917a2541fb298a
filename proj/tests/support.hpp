#ifndef HIEREMBED_TESTS_SUPPORT_HPP
#define HIEREMBED_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "hierembed/geometry.hpp"
#include "hierembed/hierarchy.hpp"

namespace testing {

using hierembed::Rng;
using hierembed::Vec;

/// Central differences of a scalar function, one coordinate at a time.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, Vec x, double h = 1e-5) {
  Vec g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// ‖a - b‖ / max(‖a‖, ‖b‖), with an absolute floor so two near-zero vectors agree.
inline double rel_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-8});
}

inline Vec gaussian_vec(Rng& rng, std::size_t dim, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Vec v(dim);
  for (auto& c : v) c = n(rng);
  return v;
}

/// Uniform direction with norm uniform in [lo, hi].
inline Vec point_with_norm_in(Rng& rng, std::size_t dim, double lo, double hi) {
  Vec v = gaussian_vec(rng, dim);
  const double r = std::uniform_real_distribution<double>(lo, hi)(rng);
  const double n = hierembed::norm(v);
  for (auto& c : v) c *= r / n;
  return v;
}

/// Random orthogonal matrix (rows) by Gram-Schmidt on Gaussian vectors.
inline std::vector<Vec> random_rotation(Rng& rng, std::size_t dim) {
  std::vector<Vec> q;
  while (q.size() < dim) {
    Vec v = gaussian_vec(rng, dim);
    for (const auto& b : q) {
      const double d = hierembed::dot(v, b);
      for (std::size_t i = 0; i < dim; ++i) v[i] -= d * b[i];
    }
    const double n = hierembed::norm(v);
    if (n < 1e-8) continue;
    for (auto& c : v) c /= n;
    q.push_back(std::move(v));
  }
  return q;
}

inline Vec apply(const std::vector<Vec>& rot, std::span<const double> x) {
  Vec out(rot.size(), 0.0);
  for (std::size_t i = 0; i < rot.size(); ++i) out[i] = hierembed::dot(rot[i], x);
  return out;
}

/// Small uniform-depth forest used across suites: two roots with 2 and 1 children,
/// and leaves below them.
///
///   0 ─ 2 ─ 5, 6
///     └ 3 ─ 7
///   1 ─ 4 ─ 8, 9, 10
inline hierembed::Hierarchy small_forest() {
  std::vector<hierembed::Node> nodes;
  const int level[] = {1, 1, 2, 2, 2, 3, 3, 3, 3, 3, 3};
  for (int i = 0; i < 11; ++i) nodes.push_back({"n" + std::to_string(i), "n" + std::to_string(i), level[i]});
  std::vector<hierembed::Edge> edges = {{0, 2}, {0, 3}, {1, 4}, {2, 5}, {2, 6}, {3, 7}, {4, 8}, {4, 9}, {4, 10}};
  return {std::move(nodes), std::move(edges)};
}

/// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("hierembed-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  [[nodiscard]] const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace testing

#endif  // HIEREMBED_TESTS_SUPPORT_HPP

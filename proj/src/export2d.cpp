#include "hierembed/export2d.hpp"

#include <stdexcept>

#include <fmt/format.h>

#include "tsv.hpp"

namespace hierembed {

ProjectionMethod parse_projection(std::string_view s) {
  if (s == "raw2d") return ProjectionMethod::raw2d;
  if (s == "pca") return ProjectionMethod::pca;
  throw std::invalid_argument(fmt::format("unknown projection '{}'", s));
}

RowMatrix project_2d(const EmbeddingTable& table, ProjectionMethod method) {
  if (table.size() == 0) throw std::invalid_argument("cannot export an empty model");
  const auto n = static_cast<Eigen::Index>(table.size());
  const auto d = static_cast<Eigen::Index>(table.dim);
  const Eigen::Map<const RowMatrix> points(table.coords.data(), n, d);
  if (method == ProjectionMethod::raw2d) {
    if (d != 2) throw DimensionError(fmt::format("raw2d export needs 2-D points, model has {}", d));
    return points;
  }
  if (d < 2) throw DimensionError("pca export needs at least 2 dimensions");
  const RowMatrix centred = points.rowwise() - points.colwise().mean();
  const Eigen::MatrixXd cov = centred.transpose() * centred;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  // Eigenvalues ascend; take the last two columns.
  Eigen::MatrixXd axes(d, 2);
  for (int k = 0; k < 2; ++k) {
    Eigen::VectorXd v = eig.eigenvectors().col(d - 1 - k);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    axes.col(k) = v;
  }
  return centred * axes;
}

void write_2d(const RowMatrix& xy, const Hierarchy& h, const std::filesystem::path& path) {
  if (static_cast<std::size_t>(xy.rows()) != h.size()) throw std::invalid_argument("coordinates do not match the hierarchy");
  auto out = tsv::open_out(path);
  for (NodeId i = 0; i < h.size(); ++i) {
    out << fmt::format("{}\t{:.17g}\t{:.17g}\t{}\n", h.node(i).key, xy(i, 0), xy(i, 1), h.node(i).level);
  }
}

}  // namespace hierembed

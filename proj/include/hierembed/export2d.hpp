#ifndef HIEREMBED_EXPORT2D_HPP
#define HIEREMBED_EXPORT2D_HPP

#include <filesystem>
#include <string_view>

#include "hierembed/embed_train.hpp"
#include "hierembed/joint_embed.hpp"

namespace hierembed {

enum class ProjectionMethod { raw2d, pca };
[[nodiscard]] ProjectionMethod parse_projection(std::string_view s);

/// n × 2 coordinates. raw2d needs a 2-D table and copies it; pca projects the
/// centred points onto the two leading principal axes, each axis signed so its
/// largest-magnitude loading is positive.
[[nodiscard]] RowMatrix project_2d(const EmbeddingTable& table, ProjectionMethod method);

/// TSV `node_id<TAB>x<TAB>y<TAB>level`, one row per label.
void write_2d(const RowMatrix& xy, const Hierarchy& h, const std::filesystem::path& path);

}  // namespace hierembed

#endif  // HIEREMBED_EXPORT2D_HPP

#ifndef HIEREMBED_ETHEC_HPP
#define HIEREMBED_ETHEC_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "hierembed/hierarchy.hpp"

namespace hierembed {

/// Taxonomy and per-image leaf labels read from ETHEC metadata.
struct EthecData {
  Hierarchy hierarchy;
  std::vector<std::string> instance_ids;
  std::vector<NodeId> leaf_labels;
};

/// Accepts either an object keyed by image id or an array of records. Each record
/// needs `family`, `subfamily`, `genus` and `specific_epithet`; an array record
/// may carry `id` or `token`, otherwise its position is the id. Node keys are
/// full paths (`family/subfamily/genus/genus_epithet`) so repeated names stay distinct.
[[nodiscard]] EthecData parse_ethec(const std::string& json_text);
[[nodiscard]] EthecData load_ethec(const std::filesystem::path& path);

/// Writes nodes.tsv, edges.tsv, instances.tsv (`id<TAB>row<TAB>leaf`) and
/// instances-levels.tsv into `dir`.
void save_ethec(const EthecData& data, const std::filesystem::path& dir);

}  // namespace hierembed

#endif  // HIEREMBED_ETHEC_HPP

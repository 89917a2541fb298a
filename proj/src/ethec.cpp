#include "hierembed/ethec.hpp"

#include <array>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "hierembed/binary_io.hpp"
#include "tsv.hpp"

namespace hierembed {

namespace {

struct Record {
  std::string id;
  std::string family;
  std::string subfamily;
  std::string genus;
  std::string epithet;
};

std::string field(const nlohmann::json& rec, const char* name, const std::string& id) {
  const auto it = rec.find(name);
  if (it == rec.end() || !it->is_string() || it->get<std::string>().empty()) {
    throw FormatError("ETHEC record '" + id + "' lacks a string field '" + name + "'");
  }
  return it->get<std::string>();
}

Record read_record(const nlohmann::json& rec, std::string id) {
  if (!rec.is_object()) throw FormatError("ETHEC record '" + id + "' is not an object");
  return {id, field(rec, "family", id), field(rec, "subfamily", id), field(rec, "genus", id),
          field(rec, "specific_epithet", id)};
}

}  // namespace

EthecData parse_ethec(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("ETHEC metadata is not valid JSON: ") + e.what());
  }
  std::vector<Record> records;
  if (doc.is_object()) {
    for (const auto& [key, rec] : doc.items()) records.push_back(read_record(rec, key));
  } else if (doc.is_array()) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      std::string id = std::to_string(i);
      for (const char* k : {"id", "token"}) {
        if (doc[i].contains(k) && doc[i][k].is_string()) id = doc[i][k].get<std::string>();
      }
      records.push_back(read_record(doc[i], std::move(id)));
    }
  } else {
    throw FormatError("ETHEC metadata must be a JSON object or array");
  }
  if (records.empty()) throw FormatError("ETHEC metadata has no records");

  // key -> (display name, parent key), per level; std::map keeps key order.
  std::array<std::map<std::string, std::pair<std::string, std::string>>, 4> levels;
  std::vector<std::string> leaf_keys;
  for (const auto& r : records) {
    const std::string k1 = r.family;
    const std::string k2 = k1 + "/" + r.subfamily;
    const std::string k3 = k2 + "/" + r.genus;
    const std::string species = r.genus + "_" + r.epithet;
    const std::string k4 = k3 + "/" + species;
    levels[0].try_emplace(k1, r.family, "");
    levels[1].try_emplace(k2, r.subfamily, k1);
    levels[2].try_emplace(k3, r.genus, k2);
    levels[3].try_emplace(k4, species, k3);
    leaf_keys.push_back(k4);
  }

  std::vector<Node> nodes;
  std::map<std::string, NodeId> ids;
  for (int l = 0; l < 4; ++l) {
    for (const auto& [key, info] : levels[l]) {
      ids[key] = static_cast<NodeId>(nodes.size());
      nodes.push_back({key, info.first, l + 1});
    }
  }
  std::vector<Edge> edges;
  for (int l = 1; l < 4; ++l) {
    for (const auto& [key, info] : levels[l]) edges.push_back({ids.at(info.second), ids.at(key)});
  }

  EthecData out;
  out.hierarchy = Hierarchy(std::move(nodes), std::move(edges));
  for (std::size_t i = 0; i < records.size(); ++i) {
    out.instance_ids.push_back(records[i].id);
    out.leaf_labels.push_back(ids.at(leaf_keys[i]));
  }
  return out;
}

EthecData load_ethec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_ethec(text.str());
}

void save_ethec(const EthecData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const Hierarchy& h = data.hierarchy;
  save_hierarchy(h, dir / "nodes.tsv", dir / "edges.tsv");
  auto inst = tsv::open_out(dir / "instances.tsv");
  auto lev = tsv::open_out(dir / "instances-levels.tsv");
  for (std::size_t i = 0; i < data.instance_ids.size(); ++i) {
    inst << data.instance_ids[i] << '\t' << i << '\t' << h.node(data.leaf_labels[i]).key << '\n';
    lev << data.instance_ids[i];
    for (const NodeId n : h.path(data.leaf_labels[i])) lev << '\t' << h.node(n).key;
    lev << '\n';
  }
}

}  // namespace hierembed

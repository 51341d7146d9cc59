#include "data/jsonl.hpp"

#include <json.hpp>

#include <fstream>
#include <optional>
#include <set>
#include <unordered_map>

#include "common/error.hpp"

namespace vfn::data {

namespace {

using nlohmann::json;

std::optional<geom::Point3> point_from(const json& entry, std::int64_t line_no) {
  if (entry.is_null()) return std::nullopt;
  if (!entry.is_array() || entry.size() != 3 || !entry[0].is_number()) {
    raise(ErrorCode::parse_error,
          "line " + std::to_string(line_no) + ": coordinate entry must be null or [x,y,z]");
  }
  geom::Point3 p{entry[0].get<double>(), entry[1].get<double>(), entry[2].get<double>()};
  if (!geom::finite(p)) {
    raise(ErrorCode::parse_error, "line " + std::to_string(line_no) + ": non-finite coordinate");
  }
  return p;
}

}  // namespace

BackboneStructure structure_from_json_line(const std::string& line, std::int64_t line_no) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::exception& e) {
    raise(ErrorCode::parse_error, "line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!obj.is_object() || !obj.contains("name") || !obj.contains("seq") || !obj.contains("coords")) {
    raise(ErrorCode::parse_error,
          "line " + std::to_string(line_no) + ": record needs name, seq and coords");
  }
  const std::string seq = obj["seq"].get<std::string>();
  const json& coords = obj["coords"];
  for (const char* key : {"N", "CA", "C", "O"}) {
    if (!coords.contains(key) || !coords[key].is_array() || coords[key].size() != seq.size()) {
      raise(ErrorCode::parse_error, "line " + std::to_string(line_no) + ": coords." + key +
                                        " must list one entry per residue");
    }
  }

  BackboneStructure out;
  out.name = obj["name"].get<std::string>();
  if (obj.contains("chain")) out.chain = obj["chain"].get<std::string>();
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const auto n = point_from(coords["N"][i], line_no);
    const auto ca = point_from(coords["CA"][i], line_no);
    const auto c = point_from(coords["C"][i], line_no);
    const auto o = point_from(coords["O"][i], line_no);
    if (!n || !ca || !c) {
      std::string missing;
      if (!n) missing += " N";
      if (!ca) missing += " CA";
      if (!c) missing += " C";
      out.dropped.push_back("residue " + std::to_string(i + 1) + " (" + seq[i] + std::string(")") +
                            ": missing" + missing);
      continue;
    }
    ResidueFlags flags;
    std::array<geom::Point3, 4> atoms{};
    atoms[kN] = *n;
    atoms[kCA] = *ca;
    atoms[kC] = *c;
    if (o) {
      atoms[kO] = *o;
    } else {
      atoms[kO] = idealized_o(*n, *ca, *c);
      flags.imputed_o = true;
    }
    out.sequence.push_back(aa_from_letter(seq[i]));
    out.coords.push_back(atoms);
    out.flags.push_back(flags);
  }
  if (out.sequence.empty()) {
    raise(ErrorCode::parse_error, "line " + std::to_string(line_no) + ": no complete residues");
  }
  mark_chain_breaks(out);
  return out;
}

std::string structure_to_json_line(const BackboneStructure& s) {
  json coords;
  for (const char* key : {"N", "CA", "C", "O"}) coords[key] = json::array();
  std::string seq;
  for (std::int64_t i = 0; i < s.size(); ++i) {
    seq += letter_from_aa(s.sequence[static_cast<std::size_t>(i)]);
    const auto& atoms = s.coords[static_cast<std::size_t>(i)];
    coords["N"].push_back({atoms[kN].x, atoms[kN].y, atoms[kN].z});
    coords["CA"].push_back({atoms[kCA].x, atoms[kCA].y, atoms[kCA].z});
    coords["C"].push_back({atoms[kC].x, atoms[kC].y, atoms[kC].z});
    coords["O"].push_back({atoms[kO].x, atoms[kO].y, atoms[kO].z});
  }
  json obj;
  obj["name"] = s.name;
  if (!s.chain.empty()) obj["chain"] = s.chain;
  obj["seq"] = seq;
  obj["coords"] = std::move(coords);
  return obj.dump();
}

std::vector<BackboneStructure> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::io_error, "cannot open dataset file: " + path);
  std::vector<BackboneStructure> out;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(structure_from_json_line(line, line_no));
  }
  return out;
}

void write_jsonl(const std::string& path, const std::vector<BackboneStructure>& structures) {
  std::ofstream out(path);
  if (!out) raise(ErrorCode::io_error, "cannot write dataset file: " + path);
  for (const auto& s : structures) out << structure_to_json_line(s) << '\n';
}

DatasetSplit split_dataset(std::vector<BackboneStructure> records, const std::string& manifest_path) {
  DatasetSplit out;
  if (manifest_path.empty()) {
    out.train = std::move(records);
    return out;
  }
  std::ifstream in(manifest_path);
  if (!in) raise(ErrorCode::io_error, "cannot open split manifest: " + manifest_path);
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    raise(ErrorCode::parse_error, std::string("split manifest: ") + e.what());
  }
  std::unordered_map<std::string, std::string> assignment;
  for (const char* split : {"train", "validation", "test"}) {
    if (!manifest.contains(split)) continue;
    for (const auto& name : manifest[split]) {
      const std::string key = name.get<std::string>();
      auto [it, inserted] = assignment.emplace(key, split);
      if (!inserted && it->second != split) {
        raise(ErrorCode::parse_error, "split manifest lists '" + key + "' in both " + it->second +
                                          " and " + split);
      }
    }
  }
  for (auto& rec : records) {
    auto it = assignment.find(rec.name);
    if (it == assignment.end()) continue;
    if (it->second == "train") {
      out.train.push_back(std::move(rec));
    } else if (it->second == "validation") {
      out.validation.push_back(std::move(rec));
    } else {
      out.test.push_back(std::move(rec));
    }
  }
  return out;
}

}  // namespace vfn::data

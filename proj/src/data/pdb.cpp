#include "data/pdb.hpp"

#include <array>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "common/error.hpp"

namespace vfn::data {

namespace {

std::string trim(const std::string& s) {
  const std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string field(const std::string& line, std::size_t start0, std::size_t len) {
  if (line.size() <= start0) return "";
  return trim(line.substr(start0, len));
}

double parse_coord(const std::string& line, std::size_t start0, std::int64_t line_no) {
  const std::string raw = field(line, start0, 8);
  if (!raw.empty()) {
    char* end = nullptr;
    const double v = std::strtod(raw.c_str(), &end);
    if (end == raw.c_str() + raw.size()) return v;
  }
  raise(ErrorCode::parse_error,
        "line " + std::to_string(line_no) + ": unparseable coordinate field '" + raw + "'");
}

struct PendingResidue {
  std::string key;       // resSeq + insertion code
  std::string res_name;
  std::array<std::optional<geom::Point3>, 4> atoms;
};

int backbone_slot(const std::string& atom_name) {
  if (atom_name == "N") return kN;
  if (atom_name == "CA") return kCA;
  if (atom_name == "C") return kC;
  if (atom_name == "O") return kO;
  return -1;
}

void finish_residue(BackboneStructure& out, const PendingResidue& res) {
  const bool has_n = res.atoms[kN].has_value();
  const bool has_ca = res.atoms[kCA].has_value();
  const bool has_c = res.atoms[kC].has_value();
  if (!has_n || !has_ca || !has_c) {
    std::string missing;
    if (!has_n) missing += " N";
    if (!has_ca) missing += " CA";
    if (!has_c) missing += " C";
    out.dropped.push_back("residue " + res.key + " (" + res.res_name + "): missing" + missing);
    return;
  }
  ResidueFlags flags;
  std::array<geom::Point3, 4> coords{};
  coords[kN] = *res.atoms[kN];
  coords[kCA] = *res.atoms[kCA];
  coords[kC] = *res.atoms[kC];
  if (res.atoms[kO]) {
    coords[kO] = *res.atoms[kO];
  } else {
    coords[kO] = idealized_o(coords[kN], coords[kCA], coords[kC]);
    flags.imputed_o = true;
  }
  out.sequence.push_back(aa_from_three(res.res_name));
  out.coords.push_back(coords);
  out.flags.push_back(flags);
}

}  // namespace

BackboneStructure parse_pdb(const std::string& text, const std::string& chain, const std::string& name) {
  BackboneStructure out;
  out.name = name;
  std::istringstream stream(text);
  std::string line;
  std::int64_t line_no = 0;
  std::string locked_chain = chain;
  std::optional<PendingResidue> current;

  while (std::getline(stream, line)) {
    ++line_no;
    const std::string record = field(line, 0, 6);
    if (record == "ENDMDL") break;  // first model only
    if (record != "ATOM") continue;
    const std::string chain_id = field(line, 21, 1);
    if (locked_chain.empty()) locked_chain = chain_id;
    if (chain_id != locked_chain) continue;

    const std::string atom_name = field(line, 12, 4);
    const int slot = backbone_slot(atom_name);
    if (slot < 0) continue;

    const std::string res_key = field(line, 22, 4) + (line.size() > 26 && line[26] != ' ' ? std::string(1, line[26]) : "");
    if (!current || current->key != res_key) {
      if (current) finish_residue(out, *current);
      current.emplace();
      current->key = res_key;
      current->res_name = field(line, 17, 3);
    }
    if (current->atoms[static_cast<std::size_t>(slot)]) continue;  // first altLoc wins
    current->atoms[static_cast<std::size_t>(slot)] = geom::Point3{
        parse_coord(line, 30, line_no), parse_coord(line, 38, line_no), parse_coord(line, 46, line_no)};
  }
  if (current) finish_residue(out, *current);

  out.chain = locked_chain;
  if (out.sequence.empty()) {
    raise(ErrorCode::parse_error, "no complete residues found" +
                                      (chain.empty() ? std::string() : " in chain " + chain));
  }
  mark_chain_breaks(out);
  return out;
}

BackboneStructure parse_pdb_file(const std::string& path, const std::string& chain) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::io_error, "cannot open PDB file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_pdb(buf.str(), chain, std::filesystem::path(path).stem().string());
}

}  // namespace vfn::data

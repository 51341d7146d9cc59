#include "data/structure.hpp"

#include <unordered_map>

#include "common/error.hpp"

namespace vfn::data {

namespace {

constexpr const char* kAlphabet = "ACDEFGHIKLMNPQRSTVWY";

const std::unordered_map<std::string, int>& three_letter_map() {
  static const std::unordered_map<std::string, int> map = {
      {"ALA", 0},  {"CYS", 1},  {"ASP", 2},  {"GLU", 3},  {"PHE", 4},
      {"GLY", 5},  {"HIS", 6},  {"ILE", 7},  {"LYS", 8},  {"LEU", 9},
      {"MET", 10}, {"ASN", 11}, {"PRO", 12}, {"GLN", 13}, {"ARG", 14},
      {"SER", 15}, {"THR", 16}, {"VAL", 17}, {"TRP", 18}, {"TYR", 19},
  };
  return map;
}

}  // namespace

int aa_from_letter(char c) {
  for (int i = 0; i < kNumAminoAcids; ++i) {
    if (kAlphabet[i] == c) return i;
  }
  return kMaskToken;
}

char letter_from_aa(int idx) {
  if (idx >= 0 && idx < kNumAminoAcids) return kAlphabet[idx];
  if (idx == kMaskToken) return 'X';
  raise(ErrorCode::invalid_argument, "amino-acid index out of range: " + std::to_string(idx));
}

int aa_from_three(const std::string& name) {
  auto it = three_letter_map().find(name);
  return it == three_letter_map().end() ? kMaskToken : it->second;
}

geom::Point3 idealized_o(geom::Point3 n, geom::Point3 ca, geom::Point3 c) {
  const geom::Point3 to_n = n - c;
  const geom::Point3 to_ca = ca - c;
  const double ln = geom::norm(to_n);
  const double lca = geom::norm(to_ca);
  if (ln < 1e-9 || lca < 1e-9) raise(ErrorCode::degenerate_frame, "cannot impute O: collapsed backbone");
  geom::Point3 bisector = (1.0 / ln) * to_n + (1.0 / lca) * to_ca;
  const double lb = geom::norm(bisector);
  if (lb < 1e-9) raise(ErrorCode::degenerate_frame, "cannot impute O: straight N-C-CA angle");
  return c - (1.23 / lb) * bisector;
}

void mark_chain_breaks(BackboneStructure& s) {
  for (std::size_t i = 1; i < s.coords.size(); ++i) {
    const double d = geom::norm(s.coords[i][kCA] - s.coords[i - 1][kCA]);
    if (d >= 10.0) s.flags[i].chain_break = true;
  }
}

}  // namespace vfn::data

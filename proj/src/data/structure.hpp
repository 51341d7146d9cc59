#pragma once

#include <array>
#include <string>
#include <vector>

#include "geom/rigid.hpp"

namespace vfn::data {

inline constexpr int kNumAminoAcids = 20;
/// Residues with unknown identity carry this token: they stay in the
/// graph (their geometry is real) but are excluded from the loss.
inline constexpr int kMaskToken = 20;

int aa_from_letter(char c);
char letter_from_aa(int idx);
int aa_from_three(const std::string& name);

/// Backbone atom order used throughout: N, CA, C, O.
enum BackboneAtom { kN = 0, kCA = 1, kC = 2, kO = 3 };

struct ResidueFlags {
  bool imputed_o = false;
  bool chain_break = false;
};

struct BackboneStructure {
  std::string name;
  std::string chain;
  std::vector<int> sequence;  // 0..19, or kMaskToken
  std::vector<std::array<geom::Point3, 4>> coords;
  std::vector<ResidueFlags> flags;
  std::vector<std::string> dropped;  // residues excluded during parsing, human-readable

  std::int64_t size() const { return static_cast<std::int64_t>(sequence.size()); }
};

struct DatasetSplit {
  std::vector<BackboneStructure> train;
  std::vector<BackboneStructure> validation;
  std::vector<BackboneStructure> test;
};

/// Idealized carbonyl position for a residue missing its O: 1.23 Å from
/// C along the external bisector of the N-C-CA angle.
geom::Point3 idealized_o(geom::Point3 n, geom::Point3 ca, geom::Point3 c);

/// Marks chain breaks (consecutive CA-CA distance >= 10 Å) on every
/// residue that follows a gap.
void mark_chain_breaks(BackboneStructure& s);

}  // namespace vfn::data

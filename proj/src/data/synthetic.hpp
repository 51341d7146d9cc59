#pragma once

#include <cstdint>

#include "data/structure.hpp"
#include "num/rng.hpp"

namespace vfn::data {

/// Deterministic random backbone with plausible local geometry: CA
/// atoms on a 3.8 Å self-avoiding walk, N/C/O placed from a random
/// residue orientation with idealized bond lengths. All frames are
/// non-degenerate by construction.
BackboneStructure random_backbone(num::Rng& rng, std::int64_t n_residues,
                                  const std::string& name = "synthetic");

BackboneStructure random_backbone(std::uint64_t seed, std::int64_t n_residues,
                                  const std::string& name = "synthetic");

}  // namespace vfn::data

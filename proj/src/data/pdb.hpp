#pragma once

#include <string>

#include "data/structure.hpp"

namespace vfn::data {

/// Fixed-column PDB backbone reader: ATOM records only, first model
/// only, first-occurring altLoc per atom. `chain` selects a chain id;
/// empty means the first chain encountered. Residues missing N, CA, or
/// C are dropped and recorded; a missing O is imputed and flagged.
BackboneStructure parse_pdb(const std::string& text, const std::string& chain = "",
                            const std::string& name = "pdb");

BackboneStructure parse_pdb_file(const std::string& path, const std::string& chain = "");

}  // namespace vfn::data

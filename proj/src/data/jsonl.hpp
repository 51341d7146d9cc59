#pragma once

#include <string>
#include <vector>

#include "data/structure.hpp"

namespace vfn::data {

/// One structure per line: {"name", "seq", "coords": {"N": [[x,y,z],..],
/// "CA": .., "C": .., "O": ..}}. A null coordinate entry marks a missing
/// atom; residues missing N/CA/C are dropped with a record, missing O is
/// imputed and flagged. Unknown sequence letters map to the mask token.
BackboneStructure structure_from_json_line(const std::string& line, std::int64_t line_no);
std::string structure_to_json_line(const BackboneStructure& s);

std::vector<BackboneStructure> read_jsonl(const std::string& path);
void write_jsonl(const std::string& path, const std::vector<BackboneStructure>& structures);

/// Splits `records` by a manifest JSON {"train": [names], "validation":
/// [names], "test": [names]}. An empty manifest path puts everything in
/// train. A name listed in two splits is an error; unlisted names are
/// skipped.
DatasetSplit split_dataset(std::vector<BackboneStructure> records, const std::string& manifest_path);

}  // namespace vfn::data

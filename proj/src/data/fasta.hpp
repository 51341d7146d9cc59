#pragma once

#include <string>
#include <utility>
#include <vector>

#include "data/structure.hpp"

namespace vfn::data {

using FastaRecord = std::pair<std::string, std::string>;  // name, sequence letters

/// Writes one record per protein, sequence wrapped at 60 columns.
void write_fasta(const std::vector<FastaRecord>& records, const std::string& path);
std::vector<FastaRecord> read_fasta(const std::string& path);

std::string sequence_letters(const std::vector<int>& indices);

}  // namespace vfn::data

#include "data/fasta.hpp"

#include <fstream>

#include "common/error.hpp"

namespace vfn::data {

void write_fasta(const std::vector<FastaRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) raise(ErrorCode::io_error, "cannot write FASTA file: " + path);
  for (const auto& [name, seq] : records) {
    out << '>' << name << '\n';
    for (std::size_t i = 0; i < seq.size(); i += 60) out << seq.substr(i, 60) << '\n';
  }
  if (!out) raise(ErrorCode::io_error, "write failed for FASTA file: " + path);
}

std::vector<FastaRecord> read_fasta(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::io_error, "cannot open FASTA file: " + path);
  std::vector<FastaRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '>') {
      out.emplace_back(line.substr(1), "");
    } else if (!out.empty()) {
      out.back().second += line;
    } else {
      raise(ErrorCode::parse_error, "FASTA sequence before any header in " + path);
    }
  }
  return out;
}

std::string sequence_letters(const std::vector<int>& indices) {
  std::string seq;
  seq.reserve(indices.size());
  for (int idx : indices) seq += letter_from_aa(idx);
  return seq;
}

}  // namespace vfn::data

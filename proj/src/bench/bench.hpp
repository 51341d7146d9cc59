#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "model/config.hpp"

namespace vfn::bench {

struct BenchRow {
  int layers = 0;
  std::int64_t residues = 0;
  double median_ms = 0.0;
  double p95_ms = 0.0;
};

/// Times the forward pass per (layer count, residue count) cell: graph
/// construction happens once outside the timed region, then `reps`
/// timed passes (plus one untimed warm-up). Requires reps >= 20 so the
/// percentiles mean something.
std::vector<BenchRow> run_bench(const std::vector<int>& layer_counts,
                                const std::vector<std::int64_t>& sizes, int reps,
                                std::uint64_t seed, model::ModelConfig base);

/// Header is exactly "layers,residues,median_ms,p95_ms".
void write_csv(std::ostream& out, const std::vector<BenchRow>& rows);

}  // namespace vfn::bench

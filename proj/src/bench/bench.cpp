#include "bench/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>

#include "common/error.hpp"
#include "data/synthetic.hpp"
#include "model/inputs.hpp"
#include "model/network.hpp"

namespace vfn::bench {

namespace {

double percentile(const std::vector<double>& sorted_ms, double q) {
  const auto n = static_cast<std::int64_t>(sorted_ms.size());
  const auto rank = static_cast<std::int64_t>(std::ceil(q * static_cast<double>(n)));
  return sorted_ms[static_cast<std::size_t>(std::clamp<std::int64_t>(rank - 1, 0, n - 1))];
}

}  // namespace

std::vector<BenchRow> run_bench(const std::vector<int>& layer_counts,
                                const std::vector<std::int64_t>& sizes, int reps,
                                std::uint64_t seed, model::ModelConfig base) {
  if (layer_counts.empty() || sizes.empty()) {
    raise(ErrorCode::invalid_argument, "bench needs at least one layer count and one size");
  }
  if (reps < 20) raise(ErrorCode::invalid_argument, "bench needs at least 20 repetitions");

  std::vector<BenchRow> rows;
  for (int layers : layer_counts) {
    for (std::int64_t n : sizes) {
      model::ModelConfig cfg = base;
      cfg.n_layers = layers;
      cfg.validate();
      model::Model m = model::init_model(cfg, seed);
      auto s = data::random_backbone(seed + static_cast<std::uint64_t>(n), n, "bench");
      model::GraphInputs in = model::prepare_inputs(s, cfg);

      (void)model::forward_logits(m, in);
      std::vector<double> ms;
      ms.reserve(static_cast<std::size_t>(reps));
      for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        (void)model::forward_logits(m, in);
        const auto t1 = std::chrono::steady_clock::now();
        ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
      }
      std::sort(ms.begin(), ms.end());
      BenchRow row;
      row.layers = layers;
      row.residues = n;
      row.median_ms = percentile(ms, 0.5);
      row.p95_ms = percentile(ms, 0.95);
      rows.push_back(row);
    }
  }
  return rows;
}

void write_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "layers,residues,median_ms,p95_ms\n";
  for (const auto& r : rows) {
    out << r.layers << "," << r.residues << "," << std::fixed << std::setprecision(3)
        << r.median_ms << "," << r.p95_ms << "\n";
  }
  out.unsetf(std::ios::fixed);
}

}  // namespace vfn::bench

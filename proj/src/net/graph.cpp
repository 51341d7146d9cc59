#include "net/graph.hpp"

#include <algorithm>
#include <utility>

#include "common/error.hpp"

namespace vfn::net {

GraphTopology build_topology(std::vector<geom::RigidTransform> frames, std::vector<geom::Point3> ca,
                             int k) {
  if (frames.size() != ca.size()) {
    raise(ErrorCode::invalid_argument, "build_topology: frame and CA counts differ");
  }
  const auto n = static_cast<std::int64_t>(frames.size());
  if (n < 2) raise(ErrorCode::invalid_argument, "build_topology: need at least 2 residues");
  if (k < 1) raise(ErrorCode::invalid_argument, "build_topology: k must be >= 1");

  GraphTopology topo;
  topo.n = n;
  topo.list_len = std::min<std::int64_t>(k + 1, n);
  topo.frames = std::move(frames);
  topo.ca = std::move(ca);
  topo.neighbors.reserve(static_cast<std::size_t>(n * topo.list_len));

  std::vector<std::pair<double, std::int64_t>> order;
  for (std::int64_t i = 0; i < n; ++i) {
    order.clear();
    for (std::int64_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const geom::Point3 d = topo.ca[static_cast<std::size_t>(j)] - topo.ca[static_cast<std::size_t>(i)];
      order.emplace_back(dot(d, d), j);
    }
    std::sort(order.begin(), order.end());
    topo.neighbors.push_back(i);
    for (std::int64_t m = 0; m < topo.list_len - 1; ++m) {
      topo.neighbors.push_back(order[static_cast<std::size_t>(m)].second);
    }
  }

  topo.rel.reserve(static_cast<std::size_t>(topo.edges()));
  for (std::int64_t e = 0; e < topo.edges(); ++e) {
    const auto& ti = topo.frames[static_cast<std::size_t>(topo.src(e))];
    const auto& tj = topo.frames[static_cast<std::size_t>(topo.dst(e))];
    topo.rel.push_back(geom::relative_transform(ti, tj));
  }
  return topo;
}

}  // namespace vfn::net

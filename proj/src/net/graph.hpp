#pragma once

#include <cstdint>
#include <vector>

#include "geom/rigid.hpp"

namespace vfn::net {

/// Directed residue graph with uniform neighbor lists: every node's
/// list holds itself first, then its min(k, n-1) nearest other nodes
/// by CA distance (squared distances compared exactly, ties broken by
/// lower index). The uniform length L = min(k+1, n) lets per-edge
/// tensors reshape to [n, L, ...].
struct GraphTopology {
  std::int64_t n = 0;
  std::int64_t list_len = 0;
  std::vector<std::int64_t> neighbors;        // [n * list_len]
  std::vector<geom::Point3> ca;               // [n]
  std::vector<geom::RigidTransform> frames;   // [n]
  std::vector<geom::RigidTransform> rel;      // [n * list_len], T_{i<-j} per edge

  std::int64_t edges() const { return n * list_len; }
  std::int64_t src(std::int64_t e) const { return e / list_len; }
  std::int64_t dst(std::int64_t e) const { return neighbors[static_cast<std::size_t>(e)]; }
};

GraphTopology build_topology(std::vector<geom::RigidTransform> frames, std::vector<geom::Point3> ca,
                             int k);

}  // namespace vfn::net

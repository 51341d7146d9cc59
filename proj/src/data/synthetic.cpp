#include "data/synthetic.hpp"

#include <cmath>

#include "common/error.hpp"

namespace vfn::data {

namespace {

geom::Point3 random_unit(num::Rng& rng) {
  for (;;) {
    geom::Point3 p{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const double l = geom::norm(p);
    if (l > 0.1 && l <= 1.0) return (1.0 / l) * p;
  }
}

}  // namespace

BackboneStructure random_backbone(num::Rng& rng, std::int64_t n_residues, const std::string& name) {
  if (n_residues < 2) raise(ErrorCode::invalid_argument, "synthetic backbone needs at least 2 residues");
  BackboneStructure out;
  out.name = name;
  out.chain = "A";

  std::vector<geom::Point3> cas;
  cas.reserve(static_cast<std::size_t>(n_residues));
  geom::Point3 ca{0, 0, 0};
  cas.push_back(ca);
  while (static_cast<std::int64_t>(cas.size()) < n_residues) {
    const geom::Point3 candidate = ca + 3.8 * random_unit(rng);
    bool clash = false;
    for (const geom::Point3& prev : cas) {
      if (geom::norm(candidate - prev) < 3.0) {
        clash = true;
        break;
      }
    }
    if (clash) continue;
    ca = candidate;
    cas.push_back(ca);
  }

  // Idealized internal geometry: CA-C 1.525 Å along local x, CA-N
  // 1.458 Å at a 111 degree N-CA-C angle, orientation random per residue.
  const double angle = 111.0 * M_PI / 180.0;
  const geom::Point3 local_c{1.525, 0.0, 0.0};
  const geom::Point3 local_n{1.458 * std::cos(angle), 1.458 * std::sin(angle), 0.0};
  for (std::int64_t i = 0; i < n_residues; ++i) {
    geom::RigidTransform orient = geom::random_rigid(rng);
    orient.t = cas[static_cast<std::size_t>(i)];
    std::array<geom::Point3, 4> atoms{};
    atoms[kCA] = orient.t;
    atoms[kC] = geom::apply(orient, local_c);
    atoms[kN] = geom::apply(orient, local_n);
    atoms[kO] = idealized_o(atoms[kN], atoms[kCA], atoms[kC]);
    out.coords.push_back(atoms);
    out.sequence.push_back(static_cast<int>(rng.index(kNumAminoAcids)));
    out.flags.push_back({});
  }
  mark_chain_breaks(out);
  return out;
}

BackboneStructure random_backbone(std::uint64_t seed, std::int64_t n_residues, const std::string& name) {
  num::Rng rng(seed);
  return random_backbone(rng, n_residues, name);
}

}  // namespace vfn::data

#include "model/inputs.hpp"

#include <utility>

#include "common/error.hpp"
#include "net/rbf.hpp"

namespace vfn::model {

using num::Tensor;

GraphInputs prepare_inputs(const data::BackboneStructure& s, const ModelConfig& cfg) {
  cfg.validate();
  const std::int64_t n = s.size();
  if (n < 2) {
    raise(ErrorCode::invalid_argument,
          "prepare_inputs: structure '" + s.name + "' needs at least 2 residues, has " +
              std::to_string(n));
  }

  std::vector<geom::RigidTransform> frames;
  std::vector<geom::Point3> ca;
  frames.reserve(static_cast<std::size_t>(n));
  ca.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& atoms = s.coords[static_cast<std::size_t>(i)];
    frames.push_back(geom::frame_from_three_points(atoms[data::kN], atoms[data::kCA],
                                                   atoms[data::kC], i));
    ca.push_back(atoms[data::kCA]);
  }

  GraphInputs in;
  in.name = s.name;
  in.topo = net::build_topology(std::move(frames), std::move(ca), cfg.knn_k);

  in.backbone_local = Tensor::zeros({3 * n, 4});
  for (std::int64_t i = 0; i < n; ++i) {
    const geom::RigidTransform inv = geom::invert(in.topo.frames[static_cast<std::size_t>(i)]);
    for (int a = 0; a < 4; ++a) {
      const geom::Point3 local =
          geom::apply(inv, s.coords[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)]);
      in.backbone_local.at(3 * i + 0, a) = local.x;
      in.backbone_local.at(3 * i + 1, a) = local.y;
      in.backbone_local.at(3 * i + 2, a) = local.z;
    }
  }

  const std::int64_t edges = in.topo.edges();
  in.edge_init = Tensor::zeros({edges, cfg.d_e});
  if (cfg.use_edge_featurizer) {
    const net::RbfBank bank{cfg.n_rbf, 0.0, 50.0};
    for (std::int64_t e = 0; e < edges; ++e) {
      const geom::Point3 d = in.topo.ca[static_cast<std::size_t>(in.topo.dst(e))] -
                             in.topo.ca[static_cast<std::size_t>(in.topo.src(e))];
      const auto r = net::rbf_values(bank, geom::norm(d));
      for (int m = 0; m < cfg.n_rbf; ++m) in.edge_init.at(e, m) = r[static_cast<std::size_t>(m)];
    }
  }

  in.labels.reserve(static_cast<std::size_t>(n));
  for (int aa : s.sequence) in.labels.push_back(aa == data::kMaskToken ? -1 : aa);
  return in;
}

}  // namespace vfn::model

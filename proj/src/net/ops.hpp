#pragma once

#include <vector>

#include "geom/rigid.hpp"
#include "net/rbf.hpp"
#include "num/tape.hpp"

namespace vfn::net {

/// Rearranges elements by an explicit target-to-source index map. The
/// workhorse behind transposes, broadcasts and interleavings: one
/// differentiable gather over the flattened input.
num::Value permute_elements(num::Tape& tape, num::Value x, std::vector<std::int64_t> target_to_source,
                            num::Shape out_shape);

num::Value transpose2d(num::Tape& tape, num::Value x);

/// Square roots with a zero sentinel: entries whose length falls below
/// `min_norm` yield a safe divisor of 1 in `norms`, an exact 0 in
/// `masked_norms`, and a zero gradient through the masked branch.
struct MaskedNorms {
  num::Value norms;         // safe divisor: true norm, or 1 where masked
  num::Value masked_norms;  // true norm, or exactly 0 where masked
  num::Tensor mask;         // the runtime 0/1 mask that was applied
};
MaskedNorms masked_sqrt(num::Tape& tape, num::Value squared, double min_norm);

/// K_j = T_{i<-j} ∘ Q_j: every atom row mapped from j-local to i-local
/// coordinates.
num::Tensor transform_atoms(const num::Tensor& qj, const geom::RigidTransform& ti,
                            const geom::RigidTransform& tj);

/// Row k of the result is sum_l wa[k,l]·qi[l] + sum_l wb[k,l]·kj[l].
num::Value vector_field(num::Tape& tape, num::Value wa, num::Value wb, num::Value qi, num::Value kj);
num::Tensor vector_field(const num::Tensor& wa, const num::Tensor& wb, const num::Tensor& qi,
                         const num::Tensor& kj);

/// Per-edge geometric features: for each atom row of h, the unit
/// direction (zero sentinel below 1e-8) followed by the RBF encoding of
/// its length, concatenated across atoms into one [1, d_q*(3+n)] row.
num::Tensor featurize(const num::Tensor& h, const RbfBank& bank);

/// Vector perceptron over one residue: v = wc·qi + wd·qo, each row
/// gated by the cosine between it and its learnable direction, then
/// mixed by we. Cosines with either factor shorter than 1e-8 are 0.
num::Value v_mlp(num::Tape& tape, num::Value wc, num::Value wd, num::Value we, num::Value gate_dirs,
                 num::Value qi, num::Value qo);
num::Tensor v_mlp(const num::Tensor& wc, const num::Tensor& wd, const num::Tensor& we,
                  const num::Tensor& gate_dirs, const num::Tensor& qi, const num::Tensor& qo);

/// Direct refresh: new coordinates read straight out of a linear map
/// of the node features, row-major [d_q, 3].
num::Tensor update_atoms_linear(const num::Tensor& s_i, const num::Tensor& w, const num::Tensor& b);

}  // namespace vfn::net

#include "net/ops.hpp"

#include <array>
#include <cmath>

#include "common/error.hpp"
#include "num/composites.hpp"

namespace vfn::net {

using num::Shape;
using num::Tape;
using num::Tensor;
using num::Value;

Value permute_elements(Tape& tape, Value x, std::vector<std::int64_t> target_to_source,
                       Shape out_shape) {
  if (num::numel(out_shape) != static_cast<std::int64_t>(target_to_source.size())) {
    raise(ErrorCode::shape_mismatch, "permute_elements: index count does not match output shape");
  }
  const std::int64_t n = tape.value(x).size();
  Value flat = tape.reshape(x, {n, 1});
  Value picked = tape.gather_rows(flat, std::move(target_to_source));
  return tape.reshape(picked, std::move(out_shape));
}

Value transpose2d(Tape& tape, Value x) {
  const Tensor& t = tape.value(x);
  if (t.rank() != 2) raise(ErrorCode::shape_mismatch, "transpose2d: rank-2 input required");
  const std::int64_t rows = t.dim(0), cols = t.dim(1);
  std::vector<std::int64_t> idx(static_cast<std::size_t>(rows * cols));
  for (std::int64_t c = 0; c < cols; ++c) {
    for (std::int64_t r = 0; r < rows; ++r) idx[static_cast<std::size_t>(c * rows + r)] = r * cols + c;
  }
  return permute_elements(tape, x, std::move(idx), {cols, rows});
}

MaskedNorms masked_sqrt(Tape& tape, Value squared, double min_norm) {
  const Tensor& sq = tape.value(squared);
  const double threshold = min_norm * min_norm;
  MaskedNorms out;
  out.mask = Tensor::zeros(sq.shape);
  Tensor filler = Tensor::zeros(sq.shape);  // 1 where masked, keeps sqrt away from 0
  for (std::int64_t i = 0; i < sq.size(); ++i) {
    const bool keep = sq[i] > threshold;
    out.mask[i] = keep ? 1.0 : 0.0;
    filler[i] = keep ? 0.0 : 1.0;
  }
  Value safe = tape.add(squared, tape.constant(filler));
  out.norms = tape.sqrt(safe);
  out.masked_norms = tape.multiply(out.norms, tape.constant(out.mask));
  return out;
}

Tensor transform_atoms(const Tensor& qj, const geom::RigidTransform& ti,
                       const geom::RigidTransform& tj) {
  if (qj.rank() != 2 || qj.dim(1) != 3) {
    raise(ErrorCode::shape_mismatch, "transform_atoms: expected [d_q,3], got " + num::shape_str(qj.shape));
  }
  const geom::RigidTransform rel = geom::relative_transform(ti, tj);
  Tensor out = Tensor::zeros(qj.shape);
  for (std::int64_t k = 0; k < qj.dim(0); ++k) {
    const geom::Point3 p = geom::apply(rel, {qj.at(k, 0), qj.at(k, 1), qj.at(k, 2)});
    out.at(k, 0) = p.x;
    out.at(k, 1) = p.y;
    out.at(k, 2) = p.z;
  }
  return out;
}

Value vector_field(Tape& tape, Value wa, Value wb, Value qi, Value kj) {
  return tape.add(tape.matmul(wa, qi), tape.matmul(wb, kj));
}

Tensor vector_field(const Tensor& wa, const Tensor& wb, const Tensor& qi, const Tensor& kj) {
  Tape scratch;
  return scratch.value(vector_field(scratch, scratch.constant(wa), scratch.constant(wb),
                                    scratch.constant(qi), scratch.constant(kj)));
}

Tensor featurize(const Tensor& h, const RbfBank& bank) {
  if (h.rank() != 2 || h.dim(1) != 3) {
    raise(ErrorCode::shape_mismatch, "featurize: expected [d_q,3], got " + num::shape_str(h.shape));
  }
  const std::int64_t d_q = h.dim(0);
  Tensor g = Tensor::zeros({1, d_q * (3 + bank.n)});
  std::int64_t cursor = 0;
  for (std::int64_t k = 0; k < d_q; ++k) {
    const double x = h.at(k, 0), y = h.at(k, 1), z = h.at(k, 2);
    const double len = std::sqrt(x * x + y * y + z * z);
    if (len > 1e-8) {
      g[cursor++] = x / len;
      g[cursor++] = y / len;
      g[cursor++] = z / len;
    } else {
      cursor += 3;  // zero-vector sentinel
    }
    const std::vector<double> r = rbf_values(bank, len > 1e-8 ? len : 0.0);
    for (double v : r) g[cursor++] = v;
  }
  return g;
}

Value v_mlp(Tape& tape, Value wc, Value wd, Value we, Value gate_dirs, Value qi, Value qo) {
  const std::int64_t d_q = tape.value(qi).dim(0);
  Value v = tape.add(tape.matmul(wc, qi), tape.matmul(wd, qo));
  Value dots = tape.sum_axis(tape.multiply(v, gate_dirs), 1);                  // [d_q]
  MaskedNorms vn = masked_sqrt(tape, tape.sum_axis(tape.multiply(v, v), 1), 1e-8);
  MaskedNorms wn = masked_sqrt(tape, tape.sum_axis(tape.multiply(gate_dirs, gate_dirs), 1), 1e-8);
  Value cos = tape.divide(dots, tape.multiply(vn.norms, wn.norms));
  Tensor joint = vn.mask;
  for (std::int64_t i = 0; i < joint.size(); ++i) joint[i] *= wn.mask[i];
  cos = tape.multiply(cos, tape.constant(joint));
  std::vector<std::int64_t> expand(static_cast<std::size_t>(d_q * 3));
  for (std::int64_t k = 0; k < d_q; ++k) {
    for (std::int64_t c = 0; c < 3; ++c) expand[static_cast<std::size_t>(k * 3 + c)] = k;
  }
  Value cos3 = permute_elements(tape, cos, std::move(expand), {d_q, 3});
  Value u = tape.multiply(v, cos3);
  return tape.matmul(we, u);
}

Tensor v_mlp(const Tensor& wc, const Tensor& wd, const Tensor& we, const Tensor& gate_dirs,
             const Tensor& qi, const Tensor& qo) {
  Tape scratch;
  return scratch.value(v_mlp(scratch, scratch.constant(wc), scratch.constant(wd), scratch.constant(we),
                             scratch.constant(gate_dirs), scratch.constant(qi), scratch.constant(qo)));
}

Tensor update_atoms_linear(const Tensor& s_i, const Tensor& w, const Tensor& b) {
  Tape scratch;
  Value out = num::linear(scratch, scratch.constant(s_i), scratch.constant(w), scratch.constant(b));
  const std::int64_t d_q = scratch.value(out).size() / 3;
  return scratch.value(scratch.reshape(out, {d_q, 3}));
}

}  // namespace vfn::net

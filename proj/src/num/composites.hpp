#pragma once

#include <array>
#include <cmath>

#include "num/tape.hpp"

namespace vfn::num {

/// Repeats a [1,w] row `rows` times.
inline Value row_broadcast(Tape& tape, Value row, std::int64_t rows) {
  return tape.gather_rows(row, std::vector<std::int64_t>(static_cast<std::size_t>(rows), 0));
}

/// x [n,w] + bias [1,w] broadcast over rows.
inline Value add_bias(Tape& tape, Value x, Value bias) {
  return tape.add(x, row_broadcast(tape, bias, tape.value(x).dim(0)));
}

inline Value linear(Tape& tape, Value x, Value w, Value bias) {
  Value y = tape.matmul(x, w);
  return bias.valid() ? add_bias(tape, y, bias) : y;
}

/// Elementwise sigmoid, expressed through the two-column softmax
/// identity sigmoid(x) = softmax([x, 0])[0].
inline Value sigmoid(Tape& tape, Value x) {
  const Shape orig = tape.value(x).shape;
  const std::int64_t n = tape.value(x).size();
  Value col = tape.reshape(x, {n, 1});
  Value zero = tape.constant(Tensor::zeros({n, 1}));
  const std::array<Value, 2> parts{col, zero};
  Value sm = tape.softmax_axis(tape.concat(parts, 1), 1);
  return tape.reshape(tape.slice(sm, 1, 0, 1), orig);
}

/// Elementwise exp for non-positive inputs, via the softmax column
/// ratio exp(x) = softmax([x,0])[0] / softmax([x,0])[1]. The second
/// column is >= 1/2 whenever x <= 0, so the division is stable.
inline Value exp_nonpos(Tape& tape, Value x) {
  const Shape orig = tape.value(x).shape;
  const std::int64_t n = tape.value(x).size();
  Value col = tape.reshape(x, {n, 1});
  Value zero = tape.constant(Tensor::zeros({n, 1}));
  const std::array<Value, 2> parts{col, zero};
  Value sm = tape.softmax_axis(tape.concat(parts, 1), 1);
  Value num = tape.slice(sm, 1, 0, 1);
  Value den = tape.slice(sm, 1, 1, 1);
  return tape.reshape(tape.divide(num, den), orig);
}

/// Column-wise mean of x [n,w], returned as [1,w].
inline Value mean_rows(Tape& tape, Value x) {
  const std::int64_t n = tape.value(x).dim(0);
  const std::int64_t w = tape.value(x).dim(1);
  Value s = tape.reshape(tape.sum_axis(x, 0), {1, w});
  return tape.scalar_scale(s, 1.0 / static_cast<double>(n));
}

inline Value mean_all(Tape& tape, Value x) {
  const std::int64_t n = tape.value(x).size();
  Value flat = tape.reshape(x, {n});
  return tape.scalar_scale(tape.sum_axis(flat, 0), 1.0 / static_cast<double>(n));
}

}  // namespace vfn::num

#pragma once

#include <cstddef>
#include <vector>

#include "poolforge/autodiff.hpp"
#include "poolforge/tensor.hpp"

// Differentiable operations on Vars. Every op records itself on the tape of
// its first input together with its adjoint. Binary elementwise ops
// broadcast numpy-style: shapes are aligned at the trailing dimension and
// extents of 1 stretch.

namespace poolforge {

Shape broadcast_shapes(const Shape& a, const Shape& b);

// Elementwise, broadcasting.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var x, double factor);
Var add_scalar(Var x, double value);
Var neg(Var x);

Var relu(Var x);
Var sigmoid(Var x);
Var tanh(Var x);
Var exp(Var x);
// Natural log; throws NumericError for non-positive input.
Var log(Var x);
// Throws NumericError for negative input.
Var sqrt(Var x);
Var square(Var x);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(Var a, double s) { return scale(a, s); }
inline Var operator*(double s, Var a) { return scale(a, s); }
inline Var operator-(Var a) { return neg(a); }

// [..., M, K] x [..., K, N] -> [..., M, N]; batch prefixes broadcast.
Var matmul(Var a, Var b);
// Swaps the last two axes.
Var transpose(Var x);

Var reshape(Var x, Shape shape);
Var concat(const std::vector<Var>& parts, int axis);
Var slice(Var x, int axis, std::size_t start, std::size_t length);

Var reduce_sum(Var x, int axis, bool keepdims = false);
Var reduce_mean(Var x, int axis, bool keepdims = false);
// Sum / mean of all elements, rank-0 result.
Var sum(Var x);
Var mean(Var x);

// Max-subtracted softmax along `axis`.
Var softmax(Var x, int axis);
// x / max(||x||_2, eps) along `axis`. Zero vectors map to zero.
Var l2_normalize(Var x, int axis, double eps);

// Sum over elements of -[y log p + (1 - y) log(1 - p)], with p clamped to
// [eps, 1 - eps]. `targets` has the shape of `probs`.
Var binary_cross_entropy(Var probs, const Tensor& targets, double eps = 1e-12);

// Running statistics owned by a batch-norm site. Lives outside the tape so
// training steps can update it.
struct NormState {
  // References into storage owned elsewhere (usually a ParamStore).
  Tensor& running_mean;
  Tensor& running_var;
};

struct BatchNormOptions {
  bool training = true;
  double momentum = 0.99;
  double eps = 1e-5;
};

// Normalizes over every axis except the last (the feature axis), then applies
// gamma * x_hat + beta. Training mode uses batch moments and updates `state`;
// inference mode uses `state`. Training needs at least two rows.
Var batch_norm(Var x, Var gamma, Var beta, const NormState& state, const BatchNormOptions& options);

}  // namespace poolforge

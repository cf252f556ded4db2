#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "poolforge/autodiff.hpp"

namespace poolforge {

// Builds a scalar on `tape` from the given input Vars. Must be a pure
// function of the input values: it is re-run once per perturbed coordinate.
using TapeFunction = std::function<Var(Tape& tape, std::span<const Var> inputs)>;

struct GradCheckOptions {
  // Central-difference step; must lie in [1e-7, 1e-3].
  double step = 1e-5;
  double tolerance = 1e-6;
  // Relative error is |tape - numeric| / max(|tape|, |numeric|, abs_floor).
  double abs_floor = 1e-8;

  // Settings for whole layers and models: tolerance 1e-4, and a floor well
  // above the ~1e-10 roundoff of differencing an O(10) loss, since some
  // gradients are exactly zero (biases ahead of a softmax or batch norm).
  static GradCheckOptions composite() { return GradCheckOptions{1e-5, 1e-4, 1e-5}; }
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double worst_tape = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates = 0;
  bool passed = false;

  std::string summary() const;
};

// Compares tape gradients of `f` against central finite differences at every
// coordinate of every input.
GradCheckReport grad_check(const TapeFunction& f, const std::vector<Tensor>& inputs,
                           const GradCheckOptions& options = {});

}  // namespace poolforge

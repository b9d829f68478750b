#pragma once

#include <functional>
#include <vector>

#include "tim4rec/tensor.hpp"

namespace tim4rec {

struct GradCheckReport {
  double max_rel_err = 0.0;
  size_t worst_param = 0;   // which tensor in the params list
  int64_t worst_index = 0;  // flat coordinate inside it
  double analytic = 0.0;
  double numeric = 0.0;
};

// Central finite-difference check of analytic gradients. `f` evaluates the
// scalar loss at a given parameter setting; `analytic` holds one gradient
// tensor per parameter (shape-matched). Every coordinate is perturbed by
// +/- step and compared as |analytic - fd| / max(1, |analytic|); the worst
// coordinate is reported. Throws ContractError if the loss goes non-finite
// while probing.
GradCheckReport finite_diff_check(const std::function<double(const std::vector<Tensor>&)>& f,
                                  std::vector<Tensor> params,
                                  const std::vector<Tensor>& analytic,
                                  double step = 1e-5);

}  // namespace tim4rec

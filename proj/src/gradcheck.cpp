#include "tim4rec/gradcheck.hpp"

#include <cmath>

#include "tim4rec/errors.hpp"

namespace tim4rec {

GradCheckReport finite_diff_check(const std::function<double(const std::vector<Tensor>&)>& f,
                                  std::vector<Tensor> params,
                                  const std::vector<Tensor>& analytic,
                                  double step) {
  if (params.size() != analytic.size())
    throw ShapeError("finite_diff_check: params/analytic count mismatch");
  if (step <= 0.0) throw ContractError("finite_diff_check: step must be positive");

  GradCheckReport report;
  for (size_t p = 0; p < params.size(); ++p) {
    if (!params[p].same_shape(analytic[p]))
      throw ShapeError("finite_diff_check: gradient shape mismatch at param " +
                       std::to_string(p));
    for (int64_t i = 0; i < params[p].size(); ++i) {
      const double saved = params[p][i];
      params[p][i] = saved + step;
      const double up = f(params);
      params[p][i] = saved - step;
      const double down = f(params);
      params[p][i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down))
        throw ContractError("finite_diff_check: non-finite loss while probing param " +
                            std::to_string(p) + " index " + std::to_string(i));
      const double fd = (up - down) / (2.0 * step);
      const double a = analytic[p][i];
      const double rel = std::abs(a - fd) / std::max(1.0, std::abs(a));
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = p;
        report.worst_index = i;
        report.analytic = a;
        report.numeric = fd;
      }
    }
  }
  return report;
}

}  // namespace tim4rec

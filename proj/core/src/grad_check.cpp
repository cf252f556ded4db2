#include "poolforge/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "poolforge/error.hpp"

namespace poolforge {

std::string GradCheckReport::summary() const {
  std::ostringstream os;
  os << (passed ? "PASS" : "FAIL") << " max_rel=" << max_rel_error << " max_abs=" << max_abs_error
     << " coords=" << coordinates << " worst=(input " << worst_input << ", index " << worst_index << ", tape "
     << worst_tape << ", numeric " << worst_numeric << ")";
  return os.str();
}

namespace {

double evaluate(const TapeFunction& f, const std::vector<Tensor>& inputs) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (const Tensor& t : inputs) vars.push_back(tape.constant(t));
  const Var out = f(tape, vars);
  if (out.value().size() != 1) throw ContractError("grad_check: function must return a scalar");
  const double v = out.value().item();
  if (!std::isfinite(v)) throw NumericError("grad_check: function value is not finite");
  return v;
}

}  // namespace

GradCheckReport grad_check(const TapeFunction& f, const std::vector<Tensor>& inputs, const GradCheckOptions& options) {
  if (options.step < 1e-7 || options.step > 1e-3)
    throw ContractError("grad_check: step must lie in [1e-7, 1e-3]");

  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& t : inputs) vars.push_back(tape.variable(t));
    const Var out = f(tape, vars);
    tape.backward(out);
    for (const Var& v : vars) analytic.push_back(tape.grad(v));
  }

  GradCheckReport report;
  std::vector<Tensor> work = inputs;
  const double h = options.step;
  for (std::size_t i = 0; i < work.size(); ++i) {
    const std::size_t n = work[i].size();
    for (std::size_t j = 0; j < n; ++j) {
      const double original = inputs[i][j];
      work[i].mutable_data()[j] = original + h;
      const double plus = evaluate(f, work);
      work[i].mutable_data()[j] = original - h;
      const double minus = evaluate(f, work);
      work[i].mutable_data()[j] = original;

      const double numeric = (plus - minus) / (2.0 * h);
      const double tape_value = analytic[i][j];
      const double abs_err = std::abs(numeric - tape_value);
      const double rel_err = abs_err / std::max({std::abs(numeric), std::abs(tape_value), options.abs_floor});
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      if (rel_err > report.max_rel_error || report.coordinates == 0) {
        report.max_rel_error = rel_err;
        report.worst_input = i;
        report.worst_index = j;
        report.worst_tape = tape_value;
        report.worst_numeric = numeric;
      }
      ++report.coordinates;
    }
  }
  report.passed = report.max_rel_error < options.tolerance;
  return report;
}

}  // namespace poolforge

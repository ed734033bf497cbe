#ifndef CROPFORGE_GRADCHECK_HPP
#define CROPFORGE_GRADCHECK_HPP

#include <functional>
#include <string>
#include <vector>

#include "cropforge/autodiff.hpp"
#include "cropforge/rng.hpp"
#include "cropforge/tensor.hpp"

namespace cropforge {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t worst_index = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
};

// Compares the reverse-mode gradient of phi(x) = <projection, op(x)> against
// central finite differences (phi(x+eps e_i) - phi(x-eps e_i)) / (2 eps) for
// every input element. Relative error uses max(1, |analytic|, |numeric|) as
// the denominator. A null projection means all-ones. epsilon must lie in
// [1e-7, 1e-3]. Throws NumericError when any evaluation is non-finite.
GradCheckReport gradient_check(const std::function<Var(const Var&)>& op, const Tensor& input, double epsilon,
                               const Tensor* projection = nullptr);

// Random values with guaranteed pairwise separation (a shuffled linspace):
// safe around argmax-style kinks, since an eps-perturbation can never flip a
// comparison.
Tensor shuffled_linspace(Shape shape, double lo, double hi, Rng& rng);

// Saliency-like test map: low background noise plus one bright Gaussian
// blob, scaled so the gamma-window stays strictly inside the map.
Tensor blob_map(int height, int width, Rng& rng);

struct OpCheckRow {
  std::string op;
  double max_rel_err = 0.0;
  bool pass = false;
};

// Runs the finite-difference check for every differentiable layer in the
// library over `rounds` seeded random inputs each. Used by both the CLI
// `gradcheck` command and the acceptance suite.
std::vector<OpCheckRow> run_gradient_suite(std::uint64_t seed, int rounds, double tolerance);

}  // namespace cropforge

#endif  // CROPFORGE_GRADCHECK_HPP

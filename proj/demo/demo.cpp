// Near-extreme density of a Gaussian parent for a few block sizes, and the
// same quantity for a mixture of block volatilities.

#include <cstdio>
#include <vector>

#include "nearex/near_extreme.hpp"
#include "nearex/synthetic.hpp"

int main() {
  using namespace nearex;
  const auto gaussian = ParentSpec::gaussian(1.0);

  std::printf("%6s", "r");
  for (std::size_t n : {2, 10, 25, 50}) std::printf("   rho(r, N=%-3zu)", n);
  std::printf("\n");
  for (double r = 0.0; r <= 4.0; r += 0.5) {
    std::printf("%6.2f", r);
    for (std::size_t n : {2, 10, 25, 50}) std::printf("   %14.10f", exact_density(gaussian, n, r));
    std::printf("\n");
  }

  // 200 block volatilities, log-uniform on [0.005, 0.03].
  const auto sigmas = log_uniform_sigmas(200, 0.005, 0.03, 42);
  const MixtureEvaluator mixture(MixtureModel(sigmas, 25));
  std::printf("\nmixture of %zu components, N = 25\n", mixture.components());
  for (double p : {0.1, 0.5, 0.9}) std::printf("  quantile(%.1f) = %.6f\n", p, mixture.quantile(p));
  return 0;
}

#include "svylasso/glm.hpp"
#include "svylasso/marginal_effects.hpp"
#include "svylasso/parallel.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

using namespace svylasso;

TEST_SUITE_BEGIN("parallel");

// The chunked reductions must give the same bits for any worker count.
TEST_CASE("glm kernels are bit-identical across thread counts") {
  Rng rng(71);
  const auto inst = oracles::random_instance(rng, 20000, 8);
  const Dataset d = oracles::to_dataset(inst);
  Eigen::VectorXd th(9);
  for (Eigen::Index k = 0; k < 9; ++k) th[k] = 0.3 * rng.normal();
  const Theta theta(th);

  const int original = max_threads();
  set_threads(1);
  const double l1 = weighted_loglik(d, theta);
  const Eigen::VectorXd s1 = score(d, theta);
  const auto [h1, i1] = hessian_and_info(d, theta);

  set_threads(std::max(original, 4));
  const double l2 = weighted_loglik(d, theta);
  const Eigen::VectorXd s2 = score(d, theta);
  const auto [h2, i2] = hessian_and_info(d, theta);
  set_threads(original);

  CHECK(l1 == l2);
  CHECK((s1.array() == s2.array()).all());
  CHECK((h1.array() == h2.array()).all());
  CHECK((i1.array() == i2.array()).all());
}

TEST_CASE("ame is bit-identical across thread counts") {
  Rng rng(72);
  const auto inst = oracles::random_instance(rng, 15000, 4, /*binary_fraction=*/1.0);
  const Dataset d = oracles::to_dataset(inst);
  Eigen::VectorXd th(5);
  for (Eigen::Index k = 0; k < 5; ++k) th[k] = 0.5 * rng.normal();

  const int original = max_threads();
  set_threads(1);
  const AmeResult a1 = ame(d, Theta(th), 2);
  set_threads(std::max(original, 4));
  const AmeResult a2 = ame(d, Theta(th), 2);
  set_threads(original);

  CHECK(a1.ame_hat == a2.ame_hat);
  CHECK((a1.jacobian_column.array() == a2.jacobian_column.array()).all());
}

TEST_SUITE_END();

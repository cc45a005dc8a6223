#include "doctest.h"
#include "support.hpp"

#include "mpcal/differential_evolution.hpp"
#include "mpcal/errors.hpp"
#include "mpcal/kernels.hpp"
#include "mpcal/mcs.hpp"
#include "mpcal/observability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

using namespace mpcal;

namespace {

double brute_force_best(const std::vector<Eigen::MatrixXd>& grams, int n, int k) {
  double best = -1.0;
  std::vector<int> subset(static_cast<std::size_t>(k));
  std::vector<bool> pick(static_cast<std::size_t>(n), false);
  std::fill(pick.begin(), pick.begin() + k, true);
  do {
    subset.clear();
    for (int i = 0; i < n; ++i) {
      if (pick[static_cast<std::size_t>(i)]) subset.push_back(i);
    }
    best = std::max(best, subset_index(grams, subset));
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return best;
}

}  // namespace

TEST_CASE("de_optimize") {
  SUBCASE("sphere in ten dimensions") {
    std::vector<Bound> b(10, Bound{-5.0, 5.0});
    DeConfig cfg;
    cfg.max_generations = 200;
    cfg.stall_generations = 0;
    const auto r = de_optimize([](const Eigen::VectorXd& x) { return -x.squaredNorm(); }, b, cfg);
    CHECK(r.best_value > -1e-3);
    CHECK(r.generations_used <= 200);
  }
  SUBCASE("one-dimensional parabola") {
    std::vector<Bound> b = {{-10.0, 10.0}};
    DeConfig cfg;
    cfg.population_size = 20;
    cfg.max_generations = 100;
    const auto r = de_optimize([](const Eigen::VectorXd& x) { return -(x(0) - 2.0) * (x(0) - 2.0); }, b, cfg);
    CHECK(std::abs(r.best(0) - 2.0) < 1e-3);
  }
  SUBCASE("same seed gives the same history, serial or parallel") {
    std::vector<Bound> b(4, Bound{-1.0, 1.0});
    DeConfig cfg;
    cfg.max_generations = 60;
    auto f = [](const Eigen::VectorXd& x) { return std::cos(3 * x(0)) - x.squaredNorm(); };
    const auto a = de_optimize(f, b, cfg, Execution::Serial);
    const auto c = de_optimize(f, b, cfg, Execution::Parallel);
    CHECK(a.history == c.history);
    CHECK(a.best == c.best);
    CHECK(std::is_sorted(a.history.begin(), a.history.end()));
  }
  SUBCASE("NaN objective values never win") {
    std::vector<Bound> b = {{-1.0, 1.0}};
    DeConfig cfg;
    cfg.max_generations = 50;
    const auto r = de_optimize(
        [](const Eigen::VectorXd& x) { return x(0) > 0.0 ? std::numeric_limits<double>::quiet_NaN() : x(0); }, b, cfg);
    CHECK(std::isfinite(r.best_value));
    CHECK(r.best(0) <= 0.0);
    CHECK(r.best_value > -1e-3);
  }
  SUBCASE("configuration bounds") {
    DeConfig cfg;
    cfg.population_size = 3;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.differential_weight = 0.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.differential_weight = 2.5;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.crossover_rate = 1.1;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    CHECK_NOTHROW(DeConfig{}.validate());
  }
}

TEST_CASE("decode_subset always yields K distinct in-range indices") {
  std::mt19937_64 rng(61);
  std::uniform_int_distribution<int> pool_size(1, 40);
  std::uniform_real_distribution<double> gene(-5.0, 45.0);
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = pool_size(rng);
    const int k = std::uniform_int_distribution<int>(1, n)(rng);
    std::vector<double> genes(static_cast<std::size_t>(k));
    for (auto& g : genes) g = gene(rng);
    const auto s = decode_subset(genes, n);
    REQUIRE(static_cast<int>(s.size()) == k);
    CHECK(std::is_sorted(s.begin(), s.end()));
    CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
    CHECK(s.front() >= 0);
    CHECK(s.back() < n);
  }
  const std::vector<double> collide = {2.3, 2.9, 4.0};
  CHECK(decode_subset(collide, 5) == std::vector<int>{2, 3, 4});
  const std::vector<double> wrap = {4.5, 4.1};
  CHECK(decode_subset(wrap, 5) == std::vector<int>{0, 4});
}

TEST_CASE("select_configurations") {
  const RobotModel nominal = RobotModel::nominal();
  SUBCASE("small pool reaches the exhaustive optimum") {
    const auto pool = test::random_pool(8, 71);
    const auto grams = gram_blocks(nominal, pool, ParameterMask::observable());
    const double best = brute_force_best(grams, 8, 3);
    const auto r = select_configurations(nominal, pool, 3);
    CHECK(r.index_value == doctest::Approx(best).epsilon(1e-12));
    CHECK(subset_index(grams, r.chosen_indices) == doctest::Approx(r.index_value).epsilon(1e-12));
  }
  SUBCASE("K equal to the pool takes everything") {
    const auto pool = test::random_pool(12, 73);
    const auto r = select_configurations(nominal, pool, 12);
    REQUIRE(r.chosen_indices.size() == 12);
    for (int i = 0; i < 12; ++i) CHECK(r.chosen_indices[static_cast<std::size_t>(i)] == i);
    CHECK(r.index_value == doctest::Approx(observe(nominal, pool).index_value).epsilon(1e-8));
  }
  SUBCASE("bad K") {
    const auto pool = test::random_pool(5, 79);
    CHECK_THROWS_AS(select_configurations(nominal, pool, 0), InvalidArgument);
    CHECK_THROWS_AS(select_configurations(nominal, pool, 6), InvalidArgument);
  }
  SUBCASE("result properties and determinism") {
    const auto pool = test::random_pool(40, 83);
    McsOptions opts;
    opts.de.max_generations = 60;
    const auto a = select_configurations(nominal, pool, 10, opts);
    const auto b = select_configurations(nominal, pool, 10, opts);
    CHECK(a.chosen_indices == b.chosen_indices);
    CHECK(a.history == b.history);
    CHECK(std::set<int>(a.chosen_indices.begin(), a.chosen_indices.end()).size() == 10);
    CHECK(std::is_sorted(a.history.begin(), a.history.end()));
    for (double v : a.final_population_values) CHECK(a.index_value >= v);

    std::mt19937_64 rng(89);
    std::vector<int> idx(40);
    std::iota(idx.begin(), idx.end(), 0);
    const auto grams = gram_blocks(nominal, pool, opts.mask);
    double mean = 0.0;
    for (int t = 0; t < 100; ++t) {
      std::shuffle(idx.begin(), idx.end(), rng);
      std::vector<int> sub(idx.begin(), idx.begin() + 10);
      mean += subset_index(grams, sub) / 100.0;
    }
    CHECK(a.index_value >= mean);
  }
}

TEST_CASE("observability_curve") {
  const RobotModel nominal = RobotModel::nominal();
  const auto pool = test::random_pool(30, 97);
  McsOptions opts;
  opts.de.max_generations = 40;
  const std::vector<int> none;
  CHECK(observability_curve(nominal, pool, none, opts).empty());
  const std::vector<int> full = {30};
  const auto one = observability_curve(nominal, pool, full, opts);
  REQUIRE(one.size() == 1);
  CHECK(one[0].index_value == doctest::Approx(observe(nominal, pool).index_value).epsilon(1e-8));
  const std::vector<int> unsorted = {10, 5};
  CHECK_THROWS_AS(observability_curve(nominal, pool, unsorted, opts), InvalidArgument);
}

TEST_CASE("kernels: serial reference and OpenMP path agree") {
  const RobotModel model = RobotModel::nominal();
  const auto pool = test::random_pool(333, 101);
  const auto ps = positions_batch(model, pool, Execution::Serial);
  const auto pp = positions_batch(model, pool, Execution::Parallel);
  const auto ls = linearize_batch(model, pool, Execution::Serial);
  const auto lp = linearize_batch(model, pool, Execution::Parallel);
  const auto gs = gram_blocks(model, pool, ParameterMask::observable(), Execution::Serial);
  const auto gp = gram_blocks(model, pool, ParameterMask::observable(), Execution::Parallel);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    CHECK(ps[i] == pp[i]);
    CHECK(ps[i] == tool_position(model, pool[i]));
    CHECK(ls[i].jacobian == lp[i].jacobian);
    CHECK(gs[i] == gp[i]);
  }

  std::mt19937_64 rng(103);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd a(1000, 13);
  Eigen::VectorXd b(1000), w(1000);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    b(i) = g(rng);
    w(i) = 0.5 + std::abs(g(rng));
  }
  const auto ns = accumulate_normal_equations(a, b, w, Execution::Serial);
  const auto np = accumulate_normal_equations(a, b, w, Execution::Parallel);
  const Eigen::MatrixXd lhs = a.transpose() * w.asDiagonal() * a;
  const Eigen::VectorXd rhs = a.transpose() * w.asDiagonal() * b;
  CHECK((ns.lhs - lhs).cwiseAbs().maxCoeff() < 1e-10 * lhs.cwiseAbs().maxCoeff());
  CHECK((np.lhs - lhs).cwiseAbs().maxCoeff() < 1e-10 * lhs.cwiseAbs().maxCoeff());
  CHECK((np.rhs - rhs).cwiseAbs().maxCoeff() < 1e-10 * rhs.cwiseAbs().maxCoeff());

  const auto f = [](int i) { return std::sin(0.1 * i); };
  const auto es = evaluate_indexed(500, f, Execution::Serial);
  const auto ep = evaluate_indexed(500, f, Execution::Parallel);
  CHECK(es == ep);
  CHECK(es[17] == std::sin(1.7));
}

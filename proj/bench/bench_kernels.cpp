// Serial reference vs OpenMP path for the data-parallel kernels.
//
//   bench_kernels [--n 2400] [--reps 5] [--csv out.csv]
//
// Prints one row per kernel: median wall time of each path, speedup, and the
// largest absolute difference between the two results (expected 0: the
// parallel reductions use a fixed block order).

#include "mpcal/kernels.hpp"
#include "mpcal/observability.hpp"
#include "mpcal/random.hpp"

#include "CLI11.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <random>

using namespace mpcal;

namespace {

template <class F>
double median_seconds(int reps, F&& fn) {
  std::vector<double> t;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

struct Row {
  const char* kernel;
  double serial_s, parallel_s, max_diff;
  double tolerance = 0.0;  // per-item kernels must match bit for bit
};

double diff(const std::vector<Vector3>& a, const std::vector<Vector3>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, (a[i] - b[i]).cwiseAbs().maxCoeff());
  return d;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernel benchmark: serial reference vs OpenMP"};
  int n = 2400, reps = 5;
  std::string csv;
  app.add_option("--n", n, "configurations");
  app.add_option("--reps", reps, "repetitions per measurement (median reported)");
  app.add_option("--csv", csv, "also write the table as CSV");
  CLI11_PARSE(app, argc, argv);
  if (n < 1 || reps < 1) {
    std::fprintf(stderr, "--n and --reps must be >= 1\n");
    return 2;
  }

  const RobotModel model = RobotModel::nominal();
  std::mt19937_64 rng(derive_seed(2024, 0));
  std::uniform_real_distribution<double> angle(-2.5, 2.5);
  std::vector<JointVector> joints(static_cast<std::size_t>(n));
  for (auto& q : joints) {
    for (int k = 0; k < kJointCount; ++k) q(k) = angle(rng);
  }

  std::vector<Row> rows;
  {
    std::vector<Vector3> s, p;
    const double ts = median_seconds(reps, [&] { s = positions_batch(model, joints, Execution::Serial); });
    const double tp = median_seconds(reps, [&] { p = positions_batch(model, joints, Execution::Parallel); });
    rows.push_back({"positions_batch", ts, tp, diff(s, p)});
  }
  {
    std::vector<Linearization> s, p;
    const double ts = median_seconds(reps, [&] { s = linearize_batch(model, joints, Execution::Serial); });
    const double tp = median_seconds(reps, [&] { p = linearize_batch(model, joints, Execution::Parallel); });
    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) d = std::max(d, (s[i].jacobian - p[i].jacobian).cwiseAbs().maxCoeff());
    rows.push_back({"linearize_batch", ts, tp, d});
  }
  {
    const ParameterMask mask = ParameterMask::observable();
    std::vector<Eigen::MatrixXd> s, p;
    const double ts = median_seconds(reps, [&] { s = gram_blocks(model, joints, mask, Execution::Serial); });
    const double tp = median_seconds(reps, [&] { p = gram_blocks(model, joints, mask, Execution::Parallel); });
    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) d = std::max(d, (s[i] - p[i]).cwiseAbs().maxCoeff());
    rows.push_back({"gram_blocks", ts, tp, d});
  }
  {
    const int cols = 23;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4 * n, cols);
    std::normal_distribution<double> g(0.0, 1.0);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
    Eigen::VectorXd b(a.rows()), w(a.rows());
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      b(i) = g(rng);
      w(i) = 1.0 + std::abs(g(rng));
    }
    NormalEquations s, p;
    const double ts = median_seconds(reps, [&] { s = accumulate_normal_equations(a, b, w, Execution::Serial); });
    const double tp = median_seconds(reps, [&] { p = accumulate_normal_equations(a, b, w, Execution::Parallel); });
    const double d = std::max((s.lhs - p.lhs).cwiseAbs().maxCoeff(), (s.rhs - p.rhs).cwiseAbs().maxCoeff());
    // Blocked partial sums round differently from the row-order reference.
    const double scale = std::max(s.lhs.cwiseAbs().maxCoeff(), s.rhs.cwiseAbs().maxCoeff());
    rows.push_back({"normal_equations", ts, tp, d, 1e-13 * scale});
  }
  {
    const auto f = [&](int i) {
      const auto& q = joints[static_cast<std::size_t>(i)];
      return singular_values(position_jacobian(model, q))[0];
    };
    std::vector<double> s, p;
    const double ts = median_seconds(reps, [&] { s = evaluate_indexed(n, f, Execution::Serial); });
    const double tp = median_seconds(reps, [&] { p = evaluate_indexed(n, f, Execution::Parallel); });
    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) d = std::max(d, std::abs(s[i] - p[i]));
    rows.push_back({"evaluate_indexed", ts, tp, d});
  }

  std::printf("threads %d, n %d, reps %d\n", omp_get_max_threads(), n, reps);
  std::printf("%-18s %12s %12s %8s %10s\n", "kernel", "serial_ms", "parallel_ms", "speedup", "max_diff");
  for (const auto& r : rows) {
    std::printf("%-18s %12.3f %12.3f %8.2f %10.3g\n", r.kernel, 1e3 * r.serial_s, 1e3 * r.parallel_s,
                r.serial_s / r.parallel_s, r.max_diff);
  }
  if (!csv.empty()) {
    std::ofstream out(csv);
    out << "kernel,threads,n,serial_s,parallel_s,speedup,max_diff\n";
    for (const auto& r : rows) {
      out << r.kernel << ',' << omp_get_max_threads() << ',' << n << ',' << r.serial_s << ',' << r.parallel_s << ','
          << r.serial_s / r.parallel_s << ',' << r.max_diff << '\n';
    }
    if (!out) {
      std::fprintf(stderr, "cannot write %s\n", csv.c_str());
      return 1;
    }
  }
  bool agree = true;
  for (const auto& r : rows) {
    if (r.max_diff > r.tolerance) {
      std::fprintf(stderr, "%s: serial and parallel differ by %g (allowed %g)\n", r.kernel, r.max_diff, r.tolerance);
      agree = false;
    }
  }
  return agree ? 0 : 1;
}

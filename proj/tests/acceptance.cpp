// Acceptance run: one PASS/FAIL line per criterion with wall time.
// Exit status is 0 when every criterion ran to completion; pass --strict
// to also fail on any red criterion. --report FILE copies the lines there.
#include "gridsparse/admm.hpp"
#include "gridsparse/attack.hpp"
#include "gridsparse/detection.hpp"
#include "gridsparse/error.hpp"
#include "gridsparse/estimation.hpp"
#include "gridsparse/experiment.hpp"
#include "gridsparse/grid_model.hpp"

#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace gridsparse;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double inf_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

IndexList random_subset(Index n, Index size, std::mt19937_64& rng) {
  IndexList all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(static_cast<std::size_t>(size));
  std::sort(all.begin(), all.end());
  return all;
}

Outcome table_dimensions() {
  const struct {
    const char* system;
    Index N, D;
  } expected[] = {{"ieee14", 34, 14},   {"ieee30", 71, 30},   {"ieee39", 85, 39},
                  {"ieee57", 137, 57},  {"ieee118", 304, 118}, {"ieee300", 711, 300}};
  Outcome out{true, ""};
  for (const auto& e : expected) {
    const MeasurementModel m = build_dc_jacobian(load_case(e.system));
    out.detail += fmt("%s=(%ld,%ld) ", e.system, static_cast<long>(m.measurements()), static_cast<long>(m.states()));
    out.pass = out.pass && m.measurements() == e.N && m.states() == e.D;
  }
  return out;
}

Outcome solver_oracle() {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Matrix A = oracle::gaussian_matrix(20, 10, rng);
    const Vector y = oracle::gaussian_vector(20, rng);
    SolverConfig cfg;
    cfg.lambda = 0.1 * (A.transpose() * y).cwiseAbs().maxCoeff();
    cfg.eps_abs = 1e-9;
    cfg.eps_rel = 1e-9;
    cfg.max_iter = 100000;
    worst = std::max(worst, inf_norm(lasso_admm(A, y, cfg).solution - oracle::lasso_cd(A, y, cfg.lambda)));
  }
  int matched = 0, total = 0;
  for (Index D = 4; D <= 12; ++D) {
    for (Index k = 1; k <= 3; ++k) {
      for (int rep = 0; rep < 4; ++rep) {
        const Matrix A = oracle::gaussian_matrix(2 * D, D, rng);
        const Vector y = oracle::gaussian_vector(2 * D, rng);
        SolverConfig cfg;
        cfg.eps_abs = 1e-9;
        cfg.eps_rel = 1e-9;
        cfg.max_iter = 20000;
        const Vector a = regressor_selection_admm(A, y, k, cfg).solution;
        const double got = (A * a - y).squaredNorm();
        const double best = oracle::best_subset_objective(A, y, k);
        ++total;
        if (got <= best * (1.0 + 1e-6) + 1e-12) ++matched;
      }
    }
  }
  const double rate = static_cast<double>(matched) / total;
  return {worst <= 1e-4 && rate >= 0.9,
          fmt("lasso max |admm - cd|_inf = %.2e over 50; regressor selection optimal on %d/%d (%.1f%%)", worst,
              matched, total, 100.0 * rate)};
}

Outcome consensus_centralized() {
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const Matrix A = oracle::gaussian_matrix(60, 15, rng);
    const Vector y = oracle::gaussian_vector(60, rng);
    SolverConfig cfg;
    cfg.lambda = 0.1 * (A.transpose() * y).cwiseAbs().maxCoeff();
    // default eps_rel = 1e-2 alone allows disagreement above 1e-3
    cfg.eps_abs = 1e-8;
    cfg.eps_rel = 1e-8;
    cfg.max_iter = 100000;
    const Vector central = lasso_admm(A, y, cfg).solution;
    for (Index G : {2, 3, 5}) {
      RowBlocks blocks;
      for (const auto& rows : partition_indices(60, G).groups)
        blocks.push_back({linalg::select_rows(A, rows), linalg::select(y, rows)});
      worst = std::max(worst, inf_norm(consensus_lasso_admm(blocks, cfg).solution - central));
    }
  }
  return {worst <= 1e-3, fmt("max |consensus - centralized|_inf = %.2e over 10 systems x G in {2,3,5}", worst)};
}

Outcome unobservability() {
  const MeasurementModel m = build_dc_jacobian(load_case("ieee30"));
  const Index N = m.measurements(), D = m.states();
  const double tau = tau_threshold(m, 0.01);
  StrategicOptions options;
  options.lambda_scale = 0.5;
  int qualified = 0, detected_runs = 0, skipped = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const Index s = std::uniform_int_distribution<Index>(1, N * 3 / 10)(rng);
    const IndexList secure = random_subset(N, s, rng);
    AttackVector a;
    if (seed % 2 == 0) {
      a = strategic_lasso_attack(m.H, secure, 1.0, SolverConfig{}, options);
    } else {
      const Index k = std::uniform_int_distribution<Index>(0, D - 2)(rng);
      a = strategic_selective_attack(m.H, secure, k, 1.0, SolverConfig{}, options);
    }
    if (!a.solver.converged || a.leak_warning) {
      ++skipped;
      continue;
    }
    ++qualified;
    const Vector x = oracle::gaussian_vector(D, rng);
    const Vector z = m.H * x + a.a;
    const StateEstimate est = wls_estimate(m, {z, std::nullopt});
    const DetectionResult det = run_detection(m.H, z, est.x_hat, tau);
    if (std::any_of(det.attacked_mask.begin(), det.attacked_mask.end(), [](bool b) { return b; })) ++detected_runs;
  }
  return {qualified > 0 && detected_runs == 0,
          fmt("%d converged leak-free runs, %d with detections (%d skipped)", qualified, detected_runs, skipped)};
}

Outcome lambda_max_property() {
  std::mt19937_64 rng(5);
  // zero up to the stopping tolerance: at lambda_max the dual settles on the
  // threshold boundary, so stray entries of size ~eps_abs can survive
  const double zero_tol = SolverConfig{}.eps_abs;
  int zero_at_max = 0, nonzero_below = 0;
  for (int i = 0; i < 20; ++i) {
    const Matrix H = oracle::gaussian_matrix(30, 12, rng);
    const Vector v = oracle::gaussian_vector(30, rng);
    SolverConfig cfg;
    cfg.lambda = lambda_max(H, v);
    if (inf_norm(lasso_admm(H, v, cfg).solution) <= zero_tol) ++zero_at_max;
    cfg.lambda *= 0.99;
    if (inf_norm(lasso_admm(H, v, cfg).solution) > zero_tol) ++nonzero_below;
  }
  return {zero_at_max == 20 && nonzero_below >= 19,
          fmt("zero at lambda_max on %d/20; nonzero at 0.99 lambda_max on %d/20", zero_at_max, nonzero_below)};
}

double mean_metric(const ExperimentResult& r, const std::string& metric, double k_from) {
  // realization-weighted, pooling the G values drawn at each grid point
  double sum = 0.0;
  long n = 0;
  for (const auto& row : r.rows)
    if (row.metric == metric && row.k_over_N >= k_from - 1e-12) {
      sum += row.mean * static_cast<double>(row.n);
      n += row.n;
    }
  return n ? sum / static_cast<double>(n) : -1.0;
}

Outcome figure1_precision() {
  ExperimentConfig cfg;
  cfg.system = "ieee57";
  cfg.mode = ExperimentMode::random_attack_detect_distributed;
  cfg.realizations = 100;
  cfg.C = 0.5;
  cfg.seed = 1;
  cfg.G_policy = ClusterPolicy::prime_divisor_random();
  const ExperimentResult r = run_experiment(cfg);
  const double upper = mean_metric(r, "precision", 0.6);
  const double recall = mean_metric(r, "recall", 0.6);
  return {upper >= 0.75 && upper <= 1.0,
          fmt("upper-half precision mean %.3f (recall %.3f, all-k precision %.3f)", upper, recall,
              mean_metric(r, "precision", 0.0))};
}

Outcome figure2_tla() {
  Outcome out{true, ""};
  for (const char* system : {"ieee9", "ieee30", "ieee57", "ieee118"}) {
    ExperimentConfig cfg;
    cfg.system = system;
    cfg.mode = ExperimentMode::tla;
    cfg.realizations = 100;
    cfg.seed = 1;
    const ExperimentResult r = run_experiment(cfg);
    const double p_nonzero = mean_metric(r, "p_nonzero", 0.0);
    const double p_zero = mean_metric(r, "p_zero", 0.0);
    out.pass = out.pass && p_nonzero >= 0.35 && p_nonzero <= 0.85 && p_zero >= 0.15 && p_zero <= 0.65;
    out.detail += fmt("%s p_nonzero=%.3f p_zero=%.3f; ", system, p_nonzero, p_zero);
  }
  return out;
}

Outcome property_suites() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::string> failures;
  auto expect = [&](bool ok, const char* what) {
    if (!ok && std::find(failures.begin(), failures.end(), what) == failures.end()) failures.emplace_back(what);
  };
  const int cases = 1000;

  for (int i = 0; i < cases; ++i) {
    const Index n = 1 + static_cast<Index>(unit(rng) * 20);
    const Vector v = 3.0 * oracle::gaussian_vector(n, rng);
    const double kappa = 2.0 * unit(rng);
    const Vector s = soft_threshold(v, kappa);
    for (Index j = 0; j < n; ++j) {
      expect(std::abs(s(j)) == std::max(std::abs(v(j)) - kappa, 0.0), "soft threshold magnitude");
      expect(s(j) == 0.0 || (s(j) > 0) == (v(j) > 0), "soft threshold sign");
    }
    expect(soft_threshold(v, 0.0) == v, "soft threshold at zero");
    expect(soft_threshold(-v, kappa) == -s, "soft threshold odd");
    const Index k = static_cast<Index>(unit(rng) * (n + 1));
    const Vector h = hard_threshold_keep_k(v, k);
    expect(static_cast<Index>(linalg::support(h, 0.0).size()) == std::min(k, n), "hard threshold cardinality");
    double kept_min = INFINITY, dropped_max = 0.0;
    for (Index j = 0; j < n; ++j) {
      expect(h(j) == 0.0 || h(j) == v(j), "hard threshold keeps values");
      if (h(j) != 0.0) kept_min = std::min(kept_min, std::abs(v(j)));
      else dropped_max = std::max(dropped_max, std::abs(v(j)));
    }
    expect(k == 0 || kept_min >= dropped_max, "hard threshold keeps the largest");
    expect(hard_threshold_keep_k(h, k) == h, "hard threshold idempotent");
  }

  for (int i = 0; i < cases; ++i) {
    GridCase g;
    const int buses = 2 + static_cast<int>(unit(rng) * 15);
    for (int b = 1; b <= buses; ++b) g.buses.push_back({b, b == 1});
    for (int b = 2; b <= buses; ++b)
      g.branches.push_back({1 + static_cast<int>(unit(rng) * (b - 1)), b, 0.01 + unit(rng)});
    const int extra = static_cast<int>(unit(rng) * buses);
    for (int e = 0; e < extra; ++e) {
      const int f = 1 + static_cast<int>(unit(rng) * buses), t = 1 + static_cast<int>(unit(rng) * buses);
      if (f != t) g.branches.push_back({f, t, -0.5 + unit(rng) > 0 ? 0.05 + unit(rng) : -(0.05 + unit(rng))});
    }
    g.validate();
    const MeasurementModel m = build_dc_jacobian(g);
    expect(inf_norm(m.H * Vector::Ones(m.states())) <= 1e-9 * m.H.cwiseAbs().maxCoeff(), "H 1 = 0");
  }

  for (int i = 0; i < cases; ++i) {
    const Index N = 1 + static_cast<Index>(unit(rng) * 50);
    std::vector<bool> mask(static_cast<std::size_t>(N));
    for (auto&& b : mask) b = unit(rng) < 0.5;
    const IndexList truth = random_subset(N, static_cast<Index>(unit(rng) * (N + 1)), rng);
    const ConfusionCounts c = confusion(mask, truth);
    expect(c.total() == N, "confusion sum = N");
    expect(c.tp + c.fn == static_cast<Index>(truth.size()), "confusion positives");
  }

  {
    ExperimentConfig cfg;
    cfg.system = "ieee9";
    cfg.k_over_N_grid = {0.1, 0.4, 0.8};
    cfg.realizations = 5;
    for (auto mode : {ExperimentMode::tla, ExperimentMode::tsa, ExperimentMode::random_attack_detect_distributed,
                      ExperimentMode::collective_attack}) {
      cfg.mode = mode;
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        cfg.seed = seed;
        expect(to_csv(run_experiment(cfg)) == to_csv(run_experiment(cfg)), "identical seed gives identical csv");
      }
    }
  }

  int consensus_cases = 0;
  for (int i = 0; i < cases; ++i) {
    const Index rows = 8 + static_cast<Index>(unit(rng) * 16), cols = 2 + static_cast<Index>(unit(rng) * 5);
    const Matrix A = oracle::gaussian_matrix(rows, cols, rng);
    const Vector y = oracle::gaussian_vector(rows, rng);
    SolverConfig cfg;
    cfg.lambda = unit(rng) * (A.transpose() * y).cwiseAbs().maxCoeff();
    RowBlocks blocks;
    for (const auto& g : partition_indices(rows, 1 + static_cast<Index>(unit(rng) * 4)).groups)
      blocks.push_back({linalg::select_rows(A, g), linalg::select(y, g)});
    const SolveResult r = consensus_lasso_admm(blocks, cfg);
    if (!r.converged) continue;
    ++consensus_cases;
    const double bound = 10.0 * (cfg.eps_abs + cfg.eps_rel * inf_norm(r.solution));
    for (const auto& local : r.local) expect(inf_norm(local - r.solution) <= bound, "consensus agreement bound");
  }
  expect(consensus_cases >= cases * 9 / 10, "consensus converged on most cases");

  int delta_cases = 0;
  for (int i = 0; i < cases; ++i) {
    MeasurementModel m;
    const Index rows = 6 + static_cast<Index>(unit(rng) * 10), cols = 2 + static_cast<Index>(unit(rng) * 4);
    m.H = oracle::gaussian_matrix(rows, cols, rng);
    m.noise_variances = Vector::Ones(rows);
    const Vector dz = oracle::gaussian_vector(rows, rng);
    const double ls = (dz - m.H * linalg::min_norm_solve(m.H, dz)).squaredNorm();
    const double gamma = ls + unit(rng) * (dz.squaredNorm() - ls) + 1e-9;
    const DeltaResult d = delta_state_estimate(m, {Vector::Zero(cols), dz, gamma, 0.1}, SolverConfig{});
    expect(d.residual_sq <= gamma * (1.0 + 1e-6), "delta residual within gamma");
    expect((dz - m.H * d.delta).squaredNorm() <= gamma * (1.0 + 1e-6), "delta residual recomputed");
    ++delta_cases;
  }

  std::string detail = fmt("%d cases per suite (%d consensus converged, %d delta)", cases, consensus_cases,
                           delta_cases);
  for (const auto& f : failures) detail += "; violated: " + f;
  return {failures.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  bool strict = false;
  std::FILE* report = nullptr;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--strict") == 0) strict = true;
    if (std::strcmp(argv[i], "--report") == 0 && i + 1 < argc) report = std::fopen(argv[++i], "w");
  }
  auto emit = [&](const std::string& line) {
    std::fputs(line.c_str(), stdout);
    std::fflush(stdout);
    if (report) {
      std::fputs(line.c_str(), report);
      std::fflush(report);
    }
  };

  const struct {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  } criteria[] = {
      {1, "jacobian dimensions", 1.0, table_dimensions},
      {2, "solver oracle equivalence", 30.0, solver_oracle},
      {3, "consensus equals centralized", 10.0, consensus_centralized},
      {4, "strategic attacks pass the residual test", 60.0, unobservability},
      {5, "lambda_max zeroes the solution", 10.0, lambda_max_property},
      {6, "57-bus distributed detection precision", 600.0, figure1_precision},
      {7, "TLA construction probabilities", 600.0, figure2_tla},
      {8, "property suites", 60.0, property_suites},
  };

  int failed = 0, errors = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
      ++errors;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = out.pass && in_time;
    if (!pass) ++failed;
    emit(fmt("%s criterion %d: %s (%.2f s of %.0f s%s) ", pass ? "PASS" : "FAIL", c.id, c.name, secs, c.budget_s,
             in_time ? "" : ", over budget") +
         out.detail + "\n");
  }
  emit(fmt("acceptance: %d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed,
           std::size(criteria)));
  if (report) std::fclose(report);
  if (errors > 0) return 2;
  return strict && failed > 0 ? 1 : 0;
}

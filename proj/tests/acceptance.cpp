// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "tmee/config.hpp"
#include "tmee/harness.hpp"
#include "tmee/kernel.hpp"
#include "tmee/learners.hpp"
#include "tmee/noise.hpp"
#include "tmee/quantile.hpp"

namespace fs = std::filesystem;
using tmee::Algorithm;
using tmee::Bandwidth;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr std::uint64_t kSeed = 2025;
const fs::path kConfigs = TMEE_CONFIG_DIR;

struct Verdict {
  bool pass;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double normal_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * sd);
}

// --- 1 -------------------------------------------------------------------

Verdict identity_residuals() {
  struct Case {
    std::function<double(double)> pdf;
    double sigma;
    tmee::QuadratureGrid grid;
  };
  const std::vector<Case> cases{
      {[](double x) { return normal_pdf(x, 0.0, 1.0); }, 1.0, tmee::QuadratureGrid::covering(0.0, 1.0)},
      {[](double x) { return normal_pdf(x, 0.0, 5.0); }, 0.7, tmee::QuadratureGrid::covering(0.0, 5.0)},
      {[](double x) { return 0.5 * normal_pdf(x, -2.0, 0.5) + 0.5 * normal_pdf(x, 2.0, 0.5); }, 1.0,
       tmee::QuadratureGrid::covering(0.0, 2.5)},
  };
  double worst = 0.0;
  for (const auto& c : cases) {
    worst = std::max(worst, tmee::euclidean_gap_identity_residual(c.pdf, Bandwidth(c.sigma), c.grid));
  }
  return {worst <= 1e-6, "3 densities, max residual " + num(worst) + " (limit 1e-06)"};
}

// --- 2 -------------------------------------------------------------------

VectorXd central_difference(const std::function<double(const VectorXd&)>& f, const VectorXd& w) {
  constexpr double h = 1e-5;
  VectorXd g(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    VectorXd a = w, b = w;
    a(i) += h;
    b(i) -= h;
    g(i) = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

Verdict gradient_checks() {
  constexpr int dim = 5;
  constexpr int n = 10;
  tmee::Rng rng(kSeed);
  std::map<std::string, double> worst;
  for (int state = 0; state < 100; ++state) {
    VectorXd d(n);
    MatrixXd x(dim, n);
    VectorXd w(dim);
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < dim; ++i) x(i, k) = rng.normal();
      d(k) = rng.normal();
    }
    for (auto& v : w) v = 0.5 * rng.normal();
    const double sigma = 0.3 + 1.2 * rng.uniform();
    const Bandwidth bw(sigma);
    const auto errors = [&](const VectorXd& p) -> VectorXd { return d - x.transpose() * p; };
    const VectorXd e = errors(w);
    // The i = 0 term is G(0) for every w; leaving it in the differenced cost
    // buries small gradients under rounding noise.
    const auto single = [&](const VectorXd& ep) {
      double s = 0.0;
      for (int i = 1; i < n; ++i) s += tmee::gaussian_kernel(ep(0) - ep(i), bw);
      return s / n;
    };
    // Fences dropping the smallest and largest error of the window.
    std::vector<double> sorted(e.data(), e.data() + n);
    std::sort(sorted.begin(), sorted.end());
    const tmee::FenceBounds mask{0.5 * (sorted[0] + sorted[1]), 0.5 * (sorted[n - 2] + sorted[n - 1])};

    const auto record = [&](const std::string& name, const VectorXd& analytic,
                            const std::function<double(const VectorXd&)>& cost) {
      const VectorXd fd = central_difference(cost, w);
      const double rel = (analytic - fd).norm() / std::max(fd.norm(), 1e-12);
      worst[name] = std::max(worst[name], rel);
    };
    record("MCC", tmee::mcc_gradient(e(0), VectorXd(x.col(0)), bw),
           [&](const VectorXd& p) { return tmee::gaussian_kernel(errors(p)(0), bw); });
    record("MEE", tmee::mee_gradient<double>(e, x, bw, tmee::GradientForm::StochasticSingleSum).g,
           [&](const VectorXd& p) { return single(errors(p)); });
    record("MEE-batch", tmee::mee_gradient<double>(e, x, bw, tmee::GradientForm::BatchDoubleSum).g,
           [&](const VectorXd& p) { return tmee::information_potential(errors(p), bw); });
    record("MEEF", tmee::meef_gradient<double>(e, x, bw, 1), [&](const VectorXd& p) {
      const VectorXd ep = errors(p);
      return (n * single(ep) + tmee::gaussian_kernel(ep(0), bw)) / (n + 1.0);
    });
    record("Trimmed", tmee::mee_gradient<double>(e, x, bw, tmee::GradientForm::BatchDoubleSum, mask).g,
           [&](const VectorXd& p) {
             const VectorXd ep = errors(p);
             double s = 0.0;
             for (int i = 0; i < n; ++i) {
               for (int j = 0; j < n; ++j) {
                 if (tmee::is_outlier(e(i), mask) || tmee::is_outlier(e(j), mask)) continue;
                 s += tmee::gaussian_kernel(ep(i) - ep(j), bw);
               }
             }
             return s / (n * n);
           });
  }
  double overall = 0.0;
  std::string detail = "100 states, max relative error";
  for (const auto& [name, rel] : worst) {
    overall = std::max(overall, rel);
    detail += " " + name + "=" + num(rel);
  }
  return {overall <= 1e-5, detail + " (limit 1e-05)"};
}

// --- 3 -------------------------------------------------------------------

Verdict quartile_tracking() {
  const tmee::QuartileTrackerConfig cfg{100, 0.01, 0.1};
  tmee::Rng rng(tmee::derive_seed(kSeed, 0, tmee::SeedPurpose::Demo));
  tmee::QuartileTracker tracker(cfg);
  std::vector<double> sorted;
  std::size_t steps = 0, within = 0;
  double worst_gap = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const double e = rng.normal();
    tracker.observe(e);
    sorted.insert(std::upper_bound(sorted.begin(), sorted.end(), e), e);
    if (tracker.samples_seen() <= cfg.m) continue;
    const double q1 = tmee::sorted_quantile(sorted, 0.25);
    const double q3 = tmee::sorted_quantile(sorted, 0.75);
    const double g1 = std::abs(tracker.q1() - q1);
    const double g3 = std::abs(tracker.q3() - q3);
    worst_gap = std::max({worst_gap, g1, g3});
    const bool ok = g1 <= std::max(2 * cfg.epsilon, 0.05 * std::abs(q1)) &&
                    g3 <= std::max(2 * cfg.epsilon, 0.05 * std::abs(q3));
    ++steps;
    within += ok ? 1 : 0;
  }
  const double frac = static_cast<double>(within) / static_cast<double>(steps);
  return {frac >= 0.95, "standard normal, " + num(100 * frac) + "% of " + std::to_string(steps) +
                            " steps within tolerance (need >= 95%), max gap " + num(worst_gap)};
}

// --- 4, 5 ----------------------------------------------------------------

const tmee::MixtureNoise kImpulsive{{{0.9, 0.0, 1e-8}, {0.1, 0.0, 100.0}}};

Verdict flagged_fraction() {
  double lo = 1.0, hi = 0.0;
  bool ok = true;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto r = tmee::trimmed_running_mean_demo(kImpulsive, 10000, tmee::derive_seed(kSeed, s, tmee::SeedPurpose::Demo));
    const double frac = static_cast<double>(std::count(r.flagged.begin(), r.flagged.end(), 1)) / 10000.0;
    lo = std::min(lo, frac);
    hi = std::max(hi, frac);
    ok = ok && frac >= 0.08 && frac <= 0.12;
  }
  return {ok, "impulsive mixture, 10 seeds, flagged fraction in [" + num(lo) + ", " + num(hi) +
                  "] (need within [0.08, 0.12])"};
}

Verdict trimmed_mean() {
  int wins = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto r = tmee::trimmed_running_mean_demo(kImpulsive, 10000, tmee::derive_seed(kSeed, s, tmee::SeedPurpose::Demo));
    double plain = 0.0, trimmed = 0.0;
    for (std::size_t k = 5000; k < 10000; ++k) {
      plain += std::abs(r.plain[k]);
      trimmed += std::abs(r.trimmed[k]);
    }
    wins += trimmed < plain ? 1 : 0;
  }
  return {wins >= 9, "trimmed running mean closer to 0 on " + std::to_string(wins) + " of 10 seeds (need >= 9)"};
}

// --- 6, 7, 8 -------------------------------------------------------------

std::map<Algorithm, tmee::Aggregate> monte_carlo_from(const std::string& config_name, std::size_t trials) {
  const auto cfg = tmee::load_config(kConfigs / config_name);
  std::map<Algorithm, tmee::Aggregate> out;
  for (Algorithm a : cfg.algorithms) out[a] = tmee::monte_carlo(cfg.trial_for(a), trials, cfg.seed, cfg.workers);
  return out;
}

double mae(const std::map<Algorithm, tmee::Aggregate>& r, Algorithm a) { return *r.at(a).mae_mean; }

Verdict gaussian_row() {
  const auto r = monte_carlo_from("trimmed_gaussian_30db.json", 50);
  const double a = mae(r, Algorithm::Mee), b = mae(r, Algorithm::Meef), c = mae(r, Algorithm::TrimmedMee);
  const double lo = std::min({a, b, c}), hi = std::max({a, b, c});
  const bool in_band = lo >= 0.021 && hi <= 0.031;
  const bool agree = hi <= 1.1 * lo;
  return {in_band && agree, "gaussian 30 dB, 50 trials, MAE MEE=" + num(a) + " MEEF=" + num(b) + " Trimmed=" +
                                num(c) + " (need each in [0.021, 0.031], max/min <= 1.1)"};
}

Verdict impulsive_orderings() {
  const auto sym = monte_carlo_from("trimmed_impulsive_symmetric.json", 50);
  const auto off = monte_carlo_from("trimmed_impulsive_offset.json", 50);
  const auto asym = monte_carlo_from("trimmed_impulsive_asymmetric.json", 50);
  const auto t = Algorithm::TrimmedMee, m = Algorithm::Mee, f = Algorithm::Meef;
  const bool sym_ok = mae(sym, t) <= mae(sym, f) && mae(sym, f) <= mae(sym, m);
  const bool off_ok = mae(off, t) < mae(off, m);
  const bool asym_ok = mae(asym, t) < mae(asym, m) && mae(asym, m) < mae(asym, f);
  const auto row = [&](const char* name, const std::map<Algorithm, tmee::Aggregate>& r, bool ok) {
    return std::string(name) + " MEE/MEEF/Trimmed=" + num(mae(r, m)) + "/" + num(mae(r, f)) + "/" +
           num(mae(r, t)) + (ok ? " ok" : " VIOLATED");
  };
  return {sym_ok && off_ok && asym_ok,
          "50 trials; " + row("symmetric (Trimmed<=MEEF<=MEE)", sym, sym_ok) + "; " +
              row("offset (Trimmed<MEE)", off, off_ok) + "; " +
              row("asymmetric (Trimmed<MEE<MEEF)", asym, asym_ok)};
}

Verdict exponential_meef() {
  const auto r = monte_carlo_from("baselines_exponential_50db.json", 50);
  const double mee = r.at(Algorithm::Mee).mean_curve.steady_state_db;
  const double meef = r.at(Algorithm::Meef).mean_curve.steady_state_db;
  return {meef > mee, "exponential 50 dB, 50 trials, steady state MEE=" + num(mee) + " dB MEEF=" + num(meef) +
                          " dB (need MEEF > MEE)"};
}

// --- 9 -------------------------------------------------------------------

Verdict degeneracy() {
  tmee::LearnerConfig trimmed_cfg;
  trimmed_cfg.fence_override = tmee::FenceBounds::unbounded();
  tmee::LearnerConfig mee_cfg;
  mee_cfg.gradient_form = tmee::GradientForm::BatchDoubleSum;
  std::size_t mismatches = 0;
  std::size_t steps = 0;
  for (std::uint64_t trial = 0; trial < 3; ++trial) {
    const VectorXd w_opt = tmee::random_unit_vector(5, tmee::derive_seed(kSeed, trial, tmee::SeedPurpose::TargetWeights));
    const tmee::MixtureNoise noise{{{0.9, -5.0, 1e-3}, {0.1, 10.0, 1000.0}}};
    const auto samples =
        tmee::generate_stream({w_opt, noise, tmee::derive_seed(kSeed, trial, tmee::SeedPurpose::Training)}, 2000);
    tmee::OnlineLearner<double> a(Algorithm::TrimmedMee, trimmed_cfg, 5);
    tmee::OnlineLearner<double> b(Algorithm::Mee, mee_cfg, 5);
    for (const auto& s : samples) {
      a.step(s);
      b.step(s);
      ++steps;
      if (a.weights() != b.weights() || a.bias() != b.bias()) ++mismatches;
    }
  }
  return {mismatches == 0, std::to_string(steps) + " steps over 3 streams, " + std::to_string(mismatches) +
                               " steps with any bit difference in weights or bias"};
}

// --- 10 ------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + TMEE_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Verdict determinism() {
  struct Job {
    std::string command;
    std::string config;
    std::string extra;
    std::vector<std::string> files;
  };
  const std::vector<Job> jobs{
      {"run", "trimmed_impulsive_asymmetric.json", "--trials 8", {"curves.csv", "summary.json"}},
      {"sweep", "sweep_exponential_50db.json", "--trials 1", {"sweep.csv"}},
      {"quantile-demo", "outliers_impulsive.json", "", {"quartiles.csv", "outliers.csv", "means.csv"}},
  };
  const fs::path scratch = TMEE_SCRATCH_DIR;
  std::size_t compared = 0;
  std::string failures;
  for (const auto& job : jobs) {
    std::string outputs[2];
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path out = scratch / (job.command + "_" + std::to_string(rep));
      fs::remove_all(out);
      const int code = run_cli(job.command + " --config \"" + (kConfigs / job.config).string() + "\" --out \"" +
                               out.string() + "\" --seed 17 " + job.extra);
      if (code != 0) failures += " " + job.command + " exited " + std::to_string(code);
      for (const auto& f : job.files) outputs[rep] += slurp(out / f) + '\x1e';
    }
    compared += job.files.size();
    if (outputs[0] != outputs[1] || outputs[0].size() <= job.files.size()) failures += " " + job.command + " differs";
  }
  return {failures.empty(), std::to_string(compared) + " output files from run, sweep and quantile-demo compared" +
                                (failures.empty() ? ", all byte-identical" : ";" + failures)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"euclidean gap identity", identity_residuals},
      {"analytic gradients vs central differences", gradient_checks},
      {"quartile tracker vs sorting oracle", quartile_tracking},
      {"impulsive noise fence flagging", flagged_fraction},
      {"trimmed running mean", trimmed_mean},
      {"testing MAE under gaussian noise", gaussian_row},
      {"testing MAE orderings under impulsive noise", impulsive_orderings},
      {"MEEF degradation under exponential noise", exponential_meef},
      {"unbounded trimmed MEE equals batch MEE", degeneracy},
      {"CLI determinism", determinism},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += v.pass ? 0 : 1;
    std::printf("%s  criterion %2zu  %s: %s [%.2f s]\n", v.pass ? "PASS" : "FAIL", k + 1,
                criteria[k].first.c_str(), v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%zu of %zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

#include "tmee/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"
#include "tmee/config.hpp"
#include "tmee/error.hpp"

namespace tmee {

namespace {

using ordered_json = nlohmann::ordered_json;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// Nine significant digits, stored back as a double so the JSON writer emits
// the short form.
ordered_json rounded(double v) {
  if (!std::isfinite(v)) return nullptr;
  return std::strtod(fmt(v).c_str(), nullptr);
}

ordered_json rounded(const std::optional<double>& v) { return v ? rounded(*v) : nullptr; }

std::string one_based(const std::optional<std::size_t>& n) {
  return n ? std::to_string(*n + 1) : std::string();
}

struct Setup {
  ExperimentConfig config;
  std::filesystem::path out_dir;
};

Setup prepare(const CommandOptions& options) {
  Setup s{load_config(options.config), {}};
  if (options.seed) s.config.seed = *options.seed;
  if (options.trials) {
    if (*options.trials == 0) throw ConfigError("trials", 0, "--trials must be >= 1");
    s.config.trials = *options.trials;
  }
  if (options.workers) s.config.workers = *options.workers;
  s.out_dir = options.out ? *options.out : s.config.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(s.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + s.out_dir.string() + ": " + ec.message());
  return s;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << contents;
  f.close();
  if (!f) throw IoError("failed writing " + path.string());
}

template <typename Body>
int guarded(std::ostream& err, Body body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_code::config_error;
  } catch (const DomainError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_code::config_error;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return exit_code::numeric_failure;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return exit_code::io_failure;
  }
}

std::vector<double> read_error_stream(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("demo.error_stream", 0, "cannot read " + path.string());
  std::vector<double> values;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    char* end = nullptr;
    const double v = std::strtod(line.c_str() + first, &end);
    const bool trailing = end && line.find_first_not_of(" \t\r", static_cast<std::size_t>(end - line.c_str())) != std::string::npos;
    if (end == line.c_str() + first || trailing || !std::isfinite(v)) {
      throw ConfigError("demo.error_stream", 0,
                        path.string() + " line " + std::to_string(number) + ": not a finite number");
    }
    values.push_back(v);
  }
  if (values.empty()) throw ConfigError("demo.error_stream", 0, path.string() + " holds no values");
  return values;
}

}  // namespace

int cmd_run(const CommandOptions& options, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const Setup s = prepare(options);
    const auto& cfg = s.config;

    std::vector<Aggregate> aggregates;
    for (Algorithm algo : cfg.algorithms) {
      log << "running " << to_string(algo) << " (" << cfg.trials << " trials)\n";
      aggregates.push_back(monte_carlo(cfg.trial_for(algo), cfg.trials, cfg.seed, cfg.workers));
    }

    std::string csv = "iteration";
    for (Algorithm algo : cfg.algorithms) csv += "," + std::string(to_string(algo));
    csv += '\n';
    for (std::size_t n = 0; n < cfg.iterations; ++n) {
      csv += std::to_string(n + 1);
      for (const auto& agg : aggregates) csv += "," + fmt(agg.mean_curve.misalignment_db[n]);
      csv += '\n';
    }

    ordered_json summary;
    summary["seed"] = cfg.seed;
    summary["trials"] = cfg.trials;
    summary["results"] = ordered_json::array();
    for (std::size_t k = 0; k < aggregates.size(); ++k) {
      const auto& agg = aggregates[k];
      ordered_json r;
      r["algorithm"] = to_string(cfg.algorithms[k]);
      r["steady_state_db"] = rounded(agg.mean_curve.steady_state_db);
      r["convergence_iteration"] =
          agg.mean_curve.convergence_iteration
              ? ordered_json(*agg.mean_curve.convergence_iteration + 1)
              : ordered_json(nullptr);
      r["mae_mean"] = rounded(agg.mae_mean);
      r["mae_std"] = rounded(agg.mae_std);
      r["trials_used"] = agg.used;
      r["diverged"] = agg.diverged;
      r["diagnostics"] = {
          {"outlier_steps", agg.diagnostics.outlier_steps},
          {"empty_mask_steps", agg.diagnostics.empty_mask_steps},
          {"recalibrations", agg.diagnostics.recalibrations},
          {"median_fallback", agg.diagnostics.median_fallback},
      };
      summary["results"].push_back(std::move(r));
    }

    write_file(s.out_dir / "curves.csv", csv);
    write_file(s.out_dir / "summary.json", summary.dump(2) + "\n");
    log << "wrote " << (s.out_dir / "curves.csv").string() << " and "
        << (s.out_dir / "summary.json").string() << '\n';
    return exit_code::ok;
  });
}

int cmd_sweep(const CommandOptions& options, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const Setup s = prepare(options);
    const auto& cfg = s.config;
    if (!cfg.sweep) throw ConfigError("sweep", 0, "sweep needs a 'sweep' grid");
    const auto cells = cfg.sweep->cells();

    std::string csv = "mu,sigma,algorithm,steady_state_db,convergence_iteration,diverged\n";
    std::size_t diverged = 0;
    for (Algorithm algo : cfg.algorithms) {
      log << "sweeping " << to_string(algo) << " over " << cells.size() << " cells\n";
      for (const auto& p : sweep(cells, cfg.trial_for(algo), cfg.trials, cfg.seed, cfg.workers)) {
        diverged += p.diverged ? 1 : 0;
        csv += fmt(p.mu) + "," + fmt(p.sigma) + "," + std::string(to_string(algo)) + "," +
               (p.diverged ? std::string() : fmt(p.steady_state_db)) + "," +
               one_based(p.convergence_iteration) + "," + (p.diverged ? "1" : "0") + "\n";
      }
    }
    write_file(s.out_dir / "sweep.csv", csv);
    log << "wrote " << (s.out_dir / "sweep.csv").string() << '\n';
    if (diverged == cells.size() * cfg.algorithms.size()) {
      err << "numeric failure: every sweep cell diverged\n";
      return exit_code::numeric_failure;
    }
    return exit_code::ok;
  });
}

int cmd_quantile_demo(const CommandOptions& options, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const Setup s = prepare(options);
    const auto& cfg = s.config;
    const DemoConfig demo = cfg.demo.value_or(DemoConfig{});
    const auto& qcfg = cfg.learner.quantile;
    qcfg.validate();

    std::string quartiles =
        "step,q1,q3,exact_q1,exact_q3,lower_extreme,upper_extreme,recalibrated\n";
    std::vector<double> sorted;
    const auto observer = [&](std::size_t k, const QuartileTracker& t, const ObserveOutcome& o) {
      quartiles += std::to_string(k + 1) + ",";
      if (t.has_quartiles()) {
        quartiles += fmt(t.q1()) + "," + fmt(t.q3()) + ",";
      } else {
        quartiles += ",,";
      }
      if (sorted.size() >= 4) {
        quartiles += fmt(sorted_quantile(sorted, 0.25)) + "," + fmt(sorted_quantile(sorted, 0.75)) + ",";
      } else {
        quartiles += ",,";
      }
      const FenceBounds f = t.current_fences();
      quartiles += fmt(f.lower_extreme) + "," + fmt(f.upper_extreme) + "," +
                   (o.recalibrated ? "1" : "0") + "\n";
    };

    std::vector<double> values;
    if (demo.error_stream) {
      values = read_error_stream(*demo.error_stream);
    } else {
      validate(cfg.noise);
      Rng rng(derive_seed(cfg.seed, 0, SeedPurpose::Demo));
      values.resize(demo.samples);
      for (auto& v : values) v = draw_noise(cfg.noise, rng);
    }
    // The oracle runs one sample ahead of the observer callback.
    std::size_t fed = 0;
    const auto oracle_observer = [&](std::size_t k, const QuartileTracker& t,
                                     const ObserveOutcome& o) {
      for (; fed <= k; ++fed) {
        sorted.insert(std::upper_bound(sorted.begin(), sorted.end(), values[fed]), values[fed]);
      }
      observer(k, t, o);
    };
    const RunningMeans means = trimmed_running_means(values, qcfg, oracle_observer);

    std::string outliers = "step,value,flagged\n";
    std::string mean_csv = "step,plain_mean,trimmed_mean\n";
    std::size_t flagged = 0;
    for (std::size_t k = 0; k < values.size(); ++k) {
      flagged += means.flagged[k] ? 1 : 0;
      outliers += std::to_string(k + 1) + "," + fmt(values[k]) + "," + (means.flagged[k] ? "1" : "0") + "\n";
      mean_csv += std::to_string(k + 1) + "," + fmt(means.plain[k]) + "," + fmt(means.trimmed[k]) + "\n";
    }

    write_file(s.out_dir / "quartiles.csv", quartiles);
    write_file(s.out_dir / "outliers.csv", outliers);
    write_file(s.out_dir / "means.csv", mean_csv);
    log << "flagged " << flagged << " of " << values.size() << " samples; wrote quartiles.csv, "
        << "outliers.csv and means.csv to " << s.out_dir.string() << '\n';
    return exit_code::ok;
  });
}

}  // namespace tmee

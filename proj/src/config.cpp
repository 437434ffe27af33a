#include "tmee/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"
#include "tmee/error.hpp"

namespace tmee {

using nlohmann::json;

namespace {

using KeyPath = std::vector<std::string>;

std::string dotted(const KeyPath& path) {
  std::string out;
  for (const auto& part : path) {
    if (!out.empty() && part.front() != '[') out += '.';
    out += part;
  }
  return out;
}

int line_at(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

// Locates `"key"` followed by a colon for each named component in turn.
int locate(std::string_view text, const KeyPath& path) {
  std::size_t pos = 0;
  bool found = false;
  for (const auto& part : path) {
    if (part.front() == '[') continue;
    const std::string quoted = "\"" + part + "\"";
    std::size_t at = pos;
    for (;;) {
      at = text.find(quoted, at);
      if (at == std::string_view::npos) return found ? line_at(text, pos) : 0;
      std::size_t after = at + quoted.size();
      while (after < text.size() && std::isspace(static_cast<unsigned char>(text[after]))) ++after;
      if (after < text.size() && text[after] == ':') break;
      at += quoted.size();
    }
    pos = at;
    found = true;
  }
  return found ? line_at(text, pos) : 0;
}

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  [[noreturn]] void fail(const KeyPath& path, const std::string& message) const {
    throw ConfigError(dotted(path), locate(text_, path), message);
  }

  const json& object(const json& j, const KeyPath& path,
                     std::initializer_list<std::string_view> allowed) const {
    if (!j.is_object()) fail(path, "expected an object");
    for (const auto& [key, value] : j.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        KeyPath p = path;
        p.push_back(key);
        fail(p, "unknown key");
      }
    }
    return j;
  }

  double number(const json& j, const KeyPath& path) const {
    if (!j.is_number()) fail(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(path, "expected a finite number");
    return v;
  }

  std::uint64_t unsigned_int(const json& j, const KeyPath& path) const {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer() && j.get<std::int64_t>() >= 0) {
      return static_cast<std::uint64_t>(j.get<std::int64_t>());
    }
    fail(path, "expected a non-negative integer");
  }

  std::string string(const json& j, const KeyPath& path) const {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
  }

  // Optional member helpers: leave `out` untouched when the key is absent.
  template <typename T, typename Get>
  void optional(const json& obj, const KeyPath& path, const char* key, T& out, Get get) const {
    if (!obj.contains(key)) return;
    KeyPath p = path;
    p.emplace_back(key);
    out = get(obj.at(key), p);
  }

  void number_at(const json& obj, const KeyPath& path, const char* key, double& out) const {
    optional(obj, path, key, out, [this](const json& j, const KeyPath& p) { return number(j, p); });
  }

  void size_at(const json& obj, const KeyPath& path, const char* key, std::size_t& out) const {
    optional(obj, path, key, out, [this](const json& j, const KeyPath& p) {
      return static_cast<std::size_t>(unsigned_int(j, p));
    });
  }

  std::vector<double> axis(const json& j, const KeyPath& path) const {
    std::vector<double> out;
    if (j.is_array()) {
      for (std::size_t k = 0; k < j.size(); ++k) {
        KeyPath p = path;
        p.push_back("[" + std::to_string(k) + "]");
        out.push_back(number(j[k], p));
      }
    } else {
      object(j, path, {"start", "stop", "step"});
      for (const char* key : {"start", "stop", "step"}) {
        if (!j.contains(key)) fail(path, std::string("range needs '") + key + "'");
      }
      double start = 0, stop = 0, step = 0;
      number_at(j, path, "start", start);
      number_at(j, path, "stop", stop);
      number_at(j, path, "step", step);
      if (!(step > 0.0) || stop < start) fail(path, "range needs step > 0 and stop >= start");
      const auto count = static_cast<std::size_t>(std::llround((stop - start) / step)) + 1;
      for (std::size_t k = 0; k < count; ++k) out.push_back(start + step * static_cast<double>(k));
    }
    if (out.empty()) fail(path, "grid axis must be non-empty");
    return out;
  }

  NoiseSpec noise(const json& j, const KeyPath& path) const {
    if (!j.is_object() || !j.contains("kind")) fail(path, "noise needs a 'kind'");
    KeyPath kind_path = path;
    kind_path.emplace_back("kind");
    const std::string kind = string(j.at("kind"), kind_path);
    if (kind == "gaussian") {
      object(j, path, {"kind", "mean", "variance", "snr_db"});
      GaussianNoise g;
      number_at(j, path, "mean", g.mean);
      if (j.contains("variance") == j.contains("snr_db")) {
        fail(path, "gaussian noise needs exactly one of 'variance' or 'snr_db'");
      }
      if (j.contains("snr_db")) {
        double snr = 0;
        number_at(j, path, "snr_db", snr);
        g.variance = std::pow(10.0, -snr / 10.0);
      }
      number_at(j, path, "variance", g.variance);
      if (g.variance < 0.0) fail(with(path, "variance"), "variance must be >= 0");
      return g;
    }
    if (kind == "exponential") {
      object(j, path, {"kind", "lambda", "snr_db"});
      if (j.contains("lambda") == j.contains("snr_db")) {
        fail(path, "exponential noise needs exactly one of 'lambda' or 'snr_db'");
      }
      ExponentialNoise e;
      if (j.contains("snr_db")) {
        double snr = 0;
        number_at(j, path, "snr_db", snr);
        e.lambda = lambda_from_snr(snr, 1.0);
      }
      number_at(j, path, "lambda", e.lambda);
      if (!(e.lambda > 0.0)) fail(with(path, "lambda"), "lambda must be > 0");
      return e;
    }
    if (kind == "mixture") {
      object(j, path, {"kind", "components"});
      const KeyPath cpath = with(path, "components");
      if (!j.contains("components") || !j.at("components").is_array() ||
          j.at("components").empty()) {
        fail(cpath, "mixture needs a non-empty 'components' array");
      }
      MixtureNoise m;
      double total = 0.0;
      const json& comps = j.at("components");
      for (std::size_t k = 0; k < comps.size(); ++k) {
        KeyPath p = cpath;
        p.push_back("[" + std::to_string(k) + "]");
        object(comps[k], p, {"weight", "mean", "variance"});
        for (const char* key : {"weight", "mean", "variance"}) {
          if (!comps[k].contains(key)) fail(p, std::string("component needs '") + key + "'");
        }
        MixtureComponent c;
        number_at(comps[k], p, "weight", c.weight);
        number_at(comps[k], p, "mean", c.mean);
        number_at(comps[k], p, "variance", c.variance);
        if (!(c.weight > 0.0)) fail(with(p, "weight"), "weight must be > 0");
        if (c.variance < 0.0) fail(with(p, "variance"), "variance must be >= 0");
        total += c.weight;
        m.components.push_back(c);
      }
      if (std::abs(total - 1.0) > 1e-12) fail(cpath, "mixture weights must sum to 1");
      return m;
    }
    fail(kind_path, "unknown noise kind '" + kind + "'");
  }

  static KeyPath with(KeyPath path, const std::string& key) {
    path.push_back(key);
    return path;
  }

 private:
  std::string_view text_;
};

}  // namespace

std::vector<std::pair<double, double>> SweepGrid::cells() const {
  std::vector<std::pair<double, double>> out;
  out.reserve(mu.size() * sigma.size());
  for (double m : mu) {
    for (double s : sigma) out.emplace_back(m, s);
  }
  return out;
}

TrialConfig ExperimentConfig::trial_for(Algorithm algo) const {
  TrialConfig t;
  t.algorithm = algo;
  t.learner = learner;
  t.filter_length = filter_length;
  t.noise = noise;
  t.iterations = iterations;
  t.test_samples = test_samples;
  t.tail_window = tail_window;
  return t;
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError("", line_at(text, e.byte == 0 ? 0 : e.byte - 1),
                      std::string("malformed JSON: ") + e.what());
  }

  const Reader r(text);
  const KeyPath root{};
  r.object(doc, root,
           {"seed", "workers", "output_dir", "algorithms", "learner", "quantile", "stream",
            "trial", "sweep", "demo"});

  ExperimentConfig cfg;
  r.optional(doc, root, "seed", cfg.seed,
             [&](const json& j, const KeyPath& p) { return r.unsigned_int(j, p); });
  r.size_at(doc, root, "workers", cfg.workers);
  if (doc.contains("output_dir")) {
    cfg.output_dir = r.string(doc.at("output_dir"), {"output_dir"});
  }

  if (doc.contains("algorithms")) {
    const json& algos = doc.at("algorithms");
    if (!algos.is_array() || algos.empty()) r.fail({"algorithms"}, "expected a non-empty array");
    cfg.algorithms.clear();
    for (std::size_t k = 0; k < algos.size(); ++k) {
      const KeyPath p{"algorithms", "[" + std::to_string(k) + "]"};
      const std::string name = r.string(algos[k], p);
      const auto algo = parse_algorithm(name);
      if (!algo) r.fail(p, "unknown algorithm '" + name + "'");
      if (std::find(cfg.algorithms.begin(), cfg.algorithms.end(), *algo) != cfg.algorithms.end()) {
        r.fail(p, "duplicate algorithm '" + name + "'");
      }
      cfg.algorithms.push_back(*algo);
    }
  }

  if (doc.contains("learner")) {
    const KeyPath p{"learner"};
    const json& j = r.object(doc.at("learner"), p, {"mu", "sigma", "window", "fiducial", "gradient_form"});
    r.number_at(j, p, "mu", cfg.learner.mu);
    r.number_at(j, p, "sigma", cfg.learner.sigma);
    r.size_at(j, p, "window", cfg.learner.window);
    r.size_at(j, p, "fiducial", cfg.learner.fiducial);
    if (j.contains("gradient_form")) {
      const KeyPath gp{"learner", "gradient_form"};
      const std::string name = r.string(j.at("gradient_form"), gp);
      cfg.learner.gradient_form = parse_gradient_form(name);
      if (!cfg.learner.gradient_form) r.fail(gp, "unknown gradient form '" + name + "'");
    }
  }
  if (!(cfg.learner.mu > 0.0)) r.fail({"learner", "mu"}, "mu must be > 0");
  if (!(cfg.learner.sigma > 0.0)) r.fail({"learner", "sigma"}, "sigma must be > 0");
  if (cfg.learner.window < 1) r.fail({"learner", "window"}, "window must be >= 1");

  if (doc.contains("quantile")) {
    const KeyPath p{"quantile"};
    const json& j = r.object(doc.at("quantile"), p, {"m", "epsilon", "beta"});
    r.size_at(j, p, "m", cfg.learner.quantile.m);
    r.number_at(j, p, "epsilon", cfg.learner.quantile.epsilon);
    r.number_at(j, p, "beta", cfg.learner.quantile.beta);
  }
  const auto& q = cfg.learner.quantile;
  if (q.m < 4) r.fail({"quantile", "m"}, "m must be >= 4");
  if (!(q.epsilon > 0.0)) r.fail({"quantile", "epsilon"}, "epsilon must be > 0");
  if (!(q.beta > 0.0 && q.beta < 0.2)) r.fail({"quantile", "beta"}, "beta must lie in (0, 0.2)");

  if (doc.contains("stream")) {
    const KeyPath p{"stream"};
    const json& j = r.object(doc.at("stream"), p, {"filter_length", "noise"});
    r.size_at(j, p, "filter_length", cfg.filter_length);
    if (j.contains("noise")) cfg.noise = r.noise(j.at("noise"), {"stream", "noise"});
  }
  if (cfg.filter_length < 1) r.fail({"stream", "filter_length"}, "filter_length must be >= 1");

  if (doc.contains("trial")) {
    const KeyPath p{"trial"};
    const json& j = r.object(doc.at("trial"), p, {"iterations", "test_samples", "tail_window", "trials"});
    r.size_at(j, p, "iterations", cfg.iterations);
    r.size_at(j, p, "test_samples", cfg.test_samples);
    r.size_at(j, p, "tail_window", cfg.tail_window);
    r.size_at(j, p, "trials", cfg.trials);
  }
  if (cfg.tail_window < 1) r.fail({"trial", "tail_window"}, "tail_window must be >= 1");
  if (cfg.iterations <= cfg.tail_window) {
    r.fail({"trial", "iterations"}, "iterations must exceed tail_window");
  }
  if (cfg.trials < 1) r.fail({"trial", "trials"}, "trials must be >= 1");

  if (doc.contains("sweep")) {
    const KeyPath p{"sweep"};
    const json& j = r.object(doc.at("sweep"), p, {"mu", "sigma"});
    if (!j.contains("mu") || !j.contains("sigma")) r.fail(p, "sweep needs 'mu' and 'sigma'");
    SweepGrid grid;
    grid.mu = r.axis(j.at("mu"), {"sweep", "mu"});
    grid.sigma = r.axis(j.at("sigma"), {"sweep", "sigma"});
    for (std::size_t k = 0; k < grid.mu.size(); ++k) {
      if (!(grid.mu[k] > 0.0)) r.fail({"sweep", "mu"}, "grid values must be > 0");
    }
    for (std::size_t k = 0; k < grid.sigma.size(); ++k) {
      if (!(grid.sigma[k] > 0.0)) r.fail({"sweep", "sigma"}, "grid values must be > 0");
    }
    cfg.sweep = std::move(grid);
  }

  if (doc.contains("demo")) {
    const KeyPath p{"demo"};
    const json& j = r.object(doc.at("demo"), p, {"samples", "error_stream"});
    DemoConfig demo;
    r.size_at(j, p, "samples", demo.samples);
    if (j.contains("error_stream")) {
      demo.error_stream = base_dir / r.string(j.at("error_stream"), {"demo", "error_stream"});
    } else if (demo.samples < q.m) {
      r.fail({"demo", "samples"}, "samples must cover the quantile warm-up m");
    }
    cfg.demo = std::move(demo);
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", 0, "cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path().empty() ? "." : path.parent_path());
}

}  // namespace tmee

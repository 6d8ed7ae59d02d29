#pragma once

// Command-line front end. Kept in a header so the golden-file tests can drive
// it in-process with captured streams.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fracstab/fracstab.hpp"

namespace fracstab::cli {

using nlohmann::json;

enum Exit : int { Ok = 0, BadConfig = 1, Domain = 2, Accuracy = 3 };

/// A configuration problem, tagged with the dotted name of the field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& why)
      : std::runtime_error(field + ": " + why), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct RunConfig {
  std::string command;
  std::optional<int> n;
  std::optional<double> s;
  // regimes
  int n_min = 2, n_max = 12;
  // constant-a
  std::optional<double> beta;
  std::uint64_t seed = 42;
  std::uint64_t samples = 1'000'000;
  // extend
  std::string trace = "bump";
  std::vector<double> rho = {0.0, 0.25, 0.5, 0.75, 0.9, 1.5, 2.5};
  std::vector<double> y = {0.01, 0.1, 1.0};
  // solve-branch
  std::string nonlinearity = "exp";
  double power = 2.0;
  int cells = 80;
  double max_lambda = 100.0;
  bool states = false;
  // verify
  std::string tier = "fast";
  std::vector<std::string> faults;
  // output
  std::string output;
  std::string format;
};

inline const std::set<std::string>& commands() {
  static const std::set<std::string> c = {"regimes", "constant-a", "extend", "solve-branch", "verify"};
  return c;
}

// ---------------------------------------------------------------------------
// Config file

namespace detail {

inline void only_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError(where.empty() ? it.key() : where + "." + it.key(), "unknown field");
}

inline const json* member(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

inline const json& object(const json& v, const std::string& field) {
  if (!v.is_object()) throw ConfigError(field, "expected an object");
  return v;
}

inline int as_int(const json& v, const std::string& field) {
  if (!v.is_number_integer()) throw ConfigError(field, "expected an integer");
  const auto x = v.get<std::int64_t>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
    throw ConfigError(field, "integer out of range");
  return static_cast<int>(x);
}

inline std::uint64_t as_u64(const json& v, const std::string& field) {
  if (!v.is_number_unsigned()) throw ConfigError(field, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

inline double as_double(const json& v, const std::string& field) {
  if (!v.is_number()) throw ConfigError(field, "expected a number");
  return v.get<double>();
}

inline std::string as_string(const json& v, const std::string& field) {
  if (!v.is_string()) throw ConfigError(field, "expected a string");
  return v.get<std::string>();
}

inline std::vector<double> as_doubles(const json& v, const std::string& field) {
  if (!v.is_array()) throw ConfigError(field, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_double(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace detail

/// Reads a JSON document mirroring RunConfig into `cfg`.
inline void load_config(const std::string& path, RunConfig& cfg) {
  using namespace detail;
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("not valid JSON: ") + e.what());
  }
  object(doc, "config");
  only_keys(doc, "", {"command", "params", "nonlinearity", "grid", "trace", "beta", "seed", "samples", "tier",
                      "inject_fault", "output"});
  if (auto v = member(doc, "command")) cfg.command = as_string(*v, "command");
  if (auto v = member(doc, "params")) {
    only_keys(object(*v, "params"), "params", {"n", "s"});
    if (auto x = member(*v, "n")) cfg.n = as_int(*x, "params.n");
    if (auto x = member(*v, "s")) cfg.s = as_double(*x, "params.s");
  }
  if (auto v = member(doc, "nonlinearity")) {
    only_keys(object(*v, "nonlinearity"), "nonlinearity", {"name", "p"});
    if (auto x = member(*v, "name")) cfg.nonlinearity = as_string(*x, "nonlinearity.name");
    if (auto x = member(*v, "p")) cfg.power = as_double(*x, "nonlinearity.p");
  }
  if (auto v = member(doc, "grid")) {
    only_keys(object(*v, "grid"), "grid", {"cells", "max_lambda", "n_min", "n_max", "rho", "y"});
    if (auto x = member(*v, "cells")) cfg.cells = as_int(*x, "grid.cells");
    if (auto x = member(*v, "max_lambda")) cfg.max_lambda = as_double(*x, "grid.max_lambda");
    if (auto x = member(*v, "n_min")) cfg.n_min = as_int(*x, "grid.n_min");
    if (auto x = member(*v, "n_max")) cfg.n_max = as_int(*x, "grid.n_max");
    if (auto x = member(*v, "rho")) cfg.rho = as_doubles(*x, "grid.rho");
    if (auto x = member(*v, "y")) cfg.y = as_doubles(*x, "grid.y");
  }
  if (auto v = member(doc, "trace")) cfg.trace = as_string(*v, "trace");
  if (auto v = member(doc, "beta")) cfg.beta = as_double(*v, "beta");
  if (auto v = member(doc, "seed")) cfg.seed = as_u64(*v, "seed");
  if (auto v = member(doc, "samples")) cfg.samples = as_u64(*v, "samples");
  if (auto v = member(doc, "tier")) cfg.tier = as_string(*v, "tier");
  if (auto v = member(doc, "inject_fault")) {
    if (!v->is_array()) throw ConfigError("inject_fault", "expected an array of strings");
    cfg.faults.clear();
    for (std::size_t i = 0; i < v->size(); ++i)
      cfg.faults.push_back(as_string((*v)[i], "inject_fault[" + std::to_string(i) + "]"));
  }
  if (auto v = member(doc, "output")) {
    only_keys(object(*v, "output"), "output", {"path", "format", "states"});
    if (auto x = member(*v, "path")) cfg.output = as_string(*x, "output.path");
    if (auto x = member(*v, "format")) cfg.format = as_string(*x, "output.format");
    if (auto x = member(*v, "states")) {
      if (!x->is_boolean()) throw ConfigError("output.states", "expected true or false");
      cfg.states = x->get<bool>();
    }
  }
}

/// Checks every field the command needs; throws ConfigError naming the first
/// offending one. Fills in the output format from the path when unset.
inline void validate(RunConfig& cfg) {
  if (cfg.command.empty()) throw ConfigError("command", "no command given");
  if (!commands().count(cfg.command)) throw ConfigError("command", "unknown command '" + cfg.command + "'");
  const std::string& c = cfg.command;

  auto need_params = [&] {
    if (!cfg.n) throw ConfigError("params.n", "required");
    if (!cfg.s) throw ConfigError("params.s", "required");
  };
  if (cfg.n && *cfg.n < 1) throw ConfigError("params.n", "must be at least 1");
  if (cfg.s && !(*cfg.s > 0.0 && *cfg.s < 1.0)) throw ConfigError("params.s", "must lie in (0,1)");

  if (c == "regimes") {
    if (cfg.n_min < 1) throw ConfigError("grid.n_min", "must be at least 1");
    if (cfg.n_max < cfg.n_min) throw ConfigError("grid.n_max", "must not be below grid.n_min");
  } else if (c == "constant-a") {
    need_params();
    if (!cfg.beta) throw ConfigError("beta", "required");
    if (!std::isfinite(*cfg.beta)) throw ConfigError("beta", "must be finite");
  } else if (c == "extend") {
    need_params();
    if (cfg.trace != "bump" && cfg.trace != "gaussian" && cfg.trace != "getoor")
      throw ConfigError("trace", "must be one of bump, gaussian, getoor");
    if (cfg.rho.empty()) throw ConfigError("grid.rho", "must not be empty");
    if (cfg.y.empty()) throw ConfigError("grid.y", "must not be empty");
    for (double r : cfg.rho)
      if (!(r >= 0.0) || !std::isfinite(r)) throw ConfigError("grid.rho", "entries must be finite and >= 0");
    for (double y : cfg.y)
      if (!(y > 0.0) || !std::isfinite(y)) throw ConfigError("grid.y", "entries must be finite and > 0");
  } else if (c == "solve-branch") {
    need_params();
    if (cfg.nonlinearity != "exp" && cfg.nonlinearity != "power" && cfg.nonlinearity != "linear")
      throw ConfigError("nonlinearity.name", "must be one of exp, power, linear");
    if (cfg.nonlinearity == "power" && !(cfg.power > 1.0)) throw ConfigError("nonlinearity.p", "must exceed 1");
    if (cfg.cells < 8) throw ConfigError("grid.cells", "must be at least 8");
    if (!(cfg.max_lambda >= 0.0) || !std::isfinite(cfg.max_lambda))
      throw ConfigError("grid.max_lambda", "must be finite and >= 0");
  } else if (c == "verify") {
    if (cfg.tier != "fast" && cfg.tier != "full") throw ConfigError("tier", "must be fast or full");
    for (const auto& f : cfg.faults)
      if (f != "ds") throw ConfigError("inject_fault", "unknown fault '" + f + "' (known: ds)");
  }

  if (cfg.format.empty()) {
    const auto ext = std::filesystem::path(cfg.output).extension().string();
    cfg.format = ext == ".json" || (cfg.output.empty() && c == "verify") ? "json" : "csv";
  }
  if (cfg.format != "csv" && cfg.format != "json") throw ConfigError("output.format", "must be csv or json");
  if (!cfg.output.empty()) {
    const auto parent = std::filesystem::path(cfg.output).parent_path();
    if (!parent.empty() && !std::filesystem::is_directory(parent))
      throw ConfigError("output.path", "directory '" + parent.string() + "' does not exist");
  }
}

// ---------------------------------------------------------------------------
// Commands. Each returns the document text and a one-line summary.

struct Outcome {
  std::string text;
  std::string summary;
  int status = Ok;
};

namespace detail {

inline std::string render(const RunConfig& cfg, const io::Table& t) {
  if (cfg.format == "csv") {
    std::ostringstream os;
    io::write_csv(os, t);
    return os.str();
  }
  json j;
  j["command"] = cfg.command;
  j["records"] = io::to_json(t);
  return io::dump_json(j);
}

inline std::string g10(double v) { return io::format_double(v, 10); }

}  // namespace detail

inline Outcome run_regimes(const RunConfig& cfg) {
  const bool one = cfg.n.has_value();
  const int lo = one ? *cfg.n : cfg.n_min, hi = one ? *cfg.n : cfg.n_max;
  io::Table t{{"n", "radial", "radial_critical_s", "gelfand", "gelfand_critical_s"}, {}};
  if (cfg.s)
    for (const char* c : {"s", "radial_condition", "gelfand_condition", "exp_10s", "convex_4s", "mu_floor"})
      t.columns.push_back(c);
  std::string summary;
  for (int n = lo; n <= hi; ++n) {
    const auto r = critical_s_radial(n);
    const auto g = critical_s_gelfand(n);
    std::vector<io::Cell> row = {std::int64_t{n}, r.label(), r.s, g.label(), g.s};
    if (cfg.s) {
      const auto c = classify(make_params(n, *cfg.s));
      row.insert(row.end(), {*cfg.s, c.radial_condition_holds, c.gelfand_condition_holds, c.exp_10s_holds,
                             c.convex_4s_holds, c.mu_floor});
    }
    t.add(std::move(row));
    if (one)
      summary = "regimes n=" + std::to_string(n) + ": radial " + r.label() +
                (r.kind == Threshold::Kind::Crossing ? " s=" + detail::g10(r.s) : "") + ", gelfand " + g.label() +
                (g.kind == Threshold::Kind::Crossing ? " s=" + detail::g10(g.s) : "");
  }
  if (!one) summary = "regimes n=" + std::to_string(lo) + ".." + std::to_string(hi) + ": " +
                      std::to_string(t.rows.size()) + " rows";
  return {detail::render(cfg, t), summary};
}

inline Outcome run_constant_a(const RunConfig& cfg) {
  const FluxConstantQuery q{make_params(*cfg.n, *cfg.s), *cfg.beta};
  q.validate();
  const auto a = magic_constant_detailed(q);
  McEstimate mc{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(), 0};
  if (cfg.samples > 0) mc = magic_constant_mc(q, cfg.seed, cfg.samples);
  io::Table t{{"n", "s", "beta", "A", "A_error", "below_one", "mc_mean", "mc_stderr", "mc_samples", "seed"}, {}};
  t.add({std::int64_t{*cfg.n}, *cfg.s, *cfg.beta, a.value, a.error, a.value < 1.0, mc.mean, mc.stderr_,
         static_cast<std::int64_t>(mc.samples), static_cast<std::int64_t>(cfg.seed)});
  return {detail::render(cfg, t), "constant-a: A=" + detail::g10(a.value) +
                                      (cfg.samples > 0 ? ", Monte Carlo " + detail::g10(mc.mean) + " +- " +
                                                             detail::g10(mc.stderr_)
                                                       : std::string())};
}

inline Outcome run_extend(const RunConfig& cfg) {
  const Params p = make_params(*cfg.n, *cfg.s);
  const AnalyticTrace u = cfg.trace == "bump" ? bump_trace() : cfg.trace == "gaussian" ? gaussian_trace()
                                                                                       : getoor_trace(p.s);
  const ExtensionField field(u, p);
  io::Table t{{"rho", "y", "v", "v_rho", "v_y"}, {}};
  for (double r : cfg.rho)
    for (double y : cfg.y) {
      const auto g = field.gradient(r, y);
      t.add({r, y, g.v, g.v_rho, g.v_y});
    }
  return {detail::render(cfg, t), "extend " + cfg.trace + ": " + std::to_string(t.rows.size()) + " samples"};
}

inline Outcome run_solve_branch(const RunConfig& cfg) {
  const Params p = make_solver_params(*cfg.n, *cfg.s);
  const Nonlinearity f = cfg.nonlinearity == "exp"     ? Nonlinearity::exponential()
                         : cfg.nonlinearity == "power" ? Nonlinearity::power(cfg.power)
                                                       : Nonlinearity::constant();
  const auto op = assemble(p, cfg.cells);
  ContinuationControls ctl;
  ctl.lambda_max = cfg.max_lambda;
  const Branch b = continue_branch(op, f, ctl);
  std::string text;
  if (cfg.format == "csv") {
    std::ostringstream os;
    io::write_csv(os, io::branch_table(b));
    text = os.str();
  } else {
    json j = io::branch_json(b, cfg.states);
    j["command"] = cfg.command;
    text = io::dump_json(j);
  }
  std::string summary = "solve-branch: " + std::to_string(b.points.size()) + " points";
  summary += b.fold_found ? ", fold at lambda*=" + detail::g10(b.lambda_star) : ", no fold";
  return {text, summary};
}

/// `progress` receives one line per check as it completes.
inline Outcome run_verify(const RunConfig& cfg, std::ostream& progress) {
  acceptance::Faults faults;
  for (const auto& f : cfg.faults)
    if (f == "ds") faults.ds_scale = 1.1;
  acceptance::Suite suite(faults);
  const auto tier = cfg.tier == "full" ? acceptance::Tier::Full : acceptance::Tier::Fast;
  const auto results = suite.run(tier, [&](const acceptance::CheckResult& r) {
    progress << "criterion " << r.id << " " << r.name << ": " << (r.passed ? "PASS" : "FAIL") << '\n'
             << std::flush;
  });
  io::Table t{{"id", "name", "passed", "measured", "required", "seconds", "time_limit", "detail"}, {}};
  std::string failed;
  for (const auto& r : results) {
    t.add({std::int64_t{r.id}, r.name, r.passed, r.measured, r.required, r.seconds, r.time_limit, r.detail});
    if (!r.passed) failed += (failed.empty() ? "" : "; ") + std::to_string(r.id) + " " + r.name;
  }
  std::string text;
  if (cfg.format == "csv") {
    std::ostringstream os;
    io::write_csv(os, t);
    text = os.str();
  } else {
    json j;
    j["command"] = cfg.command;
    j["tier"] = cfg.tier;
    j["faults"] = cfg.faults;
    j["passed"] = failed.empty();
    j["checks"] = io::to_json(t);
    text = io::dump_json(j);
  }
  Outcome o{text, "", failed.empty() ? Ok : Accuracy};
  o.summary = failed.empty() ? "verify " + cfg.tier + ": all " + std::to_string(results.size()) + " checks passed"
                             : "verify " + cfg.tier + ": FAILED " + failed;
  return o;
}

// ---------------------------------------------------------------------------
// Entry point

/// Parses argv, runs the command and writes the result to the output path
/// (or `out` when no path is set). Summaries and diagnostics go to `err`
/// when the document itself goes to `out`.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical companion for stable solutions of fractional semilinear problems", "fracstab"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::optional<std::string> config, output, format;
  std::optional<int> n, n_min, n_max, cells;
  std::optional<double> s, beta, power, max_lambda;
  std::optional<std::uint64_t> seed, samples;
  std::optional<std::string> trace, fname, tier;
  std::optional<std::vector<double>> rho, y;
  std::vector<std::string> faults;
  bool states = false;

  app.add_option("--config", config, "JSON run configuration; flags override its values");
  app.add_option("-o,--output", output, "output file (default: standard output)");
  app.add_option("--format", format, "csv or json (default: from the output extension)");

  auto* reg = app.add_subcommand("regimes", "critical orders and regime classification");
  reg->add_option("--n", n, "single dimension");
  reg->add_option("--s", s, "also classify at this order");
  reg->add_option("--n-min", n_min, "first dimension of the table");
  reg->add_option("--n-max", n_max, "last dimension of the table");

  auto* ca = app.add_subcommand("constant-a", "flux constant by quadrature and Monte Carlo");
  ca->add_option("--n", n);
  ca->add_option("--s", s);
  ca->add_option("--beta", beta);
  ca->add_option("--seed", seed, "Monte Carlo seed");
  ca->add_option("--samples", samples, "Monte Carlo samples (0 skips the estimate)");

  auto* ex = app.add_subcommand("extend", "s-harmonic extension and its gradient on a sample grid");
  ex->add_option("--n", n);
  ex->add_option("--s", s);
  ex->add_option("--trace", trace, "bump, gaussian or getoor");
  ex->add_option("--rho", rho, "radii")->delimiter(',');
  ex->add_option("--y", y, "heights")->delimiter(',');

  auto* sb = app.add_subcommand("solve-branch", "minimal branch by pseudo-arclength continuation");
  sb->add_option("--n", n);
  sb->add_option("--s", s);
  sb->add_option("--f", fname, "exp, power or linear");
  sb->add_option("--p", power, "exponent for the power nonlinearity (1+u)^p");
  sb->add_option("--cells,-M", cells, "grid cells");
  sb->add_option("--max-lambda", max_lambda, "stop continuation at this lambda");
  sb->add_flag("--states", states, "include nodal states in JSON output");

  auto* ve = app.add_subcommand("verify", "run the acceptance checks");
  ve->add_option("--tier", tier, "fast or full");
  ve->add_option("--inject-fault", faults, "deliberate fault (ds: miscalibrate the Dirichlet-to-Neumann constant)");

  std::ostream* summary = &err;
  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return Ok;
    } catch (const CLI::ParseError& e) {
      throw ConfigError("arguments", e.what());
    }

    RunConfig cfg;
    if (config) load_config(*config, cfg);
    if (auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) cfg.command = sub->get_name();
    if (n) cfg.n = n;
    if (s) cfg.s = s;
    if (n_min) cfg.n_min = *n_min;
    if (n_max) cfg.n_max = *n_max;
    if (beta) cfg.beta = beta;
    if (seed) cfg.seed = *seed;
    if (samples) cfg.samples = *samples;
    if (trace) cfg.trace = *trace;
    if (rho) cfg.rho = *rho;
    if (y) cfg.y = *y;
    if (fname) cfg.nonlinearity = *fname;
    if (power) cfg.power = *power;
    if (cells) cfg.cells = *cells;
    if (max_lambda) cfg.max_lambda = *max_lambda;
    if (states) cfg.states = true;
    if (tier) cfg.tier = *tier;
    if (!faults.empty()) cfg.faults = faults;
    if (output) cfg.output = *output;
    if (format) cfg.format = *format;
    validate(cfg);
    if (!cfg.output.empty()) summary = &out;

    Outcome o;
    if (cfg.command == "regimes") o = run_regimes(cfg);
    else if (cfg.command == "constant-a") o = run_constant_a(cfg);
    else if (cfg.command == "extend") o = run_extend(cfg);
    else if (cfg.command == "solve-branch") o = run_solve_branch(cfg);
    else o = run_verify(cfg, *summary);

    if (cfg.output.empty()) {
      out << o.text << std::flush;
    } else {
      std::ofstream file(cfg.output, std::ios::binary);
      file << o.text;
      if (!file.flush()) throw ConfigError("output.path", "cannot write '" + cfg.output + "'");
    }
    *summary << o.summary << '\n';
    return o.status;
  } catch (const ConfigError& e) {
    err << "fracstab: bad configuration: " << e.what() << '\n';
    return BadConfig;
  } catch (const DomainError& e) {
    err << "fracstab: domain error: " << e.what() << '\n';
    return Domain;
  } catch (const AccuracyError& e) {
    err << "fracstab: accuracy error: " << e.what() << " (achieved " << e.achieved() << ", required "
        << e.required() << ")\n";
    return Accuracy;
  }
}

}  // namespace fracstab::cli

#include "carpenter/cli.hpp"

#include "carpenter/errors.hpp"
#include "carpenter/io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <optional>

namespace carpenter {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kPass = 0;
constexpr int kDomain = 2;
constexpr int kFormat = 3;

enum class Level { Error = 0, Info = 1, Debug = 2 };

Level log_level() {
  const char* env = std::getenv("CARPENTER_LOG");
  const std::string v = env ? env : "";
  if (v == "debug") {
    return Level::Debug;
  }
  if (v == "info") {
    return Level::Info;
  }
  return Level::Error;
}

struct Logger {
  std::ostream& err;
  Level level = log_level();

  void log(Level at, const std::string& msg) const {
    if (at <= level) {
      static const char* names[] = {"error", "info", "debug"};
      err << "[" << names[static_cast<int>(at)] << "] " << msg << "\n";
    }
  }
};

struct Flags {
  std::string config;
  std::string demo;
  std::string out;
  std::string result;
  std::size_t window = 0;
  std::size_t steps = 0;
  std::size_t grid = 257;
  std::optional<double> tol_gram;
  std::optional<double> tol_diag;
  std::optional<std::uint64_t> seed;
};

RunConfig resolve_config(const Flags& f) {
  if (f.config.empty() && f.demo.empty()) {
    throw FormatError("one of --config or --demo is required");
  }
  json j = json::object();
  if (!f.config.empty()) {
    try {
      j = json::parse(read_text(f.config));
    } catch (const json::exception& e) {
      throw FormatError("malformed JSON in " + f.config + ": " + e.what());
    }
    if (!j.is_object()) {
      throw FormatError("config must be a JSON object");
    }
  }
  if (!f.demo.empty()) {
    j["demo"] = f.demo;
  }
  if (f.window != 0) {
    j["window"] = f.window;
  }
  if (f.steps != 0) {
    j["steps"] = f.steps;
  }
  if (j.value("demo", std::string()) == "neumann-dirichlet" && !j.contains("window")) {
    j["window"] = 64;
  }
  RunConfig c = config_from_json(j);
  if (c.window == 0) {
    c.window = std::min(c.lambda.size(), c.d.size());
  }
  if (c.steps != 0 && c.window < c.steps + 1) {
    throw FormatError("window must be at least steps + 1");
  }
  if (f.tol_gram) {
    c.tolerances.gram = *f.tol_gram;
  }
  if (f.tol_diag) {
    c.tolerances.diag = *f.tol_diag;
  }
  if (f.seed) {
    c.seed = *f.seed;
  }
  return c;
}

TailRegime declared_regime(const RunConfig& c) {
  return c.d.regime != TailRegime::ExplicitOnly ? c.d.regime : c.lambda.regime;
}

// Consistency of the declared tail regime with the window; empty when consistent.
std::string regime_problem(const RunConfig& c, const DeltaProfile& p) {
  const std::size_t W = p.size();
  switch (declared_regime(c)) {
  case TailRegime::ExplicitOnly:
    for (std::size_t k = 1; k <= W; ++k) {
      if (!p.is_zero(k)) {
        return "unhandled regime: partial sums are not identically zero and no tail regime is declared";
      }
    }
    return {};
  case TailRegime::ZerosInfinitelyOften:
    return p.zero_indices.empty() ? "no zero of the partial sums on the window" : "";
  case TailRegime::PointwiseDominated:
    for (std::size_t i = 1; i <= W; ++i) {
      if (entry_difference(c.d, i, c.lambda, i) < 0.0) {
        return "pointwise domination fails at index " + std::to_string(i);
      }
    }
    return {};
  case TailRegime::ConservationOfMass:
    if (p.zero_indices.empty() && p.strict_decrease_records.size() < 2) {
      return "partial sums never decrease on the window";
    }
    return {};
  case TailRegime::EventuallyAbove: {
    const double a = c.d.alpha;
    if (!std::isfinite(a) || a < 0.0) {
      return "alpha must be finite and nonnegative";
    }
    const std::size_t M = c.d.above_from.value_or(W);
    for (std::size_t k = std::max<std::size_t>(M, 1); k <= W; ++k) {
      if (p.delta(k) < a - 1e-12 * std::max(1.0, a)) {
        return "delta_" + std::to_string(k) + " < alpha although k >= M";
      }
    }
    return {};
  }
  case TailRegime::DipsInfinitelyOften:
    for (std::size_t k = 1; k <= W; ++k) {
      if (p.delta(k) < c.d.alpha) {
        return {};
      }
    }
    return "partial sums never dip below alpha on the window";
  }
  return "unknown regime";
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw FormatError("cannot create " + dir + ": " + ec.message());
  }
}

int cmd_check(const Flags& f, std::ostream& out, const Logger& log) {
  const RunConfig c = resolve_config(f);
  const DeltaProfile p = delta_profile(c.lambda, c.d, c.window);
  json verdict;
  verdict["window"] = c.window;
  verdict["regime"] = std::string(regime_name(declared_regime(c)));
  const auto maj = check_weak_majorization(c.lambda, c.d, c.window);
  std::string reason = maj.ok ? regime_problem(c, p) : maj.reason;
  verdict["majorization"] = maj.ok;
  if (maj.first_violation) {
    verdict["first_violation_index"] = *maj.first_violation;
  }
  verdict["ok"] = reason.empty();
  verdict["reason"] = reason;
  if (!f.out.empty()) {
    ensure_dir(f.out);
    write_text(fs::path(f.out) / "delta_profile.csv", profile_csv(p));
    write_text(fs::path(f.out) / "verdict.json", verdict.dump(2) + "\n");
  }
  out << verdict.dump() << "\n";
  log.log(Level::Info, "check: " + std::string(reason.empty() ? "pass" : reason));
  return reason.empty() ? kPass : kDomain;
}

struct Constructed {
  ConstructionResult result;
  VerificationReport report;
};

Constructed construct_and_write(const RunConfig& c, const std::string& dir, const Logger& log) {
  const EntryOracle oracle = make_oracle(c);
  Constructed x;
  x.result = d2d_dispatch(oracle, c.lambda, c.d, make_options(c));
  log.log(Level::Info, "route " + x.result.route + ", " + std::to_string(x.result.logs.size()) + " move logs");
  x.report = verify(oracle, x.result, c.tolerances);
  write_result_dir(dir, c, x.result, x.report);
  return x;
}

void print_summary(std::ostream& out, const Constructed& x) {
  const auto& l = x.report.ledger;
  out << "route " << x.result.route << "\n";
  out << "constructed " << x.result.constructed.size() << " residual " << x.result.residuals.size() << " untouched "
      << x.result.untouched.size() << "\n";
  out << "ledger constructed " << format_double(l.constructed) << " residual " << format_double(l.residual)
      << " consumed " << format_double(l.consumed) << " deviation " << format_double(l.deviation) << "\n";
  out << "verification " << (x.report.pass ? "pass" : "fail") << " gram " << format_double(x.report.gram_max_dev)
      << " diag " << format_double(x.report.diag_max_dev) << "\n";
}

int cmd_construct(const Flags& f, std::ostream& out, const Logger& log) {
  if (f.out.empty()) {
    throw FormatError("--out is required");
  }
  const RunConfig c = resolve_config(f);
  const Constructed x = construct_and_write(c, f.out, log);
  print_summary(out, x);
  return x.report.pass ? kPass : kDomain;
}

int cmd_verify(const Flags& f, std::ostream& out, const Logger& log) {
  if (f.result.empty()) {
    throw FormatError("--result is required");
  }
  LoadedResult loaded = read_result_dir(f.result);
  if (f.tol_gram) {
    loaded.config.tolerances.gram = *f.tol_gram;
  }
  if (f.tol_diag) {
    loaded.config.tolerances.diag = *f.tol_diag;
  }
  const EntryOracle oracle = make_oracle(loaded.config);
  VerificationReport rep;
  try {
    rep = verify(oracle, loaded.result, loaded.config.tolerances);
  } catch (const DomainError& e) {
    throw FormatError(std::string("result does not fit its oracle: ") + e.what());
  }
  json report = report_json(loaded.config, loaded.result, rep);
  write_text(fs::path(f.result) / "report.json", report.dump(2) + "\n");
  out << "verification " << (rep.pass ? "pass" : "fail") << " gram " << format_double(rep.gram_max_dev) << " diag "
      << format_double(rep.diag_max_dev) << " ledger " << format_double(rep.ledger_dev) << "\n";
  log.log(Level::Info, "verify " + f.result);
  return rep.pass ? kPass : kDomain;
}

int cmd_demo(const Flags& f, std::ostream& out, const Logger& log) {
  if (f.demo == "sine-cosine-table") {
    std::string csv = "j,k,coefficient\n";
    for (std::size_t j = 1; j <= 16; ++j) {
      for (std::size_t k = 0; k <= 16; ++k) {
        csv += std::to_string(j) + "," + std::to_string(k) + "," + format_double(sine_in_cosine_coeffs(j, k)) + "\n";
      }
    }
    if (f.out.empty()) {
      out << csv;
    } else {
      ensure_dir(f.out);
      write_text(fs::path(f.out) / "sine_cosine_table.csv", csv);
    }
    return kPass;
  }
  if (f.demo != "neumann-dirichlet") {
    throw DomainError("unknown demo '" + f.demo + "'");
  }
  if (f.grid < 2) {
    throw DomainError("grid must have at least 2 points");
  }
  if (f.out.empty()) {
    throw FormatError("--out is required");
  }
  Flags g = f;
  g.config.clear();
  const RunConfig c = resolve_config(g);
  const Constructed x = construct_and_write(c, f.out, log);
  std::size_t written = 0;
  for (const auto& v : x.result.constructed) {
    if (written == 8) {
      break;
    }
    std::string csv = "# vector " + v.vec.id() + ", flavor neumann (cosine expansion on [0, pi])\nx,value\n";
    for (const auto& [xv, yv] : sample_function(v.vec, LaplacianFlavor::Neumann, f.grid)) {
      csv += format_double(xv) + "," + format_double(yv) + "\n";
    }
    write_text(fs::path(f.out) / ("sample_" + v.vec.id() + ".csv"), csv);
    ++written;
  }
  print_summary(out, x);
  return x.report.pass ? kPass : kDomain;
}

int cmd_export(const Flags& f, std::ostream& out, const Logger& log) {
  if (f.out.empty()) {
    throw FormatError("--out is required");
  }
  const RunConfig c = resolve_config(f);
  ensure_dir(f.out);
  const DeltaProfile p = delta_profile(c.lambda, c.d, c.window);
  write_text(fs::path(f.out) / "lambda.json", sequence_to_json(c.lambda.head(c.window)).dump(2) + "\n");
  write_text(fs::path(f.out) / "d.json", sequence_to_json(c.d.head(c.window)).dump(2) + "\n");
  write_text(fs::path(f.out) / "delta_profile.csv", profile_csv(p));
  json plans = json::array();
  const auto part = zero_partition(p);
  for (const Block& b : part.blocks) {
    std::vector<double> lam;
    std::vector<double> d;
    for (std::size_t i = b.first; i <= b.last; ++i) {
      lam.push_back(c.lambda(i));
      d.push_back(c.d(i));
    }
    json entry = transfer_plan_json(robin_hood_plan(lam, d));
    entry["block"] = {b.first, b.last};
    plans.push_back(entry);
  }
  write_text(fs::path(f.out) / "block_plans.json", plans.dump(2) + "\n");
  out << "exported " << c.window << " entries, " << plans.size() << " zero blocks\n";
  log.log(Level::Info, "export " + f.out);
  return kPass;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const Logger log{err};
  CLI::App app{"Diagonals of self-adjoint operators by rotation chains"};
  app.require_subcommand(1);
  Flags f;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "run configuration (JSON)");
    sub->add_option("--window", f.window, "number of indices to use");
    sub->add_option("--steps", f.steps, "maximum moves per chain");
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--tol-gram", f.tol_gram, "Gram tolerance");
    sub->add_option("--tol-diag", f.tol_diag, "diagonal tolerance");
    sub->add_option("--seed", f.seed, "seed recorded with the run");
    sub->add_option("--demo", f.demo, "built-in model: neumann-dirichlet or sine-cosine-table");
  };
  auto* check = app.add_subcommand("check", "validate majorization and the declared regime");
  add_common(check);
  auto* construct = app.add_subcommand("construct", "run the dispatcher and write a result directory");
  add_common(construct);
  auto* verify_cmd = app.add_subcommand("verify", "re-verify a result directory");
  verify_cmd->add_option("--result,result", f.result, "result directory");
  verify_cmd->add_option("--tol-gram", f.tol_gram, "Gram tolerance");
  verify_cmd->add_option("--tol-diag", f.tol_diag, "diagonal tolerance");
  auto* demo = app.add_subcommand("demo", "built-in demonstrations");
  add_common(demo);
  demo->add_option("name", f.demo, "demo name");
  demo->add_option("--grid", f.grid, "sample points on [0, pi]");
  auto* exp = app.add_subcommand("export", "write sequences, profile and block plans");
  add_common(exp);

  std::vector<const char*> argv;
  for (const auto& a : args) {
    argv.push_back(a.c_str());
  }
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kPass;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kFormat;
  }

  try {
    if (check->parsed()) {
      return cmd_check(f, out, log);
    }
    if (construct->parsed()) {
      return cmd_construct(f, out, log);
    }
    if (verify_cmd->parsed()) {
      return cmd_verify(f, out, log);
    }
    if (demo->parsed()) {
      return cmd_demo(f, out, log);
    }
    return cmd_export(f, out, log);
  } catch (const FormatError& e) {
    log.log(Level::Error, e.what());
    return kFormat;
  } catch (const DomainError& e) {
    log.log(Level::Error, e.what());
    return kDomain;
  } catch (const fs::filesystem_error& e) {
    log.log(Level::Error, e.what());
    return kFormat;
  }
}

} // namespace carpenter

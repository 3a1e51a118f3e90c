#include "carpenter/io.hpp"

#include "carpenter/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace carpenter {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double x) {
  if (std::isnan(x)) {
    return "nan";
  }
  if (std::isinf(x)) {
    return x > 0 ? "inf" : "-inf";
  }
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
  double x = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto res = std::from_chars(first, last, x);
  if (res.ec != std::errc() || res.ptr != last) {
    throw FormatError("not a number: '" + text + "'");
  }
  return x;
}

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    return fallback;
  }
  return it->get<T>();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) {
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == sep) {
    out.emplace_back();
  }
  return out;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text, const std::string& header_start) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind(header_start, 0) != 0) {
    throw FormatError("CSV header does not start with '" + header_start + "'");
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty()) {
      rows.push_back(split(line, ','));
    }
  }
  return rows;
}

std::size_t parse_index(const std::string& text) {
  std::size_t v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw FormatError("not an index: '" + text + "'");
  }
  return v;
}

std::size_t slot_of(const std::string& id) {
  if (id.size() < 2 || id[0] != 's') {
    throw FormatError("vector id '" + id + "' is not a slot name");
  }
  return parse_index(id.substr(1));
}

} // namespace

json sequence_to_json(const SequenceSpec& s) {
  json j;
  j["values"] = s.values;
  bool any_low = false;
  for (double x : s.low) {
    any_low = any_low || x != 0.0;
  }
  if (any_low) {
    j["low"] = s.low;
  }
  j["regime"] = std::string(regime_name(s.regime));
  if (s.alpha != 0.0) {
    j["alpha"] = s.alpha;
  }
  if (s.above_from) {
    j["above_from"] = *s.above_from;
  }
  if (s.exact) {
    j["exact"] = true;
  }
  return j;
}

SequenceSpec sequence_from_json(const json& j) {
  if (!j.is_object()) {
    throw FormatError("a sequence must be a JSON object");
  }
  SequenceSpec s;
  if (j.contains("values")) {
    s.values = j.at("values").get<std::vector<double>>();
    s.low = get_or<std::vector<double>>(j, "low", {});
  } else if (get_or<std::string>(j, "generator", "") == "poly") {
    // value_i = sum_p coeffs[p] (i - 1)^p, plus coeff * 2^-i as a low part for i >= from.
    const auto n = j.at("length").get<std::size_t>();
    const auto coeffs = j.at("coeffs").get<std::vector<double>>();
    std::optional<std::pair<double, std::size_t>> dyadic;
    if (j.contains("dyadic")) {
      dyadic = std::make_pair(j["dyadic"].at("coeff").get<double>(), get_or<std::size_t>(j["dyadic"], "from", 1));
    }
    for (std::size_t i = 1; i <= n; ++i) {
      double v = 0.0;
      double power = 1.0;
      for (double c : coeffs) {
        v += c * power;
        power *= static_cast<double>(i - 1);
      }
      double lo = 0.0;
      if (dyadic && i >= dyadic->second) {
        lo = dyadic->first * std::ldexp(1.0, -static_cast<int>(i));
      }
      s.values.push_back(v);
      s.low.push_back(lo);
    }
    if (j.contains("overrides")) {
      for (const auto& [key, value] : j["overrides"].items()) {
        const std::size_t i = parse_index(key);
        if (i == 0 || i > n) {
          throw FormatError("override index " + key + " is outside the sequence");
        }
        s.values[i - 1] = value.get<double>();
        s.low[i - 1] = 0.0;
      }
    }
  } else {
    throw FormatError("a sequence needs \"values\" or a known \"generator\"");
  }
  if (!s.low.empty() && s.low.size() != s.values.size()) {
    throw FormatError("\"low\" must match \"values\" in length");
  }
  if (s.values.empty()) {
    throw FormatError("a sequence needs at least one value");
  }
  try {
    s.regime = parse_regime(get_or<std::string>(j, "regime", "explicit"));
  } catch (const DomainError& e) {
    throw FormatError(e.what());
  }
  s.alpha = get_or<double>(j, "alpha", 0.0);
  if (j.contains("above_from")) {
    s.above_from = j["above_from"].get<std::size_t>();
  }
  s.exact = get_or<bool>(j, "exact", false);
  return s;
}

RunConfig config_from_json(const json& j) {
  try {
    if (!j.is_object()) {
      throw FormatError("config must be a JSON object");
    }
    RunConfig c;
    c.name = get_or<std::string>(j, "name", "");
    c.demo = get_or<std::string>(j, "demo", "");
    c.window = get_or<std::size_t>(j, "window", 0);
    c.steps = get_or<std::size_t>(j, "steps", 0);
    if (j.contains("guard")) {
      c.guard = j["guard"].get<std::size_t>();
    }
    c.chain_cap = get_or<std::size_t>(j, "chain_cap", 16);
    c.seed = get_or<std::uint64_t>(j, "seed", 0);
    if (j.contains("tolerances")) {
      const json& t = j["tolerances"];
      c.tolerances.gram = get_or<double>(t, "gram", c.tolerances.gram);
      c.tolerances.diag = get_or<double>(t, "diag", c.tolerances.diag);
      c.tolerances.ledger = get_or<double>(t, "ledger", c.tolerances.ledger);
    }
    if (!c.demo.empty() && !j.contains("lambda")) {
      if (c.demo != "neumann-dirichlet") {
        throw FormatError("unknown demo '" + c.demo + "'");
      }
      if (c.window == 0) {
        throw FormatError("the neumann-dirichlet demo needs a window");
      }
      auto model = neumann_model(c.window);
      c.lambda = model.lambda;
      c.d = model.d;
    } else {
      c.lambda = sequence_from_json(j.at("lambda"));
      c.d = sequence_from_json(j.at("d"));
    }
    if (j.contains("oracle")) {
      const json& o = j["oracle"];
      c.oracle.kind = get_or<std::string>(o, "kind", "diagonal");
      if (c.oracle.kind == "dense") {
        c.oracle.n = o.at("n").get<std::size_t>();
        c.oracle.entries = o.at("entries").get<std::vector<double>>();
      } else if (c.oracle.kind != "diagonal") {
        throw FormatError("unknown oracle kind '" + c.oracle.kind + "'");
      }
    }
    if (c.window != 0 && c.steps != 0 && c.window < c.steps + 1) {
      throw FormatError("window must be at least steps + 1");
    }
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
}

json config_to_json(const RunConfig& c) {
  json j;
  j["name"] = c.name;
  if (!c.demo.empty()) {
    j["demo"] = c.demo;
  }
  j["lambda"] = sequence_to_json(c.lambda);
  j["d"] = sequence_to_json(c.d);
  json o;
  o["kind"] = c.oracle.kind;
  if (c.oracle.kind == "dense") {
    o["n"] = c.oracle.n;
    o["entries"] = c.oracle.entries;
  }
  j["oracle"] = o;
  j["window"] = c.window;
  j["steps"] = c.steps;
  if (c.guard) {
    j["guard"] = *c.guard;
  }
  j["chain_cap"] = c.chain_cap;
  j["tolerances"] = {{"gram", c.tolerances.gram}, {"diag", c.tolerances.diag}, {"ledger", c.tolerances.ledger}};
  j["seed"] = c.seed;
  return j;
}

RunConfig load_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw FormatError("malformed JSON in " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

EntryOracle make_oracle(const RunConfig& c) {
  if (c.oracle.kind == "dense") {
    return EntryOracle::dense(c.oracle.n, c.oracle.entries);
  }
  std::vector<double> diag;
  for (std::size_t i = 1; i <= c.lambda.size(); ++i) {
    diag.push_back(c.lambda(i));
  }
  return EntryOracle::diagonal(std::move(diag));
}

ConstructOptions make_options(const RunConfig& c) {
  ConstructOptions o;
  o.window = c.window;
  if (c.steps != 0) {
    o.max_steps = c.steps;
  }
  o.guard = c.guard;
  o.chain_cap = c.chain_cap;
  return o;
}

std::string profile_csv(const DeltaProfile& profile) {
  std::set<std::size_t> records(profile.strict_decrease_records.begin(), profile.strict_decrease_records.end());
  std::set<std::size_t> minima(profile.running_tail_minima.begin(), profile.running_tail_minima.end());
  std::string out = "k,delta,is_zero,is_record,is_tail_min\n";
  for (std::size_t k = 1; k <= profile.size(); ++k) {
    out += std::to_string(k) + "," + format_double(profile.delta(k)) + "," + (profile.is_zero(k) ? "1" : "0") + "," +
           (records.count(k) ? "1" : "0") + "," + (minima.count(k) ? "1" : "0") + "\n";
  }
  return out;
}

std::string movelog_csv(const MoveLog& log) {
  std::string out = "step,left_id,right_id,alpha,sign,beta,target,achieved,renormalized,complement,near_degenerate\n";
  for (std::size_t k = 0; k < log.moves.size(); ++k) {
    const PairMove& m = log.moves[k];
    out += std::to_string(k + 1) + "," + m.left_id + "," + m.right_id + "," + format_double(m.alpha) + "," +
           std::to_string(m.sign) + "," + format_double(m.beta) + "," + format_double(m.target) + "," +
           format_double(m.achieved) + "," + (m.renormalized ? "1" : "0") + "," + format_double(m.complement) + "," +
           (m.near_degenerate ? "1" : "0") + "\n";
  }
  return out;
}

MoveLog movelog_from_csv(const std::string& id, const std::string& text) {
  MoveLog log;
  log.id = id;
  for (const auto& row : csv_rows(text, "step,left_id,right_id,alpha,sign,beta,target,achieved,renormalized")) {
    if (row.size() < 9) {
      throw FormatError("move log " + id + " has a short row");
    }
    PairMove m;
    m.left_id = row[1];
    m.right_id = row[2];
    m.alpha = parse_double(row[3]);
    m.sign = row[4] == "-1" ? -1 : 1;
    m.beta = parse_double(row[5]);
    m.target = parse_double(row[6]);
    m.achieved = parse_double(row[7]);
    m.renormalized = row[8] == "1";
    m.complement = row.size() > 9 ? parse_double(row[9]) : 1.0 - m.alpha;
    m.near_degenerate = row.size() > 10 && row[10] == "1";
    log.moves.push_back(m);
  }
  return log;
}

std::string vectors_csv(const std::vector<FrameVector>& vectors) {
  std::string out = "vector_id,frame_index,coefficient\n";
  for (const auto& v : vectors) {
    for (const auto& [k, x] : v.coeffs()) {
      out += v.id() + "," + std::to_string(k) + "," + format_double(x) + "\n";
    }
  }
  return out;
}

json transfer_plan_json(const TransferPlan& plan) {
  json transfers = json::array();
  for (const auto& t : plan.transfers) {
    transfers.push_back({{"from", t.from}, {"to", t.to}, {"amount", t.amount}});
  }
  return {{"transfers", transfers}, {"start", plan.start}, {"target", plan.target}, {"final_value", plan.final_value}};
}

json transforms_json(const std::vector<TransformRecord>& transforms) {
  json out = json::array();
  for (const auto& t : transforms) {
    out.push_back({{"name", t.name},
                   {"input", t.input},
                   {"output", t.output},
                   {"offset", t.offset},
                   {"params", t.params},
                   {"result", sequence_to_json(t.result)}});
  }
  return out;
}

json report_json(const RunConfig& c, const ConstructionResult& r, const VerificationReport& v) {
  json j;
  j["name"] = c.name;
  j["route"] = r.route;
  j["parameters"] = r.parameters;
  j["window"] = r.window;
  json constructed = json::array();
  for (const auto& x : r.constructed) {
    constructed.push_back({{"slot", x.index}, {"id", x.vec.id()}, {"target", x.target}});
  }
  j["constructed"] = constructed;
  json residuals = json::array();
  for (const auto& x : r.residuals) {
    residuals.push_back({{"slot", x.slot}, {"id", x.vec.id()}, {"chain", x.chain}});
  }
  j["residuals"] = residuals;
  j["untouched"] = r.untouched;
  j["consumed"] = r.consumed;
  json logs = json::array();
  for (const auto& l : r.logs) {
    logs.push_back(l.id);
  }
  j["logs"] = logs;
  json chains = json::array();
  for (const auto& ch : r.chains) {
    chains.push_back({{"id", ch.id}, {"indices", ch.indices}, {"x", ch.x}, {"alpha_tilde", ch.alpha_tilde}});
  }
  j["chains"] = chains;
  json per_vector = json::array();
  for (const auto& p : v.per_vector) {
    per_vector.push_back({{"id", p.id}, {"slot", p.slot}, {"target", p.target}, {"achieved", p.achieved}, {"dev", p.dev}});
  }
  double max_defect = 0.0;
  for (const auto& row : v.defect_table) {
    max_defect = std::max(max_defect, row.defect);
  }
  j["verification"] = {
    {"gram_max_dev", v.gram_max_dev},
    {"diag_max_dev", v.diag_max_dev},
    {"ledger_dev", v.ledger_dev},
    {"ledger",
     {{"constructed", v.ledger.constructed},
      {"residual", v.ledger.residual},
      {"consumed", v.ledger.consumed},
      {"scale", v.ledger.scale}}},
    {"tolerances", {{"gram", v.tolerances.gram}, {"diag", v.tolerances.diag}, {"ledger", v.tolerances.ledger}}},
    {"defect_max", max_defect},
    {"per_vector", per_vector},
    {"pass", v.pass},
  };
  return j;
}

std::string defect_csv(const std::vector<DefectRow>& rows) {
  std::string out = "j,defect,closed_form_defect\n";
  for (const auto& r : rows) {
    out += std::to_string(r.j) + "," + format_double(r.defect) + "," +
           (r.closed_form ? format_double(*r.closed_form) : std::string()) + "\n";
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw FormatError("cannot write " + path.string());
  }
  out << text;
  if (!out) {
    throw FormatError("write failed for " + path.string());
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot read " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_result_dir(const fs::path& dir, const RunConfig& c, const ConstructionResult& r,
                      const VerificationReport& v) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw FormatError("cannot create " + dir.string() + ": " + ec.message());
  }
  write_text(dir / "config.json", config_to_json(c).dump(2) + "\n");
  write_text(dir / "vectors.csv", vectors_csv(result_vectors(r)));
  std::string residuals = "slot,vector_id,chain,value\n";
  for (const auto& x : r.residuals) {
    residuals += std::to_string(x.slot) + "," + x.vec.id() + "," + x.chain + "," + format_double(x.value) + "\n";
  }
  write_text(dir / "residuals.csv", residuals);
  for (const auto& log : r.logs) {
    write_text(dir / ("moves_chain_" + log.id + ".csv"), movelog_csv(log));
  }
  write_text(dir / "transforms.json", transforms_json(r.transforms).dump(2) + "\n");
  write_text(dir / "delta_profile.csv", profile_csv(delta_profile(r.lambda, r.d, r.window)));
  write_text(dir / "defect_table.csv", defect_csv(v.defect_table));
  write_text(dir / "report.json", report_json(c, r, v).dump(2) + "\n");
}

LoadedResult read_result_dir(const fs::path& dir) {
  LoadedResult out;
  try {
    if (!fs::exists(dir / "report.json")) {
      throw FormatError("missing report.json in " + dir.string());
    }
    out.report = json::parse(read_text(dir / "report.json"));
    out.config = config_from_json(json::parse(read_text(dir / "config.json")));
    ConstructionResult& r = out.result;
    r.route = out.report.at("route").get<std::string>();
    r.parameters = out.report.at("parameters");
    r.window = out.report.at("window").get<std::size_t>();
    r.lambda = out.config.lambda.head(r.window);
    r.d = out.config.d.head(r.window);

    std::map<std::string, FrameVector> vectors;
    for (const auto& row : csv_rows(read_text(dir / "vectors.csv"), "vector_id,frame_index,coefficient")) {
      if (row.size() != 3) {
        throw FormatError("vectors.csv row must have three cells");
      }
      auto [it, inserted] = vectors.try_emplace(row[0], FrameVector(row[0]));
      it->second.set(parse_index(row[1]), parse_double(row[2]));
    }
    auto take = [&](const std::string& id) {
      auto it = vectors.find(id);
      return it == vectors.end() ? FrameVector(id) : it->second;
    };
    for (const auto& x : out.report.at("constructed")) {
      const std::string id = x.at("id").get<std::string>();
      const std::size_t slot = x.at("slot").get<std::size_t>();
      if (slot == 0 || slot > r.d.size() || slot_of(id) != slot) {
        throw FormatError("constructed entry " + id + " does not match its slot");
      }
      r.constructed.push_back({slot, take(id), r.d(slot)});
    }
    for (const auto& x : out.report.at("residuals")) {
      const std::string id = x.at("id").get<std::string>();
      r.residuals.push_back({x.at("slot").get<std::size_t>(), take(id), 0.0, x.at("chain").get<std::string>()});
    }
    r.untouched = out.report.at("untouched").get<std::vector<std::size_t>>();
    r.consumed = out.report.at("consumed").get<std::vector<std::size_t>>();
    for (const auto& id : out.report.at("logs")) {
      const std::string name = id.get<std::string>();
      r.logs.push_back(movelog_from_csv(name, read_text(dir / ("moves_chain_" + name + ".csv"))));
    }
    for (const auto& ch : out.report.at("chains")) {
      ChainRecord rec;
      rec.id = ch.at("id").get<std::string>();
      rec.indices = ch.at("indices").get<std::vector<std::size_t>>();
      rec.x = ch.at("x").get<std::vector<double>>();
      rec.alpha_tilde = ch.at("alpha_tilde").get<std::vector<double>>();
      r.chains.push_back(std::move(rec));
    }
    for (const auto& t : json::parse(read_text(dir / "transforms.json"))) {
      TransformRecord rec;
      rec.name = t.at("name").get<std::string>();
      rec.input = t.at("input").get<std::string>();
      rec.output = t.at("output").get<std::string>();
      rec.offset = t.at("offset").get<std::size_t>();
      rec.params = t.at("params");
      rec.result = sequence_from_json(t.at("result"));
      r.transforms.push_back(std::move(rec));
    }
  } catch (const json::exception& e) {
    throw FormatError("malformed artifact in " + dir.string() + ": " + e.what());
  }
  return out;
}

} // namespace carpenter

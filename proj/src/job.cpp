#include "simid/job.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "simid/simulator.hpp"
#include "simid/solver.hpp"
#include "simid/transport.hpp"

namespace simid {

using Json = nlohmann::ordered_json;

const char* to_string(Command c) {
  switch (c) {
    case Command::Rid: return "rid";
    case Command::RidGeneral: return "rid-general";
    case Command::Tc: return "tc";
    case Command::Lc: return "lc";
    case Command::Rd: return "rd";
    case Command::RhoBar: return "rhobar";
    case Command::Bound: return "bound";
    case Command::Sweep: return "sweep";
    case Command::Simulate: return "simulate";
    case Command::Selftest: return "selftest";
  }
  return "unknown";
}

namespace {

const std::map<std::string, Command>& command_names() {
  static const std::map<std::string, Command> names = {
      {"rid", Command::Rid},       {"rid-general", Command::RidGeneral}, {"tc", Command::Tc},
      {"lc", Command::Lc},         {"rd", Command::Rd},                  {"rhobar", Command::RhoBar},
      {"bound", Command::Bound},   {"sweep", Command::Sweep},            {"simulate", Command::Simulate},
      {"selftest", Command::Selftest}};
  return names;
}

double parse_double(const std::string& s, const std::string& field) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  if (first < last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) throw JobParseError(field + ": cannot parse number '" + s + "'");
  return v;
}

void check_grid(const std::vector<double>& g, const std::string& field) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i]) || g[i] < 0.0) throw JobParseError(field + ": values must be finite and nonnegative");
    if (i > 0 && !(g[i] > g[i - 1])) throw JobParseError(field + ": grid must be strictly increasing");
  }
}

Pmf make_pmf(const std::vector<double>& v, const std::string& field) {
  try {
    return Pmf(v);
  } catch (const Error& e) {
    throw JobParseError(field + ": " + e.what());
  }
}

std::string status_of(SolverStatus s) {
  switch (s) {
    case SolverStatus::Optimal: return "optimal";
    case SolverStatus::ConstraintInactive: return "zero_rate";
    case SolverStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

Json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return quantize(v);
}

Json channel_json(const Channel& ch) {
  Json rows = Json::array();
  for (std::size_t x = 0; x < ch.input_size(); ++x) {
    Json row = Json::array();
    for (std::size_t u = 0; u < ch.output_size(); ++u) row.push_back(number(ch(x, u)));
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Rows of one result table plus per-row JSON extras.
struct Table {
  std::vector<CsvRow> rows;
  std::vector<Json> extras;

  void add(CsvRow row, Json extra = Json::object()) {
    rows.push_back(std::move(row));
    extras.push_back(std::move(extra));
  }
  bool all_infeasible() const {
    if (rows.empty()) return false;
    for (const auto& r : rows)
      if (r.status != "infeasible") return false;
    return true;
  }
};

Json table_json(const Table& t) {
  Json arr = Json::array();
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    Json o;
    o["D"] = number(r.d);
    o["R"] = number(r.r);
    o["status"] = r.status;
    o["pattern_index"] = r.pattern_index;
    o["u_size"] = r.u_size;
    o["tol"] = number(r.tol);
    for (const auto& [k, v] : t.extras[i].items()) o[k] = v;
    arr.push_back(std::move(o));
  }
  return arr;
}

void write_table(std::ostream& os, const Table& t, OutputFormat fmt) {
  if (fmt == OutputFormat::Csv) {
    write_csv_rows(os, t.rows);
  } else {
    os << table_json(t).dump(2) << '\n';
  }
}

// ---- commands

Table run_rid(const JobSpec& spec, bool force_general) {
  RateOptions ro;
  ro.tol = spec.tol;
  ro.threads = spec.threads;
  ro.budget = spec.budget;
  ro.full_enumeration = spec.full_enumeration;
  const std::size_t u = spec.px.size() + (spec.strict_cardinality ? 1 : 0);

  std::vector<IdRateResult> pts;
  std::vector<RatePoint> raw;
  for (double d : spec.d_grid) {
    pts.push_back(force_general ? r_id_general(spec.px, spec.py, spec.rho, d, u, ro)
                                : r_id(spec.px, spec.py, spec.rho, d, u, ro));
    raw.push_back({d, pts.back().rate, ""});
  }
  RateCurve curve(raw);
  if (!spec.strict_cardinality) curve = envelope_of_finite(curve);

  Table t;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& p = pts[i];
    std::string status = to_string(p.status);
    if (curve[i].provenance.find("envelope") != std::string::npos) status = "envelope";
    Json extra;
    extra["channel"] = p.status == RateStatus::Infeasible ? Json(nullptr) : channel_json(p.achieving_channel);
    t.add({spec.d_grid[i], curve[i].r, status, p.winning_index, u, spec.tol}, std::move(extra));
  }
  return t;
}

Table run_tc(const JobSpec& spec) {
  Table t;
  const std::size_t u = spec.px.size();
  if (!spec.d_grid.empty()) {
    for (double d : spec.d_grid) {
      const auto rep = r_id_tc(spec.px, spec.py, spec.rho, d, spec.tol);
      Json extra;
      extra["channel"] = rep.status == SolverStatus::Infeasible ? Json(nullptr) : channel_json(rep.channel);
      t.add({d, rep.optimal_rate, status_of(rep.status), -1, u, spec.tol}, std::move(extra));
    }
    return t;
  }
  for (double r : spec.r_grid)
    t.add({d_id_tc(spec.px, spec.py, spec.rho, r, spec.tol), r, "optimal", -1, u, spec.tol});
  return t;
}

Table run_lc(const JobSpec& spec) {
  Table t;
  const std::size_t u = spec.px.size();
  if (!spec.d_grid.empty()) {
    const LcInverter inv(spec.px, spec.py, spec.rho, spec.tol);
    for (double d : spec.d_grid) {
      const auto rv = inv.rate_for(d);
      t.add({d, rv.rate, to_string(rv.status), -1, u, spec.tol});
    }
    return t;
  }
  for (double r : spec.r_grid) {
    const auto det = d_id_lc_detail(spec.px, spec.py, spec.rho, r, spec.tol);
    Json extra;
    extra["channel"] = channel_json(det.channel);
    t.add({det.value, r, "optimal", -1, u, spec.tol}, std::move(extra));
  }
  return t;
}

Table run_rd(const JobSpec& spec) {
  Table t;
  const std::size_t u = spec.rho.cols();
  if (!spec.d_grid.empty()) {
    for (double d : spec.d_grid) {
      const auto rep = rate_distortion(spec.px, spec.rho, d, spec.tol);
      Json extra;
      extra["channel"] = rep.status == SolverStatus::Infeasible ? Json(nullptr) : channel_json(rep.channel);
      t.add({d, rep.optimal_rate, status_of(rep.status), -1, u, spec.tol}, std::move(extra));
    }
    return t;
  }
  for (double r : spec.r_grid) {
    const auto res = distortion_rate(spec.px, spec.rho, r, spec.tol);
    Json extra;
    extra["channel"] = channel_json(res.achieving_channel);
    t.add({res.d_of_r, r, "optimal", -1, u, spec.tol}, std::move(extra));
  }
  return t;
}

Table run_rhobar(const JobSpec& spec) {
  const auto res = rho_bar(spec.px, spec.py, spec.rho);
  Json extra;
  Json coupling = Json::array();
  for (std::size_t i = 0; i < res.witness.rows; ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < res.witness.cols; ++j) row.push_back(number(res.witness.joint[i * res.witness.cols + j]));
    coupling.push_back(std::move(row));
  }
  extra["coupling"] = std::move(coupling);
  Table t;
  t.add({res.value, 0.0, "optimal", -1, 0, spec.tol}, std::move(extra));
  return t;
}

Table run_bound(const JobSpec& spec) {
  if (!spec.rho.is_hamming()) throw InvalidArgument("--rho: the lower bound needs Hamming distortion");
  Table t;
  for (double d : spec.d_grid) {
    const auto lb = hamming_lower_bound(spec.px, spec.py, d);
    t.add({d, lb.value, lb.kl_infinite ? "kl_infinite" : "optimal", -1, 0, spec.tol});
  }
  return t;
}

std::vector<std::pair<std::string, Table>> run_sweep(const JobSpec& spec) {
  std::vector<std::pair<std::string, Table>> out;
  out.emplace_back("rid", run_rid(spec, false));
  if (spec.rho.is_square() && spec.rho.satisfies_triangle()) {
    out.emplace_back("tc", run_tc(spec));
    out.emplace_back("lc", run_lc(spec));
  }
  if (spec.rho.is_hamming()) out.emplace_back("bound", run_bound(spec));
  return out;
}

constexpr const char* kSimulateHeader =
    "n,rate_budget,rate,D,codewords,residual,covering_radius,p_maybe,halfwidth,trials,seed,similar,false_negatives,"
    "admissibility";

int run_simulate(const JobSpec& spec, std::ostream& os) {
  CodebookOptions co;
  co.rho = spec.rho;
  co.typical_only = spec.typical_only;
  co.gamma = spec.gamma;
  bool violated = false;
  Json arr = Json::array();
  if (spec.format == OutputFormat::Csv) os << kSimulateHeader << '\n';
  for (double rate : spec.r_grid) {
    const Channel target = covering_target_channel(spec.px, spec.rho, rate);
    const Codebook cb = build_codebook(spec.n, spec.px, target, rate, co);
    for (double d : spec.d_grid) {
      const auto adm = exhaustive_admissibility_check(cb, d, spec.n, {}, kDefaultPairBudget, 100'000, spec.seed);
      const auto sim = estimate_maybe_probability(cb, spec.px, spec.py, d, spec.trials, spec.seed, spec.threads);
      const std::string adm_text =
          std::string(adm.pass ? "pass" : "fail") + (adm.exhaustive ? "_exhaustive" : "_sampled");
      violated = violated || !adm.pass || sim.false_negative_count != 0;
      if (spec.format == OutputFormat::Csv) {
        os << spec.n << ',' << format_number(rate) << ',' << format_number(cb.rate) << ',' << format_number(d) << ','
           << cb.codewords.size() << ',' << cb.covering_radius_report.residual << ','
           << format_number(cb.covering_radius_report.max_distortion) << ',' << format_number(sim.p_maybe_estimate)
           << ',' << format_number(sim.confidence_halfwidth) << ',' << sim.trials << ',' << sim.seed << ','
           << sim.similar_count << ',' << sim.false_negative_count << ',' << adm_text << '\n';
      } else {
        Json o;
        o["n"] = spec.n;
        o["rate_budget"] = number(rate);
        o["rate"] = number(cb.rate);
        o["D"] = number(d);
        o["codewords"] = cb.codewords.size();
        o["residual"] = cb.covering_radius_report.residual;
        o["covering_radius"] = number(cb.covering_radius_report.max_distortion);
        o["p_maybe"] = number(sim.p_maybe_estimate);
        o["halfwidth"] = number(sim.confidence_halfwidth);
        o["trials"] = sim.trials;
        o["seed"] = sim.seed;
        o["similar"] = sim.similar_count;
        o["false_negatives"] = sim.false_negative_count;
        o["admissibility"] = adm_text;
        arr.push_back(std::move(o));
      }
    }
  }
  if (spec.format == OutputFormat::Json) os << arr.dump(2) << '\n';
  return violated ? kExitFailure : kExitOk;
}

int run_selftest(std::ostream& os) {
  struct Case {
    std::size_t x, u;
    std::uint64_t expected;
  };
  bool ok = true;
  for (const Case c : {Case{2, 2, 1}, Case{3, 3, 20}, Case{4, 4, 1001}, Case{5, 5, 142506}}) {
    const auto got = sign_pattern_count(c.x, c.u);
    const bool pass = got == c.expected;
    ok = ok && pass;
    os << (pass ? "PASS" : "FAIL") << " sign-pattern count |X|=|U|=" << c.x << ": " << got << " (expected "
       << c.expected << ")\n";
  }
  // Streamed enumeration agrees with the count formula.
  for (std::size_t x = 2; x <= 4; ++x) {
    SignPatternStream s(x, x);
    std::uint64_t seen = 0;
    while (s.next()) ++seen;
    const bool pass = seen == sign_pattern_count(x, x);
    ok = ok && pass;
    os << (pass ? "PASS" : "FAIL") << " sign-pattern stream |X|=|U|=" << x << ": " << seen << " patterns\n";
  }
  return ok ? kExitOk : kExitFailure;
}

int emit(const JobSpec& spec, std::ostream& out, const Table& t) {
  if (spec.out.empty()) {
    write_table(out, t, spec.format);
  } else {
    std::ofstream f(spec.out, std::ios::binary);
    if (!f) throw InvalidArgument("--out: cannot open " + spec.out);
    write_table(f, t, spec.format);
  }
  return t.all_infeasible() ? kExitInfeasible : kExitOk;
}

}  // namespace

DistortionMatrix parse_distortion(const std::string& text, std::size_t rows, std::size_t cols) {
  if (text == "hamming") {
    if (cols != 0 && cols != rows) throw JobParseError("--rho: hamming needs equal source and query alphabets");
    return DistortionMatrix::hamming(rows);
  }
  std::vector<std::vector<double>> m;
  std::stringstream rs(text);
  std::string row;
  while (std::getline(rs, row, ';')) {
    std::vector<double> r;
    std::stringstream es(row);
    std::string cell;
    while (std::getline(es, cell, ',')) r.push_back(parse_double(cell, "--rho"));
    if (r.empty()) throw JobParseError("--rho: empty row");
    m.push_back(std::move(r));
  }
  if (m.empty()) throw JobParseError("--rho: empty matrix");
  try {
    DistortionMatrix d(m);
    if (d.rows() != rows || (cols != 0 && d.cols() != cols))
      throw JobParseError("--rho: matrix is " + std::to_string(d.rows()) + "x" + std::to_string(d.cols()) +
                          ", expected " + std::to_string(rows) + "x" + (cols ? std::to_string(cols) : "*"));
    return d;
  } catch (const JobParseError&) {
    throw;
  } catch (const Error& e) {
    throw JobParseError(std::string("--rho: ") + e.what());
  }
}

JobSpec parse_job(const std::vector<std::string>& args) {
  CLI::App app{"Similarity-identification rates and triangle-scheme simulation", "simid"};
  std::string command;
  std::vector<double> px, py, d_grid, r_grid;
  std::vector<std::string> rho_parts;
  std::string format = "csv";
  std::size_t threads = 0;
  JobSpec spec;

  std::vector<std::string> command_list;
  for (const auto& [name, c] : command_names()) command_list.push_back(name);
  app.add_option("command", command, "rid | rid-general | tc | lc | rd | rhobar | bound | sweep | simulate | selftest")
      ->required()
      ->check(CLI::IsMember(command_list));
  app.add_option("--px", px, "source pmf, comma separated")->delimiter(',');
  app.add_option("--py", py, "query pmf (defaults to --px)")->delimiter(',');
  app.add_option("--rho", rho_parts, "'hamming' or rows like 0,1,1;1,0,1;1,1,0");
  app.add_option("--D", d_grid, "distortion grid")->delimiter(',');
  app.add_option("--R", r_grid, "rate grid (bits)")->delimiter(',');
  app.add_option("--tol", spec.tol, "solver tolerance in (0, 1e-2]");
  app.add_flag("--strict-cardinality", spec.strict_cardinality, "use |U| = |X|+1 without the envelope");
  app.add_flag("--full-enumeration", spec.full_enumeration, "rid-general: every vertex assignment");
  app.add_option("--seed", spec.seed, "simulation seed");
  app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--out", spec.out, "output file (file prefix for sweep)");
  app.add_option("--threads", threads, "worker threads (fallback: SIMID_THREADS)")->check(CLI::PositiveNumber);
  app.add_option("--budget", spec.budget, "maximum number of subproblems");
  app.add_option("--n", spec.n, "simulate: blocklength");
  app.add_option("--trials", spec.trials, "simulate: Monte Carlo trials");
  app.add_flag("--typical-only", spec.typical_only, "simulate: cover typical sequences, erase the rest");
  app.add_option("--gamma", spec.gamma, "simulate: typicality slack");
  app.set_config("--config", "", "key=value file; command-line flags take precedence");

  std::vector<const char*> argv{"simid"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success&) {
    throw HelpRequested{app.help()};
  } catch (const CLI::ParseError& e) {
    throw JobParseError(e.what());
  }

  spec.command = command_names().at(command);
  spec.format = format == "json" ? OutputFormat::Json : OutputFormat::Csv;
  if (!(spec.tol > 0.0 && spec.tol <= 1e-2)) throw JobParseError("--tol: must lie in (0, 1e-2]");

  if (threads == 0) {
    if (const char* env = std::getenv("SIMID_THREADS"); env && *env) {
      const double v = parse_double(env, "SIMID_THREADS");
      if (!(v >= 1.0) || v != std::floor(v)) throw JobParseError("SIMID_THREADS: must be a positive integer");
      threads = static_cast<std::size_t>(v);
    } else {
      threads = 1;
    }
  }
  spec.threads = threads;

  check_grid(d_grid, "--D");
  check_grid(r_grid, "--R");
  spec.d_grid = d_grid;
  spec.r_grid = r_grid;
  if (!rho_parts.empty()) {
    spec.rho_text.clear();
    for (std::size_t i = 0; i < rho_parts.size(); ++i) spec.rho_text += (i ? "," : "") + rho_parts[i];
  }

  if (spec.command == Command::Selftest) return spec;
  if (px.empty()) throw JobParseError("--px: required for " + command);
  spec.px = make_pmf(px, "--px");
  spec.py = py.empty() ? spec.px : make_pmf(py, "--py");
  const bool uses_py = spec.command != Command::Rd;
  spec.rho = parse_distortion(spec.rho_text, spec.px.size(), uses_py ? spec.py.size() : 0);

  switch (spec.command) {
    case Command::Rid:
    case Command::RidGeneral:
    case Command::Bound:
    case Command::Sweep:
      if (d_grid.empty()) throw JobParseError("--D: required for " + command);
      break;
    case Command::Tc:
    case Command::Lc:
    case Command::Rd:
      if (d_grid.empty() && r_grid.empty()) throw JobParseError("--D or --R: required for " + command);
      break;
    case Command::Simulate:
      if (d_grid.empty()) throw JobParseError("--D: required for simulate");
      if (r_grid.empty()) throw JobParseError("--R: required for simulate");
      if (spec.n == 0 || spec.n > 64) throw JobParseError("--n: must lie in [1, 64]");
      if (spec.trials == 0) throw JobParseError("--trials: must be positive");
      if (!(spec.gamma > 0.0)) throw JobParseError("--gamma: must be positive");
      break;
    default:
      break;
  }
  if ((spec.command == Command::Tc || spec.command == Command::Lc || spec.command == Command::Simulate) &&
      !(spec.rho.is_square() && spec.rho.satisfies_triangle()))
    throw JobParseError("--rho: " + command + " needs a square distortion with the triangle property");
  return spec;
}

int run_job(const JobSpec& spec, std::ostream& out, std::ostream& err) {
  try {
    switch (spec.command) {
      case Command::Rid: return emit(spec, out, run_rid(spec, false));
      case Command::RidGeneral: return emit(spec, out, run_rid(spec, true));
      case Command::Tc: return emit(spec, out, run_tc(spec));
      case Command::Lc: return emit(spec, out, run_lc(spec));
      case Command::Rd: return emit(spec, out, run_rd(spec));
      case Command::RhoBar: return emit(spec, out, run_rhobar(spec));
      case Command::Bound: return emit(spec, out, run_bound(spec));
      case Command::Selftest: return run_selftest(out);
      case Command::Simulate: {
        if (spec.out.empty()) return run_simulate(spec, out);
        std::ofstream f(spec.out, std::ios::binary);
        if (!f) throw InvalidArgument("--out: cannot open " + spec.out);
        return run_simulate(spec, f);
      }
      case Command::Sweep: {
        const auto tables = run_sweep(spec);
        const char* ext = spec.format == OutputFormat::Csv ? ".csv" : ".json";
        if (!spec.out.empty()) {
          for (const auto& [name, t] : tables) {
            std::ofstream f(spec.out + "_" + name + ext, std::ios::binary);
            if (!f) throw InvalidArgument("--out: cannot open " + spec.out + "_" + name + ext);
            write_table(f, t, spec.format);
          }
        } else if (spec.format == OutputFormat::Csv) {
          for (const auto& [name, t] : tables) {
            out << "# " << name << '\n';
            write_csv_rows(out, t.rows);
          }
        } else {
          Json all;
          for (const auto& [name, t] : tables) all[name] = table_json(t);
          out << all.dump(2) << '\n';
        }
        return tables.front().second.all_infeasible() ? kExitInfeasible : kExitOk;
      }
    }
  } catch (const BudgetExceeded& e) {
    err << "error: " << e.what() << '\n';
    return kExitBudget;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitParse;
  }
  return kExitFailure;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) v = 0.0;  // no "-0"
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 10);
  return std::string(buf, res.ptr);
}

double quantize(double v) {
  if (!std::isfinite(v)) return v;
  const std::string s = format_number(v);
  double q = 0.0;
  std::from_chars(s.data(), s.data() + s.size(), q);
  return q;
}

void write_csv_rows(std::ostream& os, const std::vector<CsvRow>& rows) {
  os << kCsvHeader << '\n';
  for (const auto& r : rows)
    os << format_number(r.d) << ',' << format_number(r.r) << ',' << r.status << ',' << r.pattern_index << ','
       << r.u_size << ',' << format_number(r.tol) << '\n';
}

std::vector<CsvRow> read_csv_rows(std::istream& is) {
  std::vector<CsvRow> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#' || line == kCsvHeader) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 6) throw InvalidArgument("csv: expected 6 fields in '" + line + "'");
    CsvRow r;
    r.d = parse_double(f[0], "csv D");
    r.r = parse_double(f[1], "csv R");
    r.status = f[2];
    r.pattern_index = static_cast<long>(parse_double(f[3], "csv pattern_index"));
    r.u_size = static_cast<std::size_t>(parse_double(f[4], "csv u_size"));
    r.tol = parse_double(f[5], "csv tol");
    rows.push_back(std::move(r));
  }
  return rows;
}

RateCurve rate_curve_from_csv(std::istream& is, const std::string& label) {
  std::vector<RatePoint> pts;
  for (const auto& r : read_csv_rows(is)) pts.push_back({r.d, r.r, r.status});
  return RateCurve(std::move(pts), label);
}

}  // namespace simid

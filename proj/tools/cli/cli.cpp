#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "apricot/analyzer/analyzer.hpp"
#include "apricot/parser/parser.hpp"
#include "apricot/sim/simulator.hpp"
#include "apricot/sim/trace.hpp"

namespace apricot::cli {

namespace fs = std::filesystem;

namespace {

/// Thrown for anything the user must fix on the command line.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::vector<std::string> files;
  std::vector<std::string> defines;
  std::string system;
  std::string output;
  std::string format = "csv";
  std::string report_format = "text";
  std::string step_log;
  std::string policy = "eager";
  sim::SimConfig sim;
  std::string columns;
  bool stats = false;
};

bool color_enabled() {
  const char* c = std::getenv("APRICOT_COLOR");
  return c && std::string(c) == "1";
}

void report(const std::vector<Diagnostic>& diags, const SourceManager& sources, const Options& o, std::ostream& err) {
  for (const auto& d : diags)
    err << (o.report_format == "jsonl" ? render_jsonl(d, &sources) : render(d, &sources, color_enabled())) << '\n';
}

/// `Name/arity=expr`; the arguments are `x1..xn`, any other name is read in the caller's scope.
void bind_define(const std::string& text, eval::ExternalRegistry& ext) {
  const auto slash = text.find('/');
  const auto eq = text.find('=');
  if (slash == std::string::npos || eq == std::string::npos || slash > eq || slash == 0)
    throw UsageError("--define expects Name/arity=expression, got '" + text + "'");
  const std::string name = text.substr(0, slash);
  std::size_t arity = 0;
  try {
    std::size_t used = 0;
    const std::string digits = text.substr(slash + 1, eq - slash - 1);
    arity = std::stoul(digits, &used);
    if (used != digits.size()) throw std::invalid_argument(digits);
  } catch (const std::exception&) {
    throw UsageError("--define: bad arity in '" + text + "'");
  }
  auto parsed = parse::parse_expression(text.substr(eq + 1));
  if (!parsed.expr || !parsed.diagnostics.empty())
    throw UsageError("--define: cannot parse expression of '" + name + "'" +
                     (parsed.diagnostics.empty() ? "" : ": " + parsed.diagnostics.front().message));
  std::vector<std::string> params;
  for (std::size_t i = 1; i <= arity; ++i) params.push_back("x" + std::to_string(i));
  ext.define_expression(name, params, parsed.expr, text);
}

struct Front {
  SourceManager sources;
  eval::ExternalRegistry ext;
  analysis::Analysis analysis;
};

/// Reads, parses and analyses the inputs. Returns an exit code on failure.
std::optional<int> front(const Options& o, Front& f, std::ostream& err) {
  for (const auto& path : o.files) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    f.sources.add(path, ss.str());
  }
  for (const auto& d : o.defines) bind_define(d, f.ext);
  auto parsed = parse::parse_files(f.sources);
  if (!parsed.ok()) {
    report(parsed.diagnostics, f.sources, o, err);
    return kParseError;
  }
  f.analysis = analysis::analyze(parsed.unit, &f.ext);
  report(f.analysis.diagnostics, f.sources, o, err);
  if (!f.analysis.ok()) return kConformanceError;
  return std::nullopt;
}

std::string pick_system(const Options& o, const analysis::Analysis& a) {
  const auto systems = analysis::system_classes(*a.classes);
  if (!o.system.empty()) {
    for (const auto& s : systems)
      if (s == o.system) return s;
    throw UsageError("no System class named '" + o.system + "'");
  }
  if (systems.size() != 1)
    throw UsageError("expected exactly one System class, found " + std::to_string(systems.size()) + "; use --system");
  return systems.front();
}

sim::SimConfig sim_config(const Options& o) {
  sim::SimConfig c = o.sim;
  auto p = sim::policy_from(o.policy);
  if (!p) throw UsageError("unknown policy '" + o.policy + "'");
  c.policy = *p;
  c.step_log = !o.step_log.empty();
  if (auto err = c.validate()) throw UsageError(*err);
  return c;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + p.string() + "'");
  return out;
}

fs::path events_path(const fs::path& p) {
  fs::path e = p;
  return e.replace_extension(".events.csv");
}

/// Writes `t` to `path` (stdout when empty) in the chosen format, with the events sidecar for CSV.
void write_trace(const sim::Trace& t, const std::string& path, const std::string& format, std::ostream& out) {
  if (path.empty()) {
    if (format == "jsonl") {
      sim::write_jsonl(t, out);
    } else {
      sim::write_csv(t, out);
    }
    return;
  }
  auto f = open_out(path);
  if (format == "jsonl") {
    sim::write_jsonl(t, f);
  } else {
    sim::write_csv(t, f);
    auto e = open_out(events_path(path));
    sim::write_events_csv(t, e);
  }
}

void write_step_log(const sim::Trace& t, const std::string& path) {
  if (path.empty()) return;
  auto f = open_out(path);
  for (const auto& r : t.steps) f << format_step(r) << '\n';
}

void summary(const std::string& system, const sim::Trace& t, std::ostream& out) {
  out << "system " << system << ": " << t.samples.size() << " samples, " << t.events.size() << " events, termination "
      << t.termination << '\n';
  if (t.samples.empty()) return;
  const auto& last = t.samples.back();
  out << "final t=" << format_real(last.time);
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << ' ' << t.columns[i] << '=' << format_real(last.values[i]);
  out << '\n';
}

int sim_failure(const sim::SimError& e, const Options& o, std::ostream& err) {
  Diagnostic d{Severity::Error, e.rule_id(), e.what(), e.span(), {}};
  err << (o.report_format == "jsonl" ? render_jsonl(d) : render(d, nullptr, color_enabled())) << '\n';
  return kSimulationError;
}

std::optional<analysis::HybridModel> build(const Options& o, Front& f, std::ostream& err, int& code) {
  const std::string system = pick_system(o, f.analysis);
  auto flat = analysis::flatten(f.analysis.classes, system, &f.ext);
  report(flat.diagnostics, f.sources, o, err);
  if (!flat.model) code = kConformanceError;
  return std::move(flat.model);
}

int cmd_check(const Options& o, std::ostream& out, std::ostream& err) {
  Front f;
  if (auto code = front(o, f, err)) return *code;
  // Flattening executes the constructors and Init, which surfaces start and sync errors.
  for (const auto& s : analysis::system_classes(*f.analysis.classes)) {
    auto flat = analysis::flatten(f.analysis.classes, s, &f.ext);
    report(flat.diagnostics, f.sources, o, err);
    if (!flat.model) return kConformanceError;
  }
  out << "ok: " << o.files.size() << " file(s), " << f.analysis.normalized.classes.size() << " classes\n";
  return kOk;
}

int cmd_run(const Options& o, std::ostream& out, std::ostream& err) {
  Front f;
  if (auto code = front(o, f, err)) return *code;
  const auto cfg = sim_config(o);
  int code = kOk;
  auto model = build(o, f, err, code);
  if (!model) return code;
  sim::Trace t;
  try {
    t = sim::Simulator(*model, cfg).simulate();
  } catch (const sim::SimError& e) {
    return sim_failure(e, o, err);
  }
  write_trace(t, o.output, o.format, out);
  write_step_log(t, o.step_log);
  summary(model->system_name, t, o.output.empty() ? err : out);
  return kOk;
}

int cmd_explore(const Options& o, std::ostream& out, std::ostream& err) {
  Front f;
  if (auto code = front(o, f, err)) return *code;
  auto cfg = sim_config(o);
  cfg.policy = sim::Policy::Explore;
  int code = kOk;
  auto model = build(o, f, err, code);
  if (!model) return code;
  sim::Simulator::ExploreResult r;
  try {
    r = sim::Simulator(*model, cfg).explore();
  } catch (const sim::SimError& e) {
    return sim_failure(e, o, err);
  }
  const fs::path dir = o.output.empty() ? fs::path("explore") : fs::path(o.output);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create '" + dir.string() + "'");
  {
    auto tree = open_out(dir / "tree.jsonl");
    for (const auto& n : r.nodes) {
      nlohmann::ordered_json j;
      j["type"] = "node";
      j["id"] = n.id;
      j["parent"] = n.parent;
      j["label"] = n.label;
      j["time"] = n.time;
      tree << j.dump() << '\n';
    }
    for (const auto& [id, _] : r.leaves) tree << nlohmann::ordered_json{{"type", "leaf"}, {"id", id}}.dump() << '\n';
    tree << nlohmann::ordered_json{{"type", "summary"}, {"leaves", r.leaves.size()}, {"truncated", r.truncated}}.dump()
         << '\n';
  }
  const std::string ext = o.format == "jsonl" ? ".jsonl" : ".csv";
  for (const auto& [id, trace] : r.leaves)
    write_trace(trace, (dir / ("leaf-" + std::to_string(id) + ext)).string(), o.format, out);
  std::size_t first_level = 0;
  for (const auto& n : r.nodes) first_level += n.parent == 0;
  out << "branches " << r.leaves.size() << ", first-level choices " << first_level << ", truncated "
      << (r.truncated ? "yes" : "no") << ", written to " << dir.string() << '\n';
  return kOk;
}

/// Numeric column for a user-supplied name: exact, or a unique `.name` suffix.
std::string resolve_column(const sim::Trace& t, const std::string& name) {
  if (t.column(name)) return name;
  for (const auto& c : t.components)
    if (name == c + ".@active") return name;
  std::string found;
  for (const auto& c : t.columns)
    if (c.size() > name.size() && c.ends_with("." + name)) {
      if (!found.empty()) throw UsageError("column '" + name + "' is ambiguous");
      found = c;
    }
  if (found.empty()) throw UsageError("unknown column '" + name + "'");
  return found;
}

int cmd_trace(const Options& o, std::ostream& out, std::ostream&) {
  if (o.files.size() != 1) throw UsageError("trace takes exactly one trace file");
  const fs::path path = o.files.front();
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read '" + path.string() + "'");
  sim::Trace t;
  try {
    const bool jsonl = path.extension() == ".jsonl" || in.peek() == '{';
    t = jsonl ? sim::read_jsonl(in) : sim::read_csv(in);
    if (!jsonl) {
      if (std::ifstream ev(events_path(path)); ev) {
        std::string line;
        std::getline(ev, line);
        while (std::getline(ev, line)) {
          if (line.empty()) continue;
          std::vector<std::string> cells;
          std::stringstream ss(line);
          for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
          if (cells.size() != 4) throw std::runtime_error("malformed events row");
          t.events.push_back(sim::Event{std::stod(cells[0]), cells[1], cells[2], cells[3], {}, {}});
        }
      }
    }
  } catch (const std::exception& e) {
    throw UsageError(path.string() + ": " + e.what());
  }

  if (!o.columns.empty()) {
    std::vector<std::string> names;
    std::stringstream ss(o.columns);
    for (std::string c; std::getline(ss, c, ',');)
      if (c != "time") names.push_back(resolve_column(t, c));
    const auto sel = sim::select_columns(t, names);
    sim::write_csv(sel, out);
  }
  if (o.stats || o.columns.empty()) {
    auto num = [](double v) { return std::isnan(v) ? std::string("n/a") : format_real(v); };
    out << "samples " << t.samples.size() << '\n';
    out << "column,min,max,mean,final\n";
    for (const auto& s : sim::column_stats(t))
      out << s.name << ',' << num(s.min) << ',' << num(s.max) << ',' << num(s.mean) << ',' << num(s.final) << '\n';
    out << "events " << t.events.size() << '\n';
    for (const auto& e : t.events) out << format_real(e.time) << ',' << e.kind << ',' << e.name << '\n';
  }
  return kOk;
}

void sim_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--t-end", o.sim.t_end, "End of simulated time (s)")->capture_default_str();
  cmd->add_option("--dt", o.sim.dt, "Integration step (s)")->capture_default_str();
  cmd->add_option("--policy", o.policy, "eager | lazy | random | explore")->capture_default_str();
  cmd->add_option("--seed", o.sim.seed, "Seed of the random policy")->capture_default_str();
  cmd->add_option("--event-tol", o.sim.event_tol, "Event localisation tolerance (s)")->capture_default_str();
  cmd->add_option("--value-tol", o.sim.value_tol, "Tolerance of == guards and invariant bounds")->capture_default_str();
  cmd->add_option("--max-jumps", o.sim.max_jumps, "Explore: jumps per branch")->capture_default_str();
  cmd->add_option("--max-branches", o.sim.max_branches, "Explore: leaves in the tree")->capture_default_str();
  cmd->add_option("--system", o.system, "System class to simulate");
  cmd->add_option("-o,--output", o.output, "Trace file (run) or output directory (explore)");
  cmd->add_option("--format", o.format, "csv | jsonl")->check(CLI::IsMember({"csv", "jsonl"}))->capture_default_str();
  cmd->add_option("--step-log", o.step_log, "Write the SOS step records of every jump to this file");
}

void front_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("files", o.files, "Model sources (.apr), concatenated in order")->required();
  cmd->add_option("--define", o.defines, "External function Name/arity=expression over x1..xn");
  cmd->add_option("--report-format", o.report_format, "text | jsonl")
      ->check(CLI::IsMember({"text", "jsonl"}))
      ->capture_default_str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Check, simulate and explore hybrid-system models", "apricot"};
  app.require_subcommand(1);
  auto* check = app.add_subcommand("check", "Parse and check conformance");
  front_flags(check, o);
  check->add_option("--system", o.system, "System class (accepted for symmetry with run)");
  auto* runc = app.add_subcommand("run", "Simulate one System and write its trace");
  front_flags(runc, o);
  sim_flags(runc, o);
  auto* explore = app.add_subcommand("explore", "Enumerate every nondeterministic run");
  front_flags(explore, o);
  sim_flags(explore, o);
  auto* trace = app.add_subcommand("trace", "Inspect a trace file");
  trace->add_option("file", o.files, "Trace (.csv or .jsonl)")->required();
  trace->add_option("--columns", o.columns, "Comma-separated columns to emit");
  trace->add_flag("--stats", o.stats, "Per-column statistics and the event table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }
  try {
    if (check->parsed()) return cmd_check(o, out, err);
    if (runc->parsed()) return cmd_run(o, out, err);
    if (explore->parsed()) return cmd_explore(o, out, err);
    return cmd_trace(o, out, err);
  } catch (const UsageError& e) {
    err << "apricot: " << e.what() << '\n';
    return kUsageError;
  }
}

}  // namespace apricot::cli

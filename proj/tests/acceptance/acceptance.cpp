#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../support/corpus.hpp"
#include "../support/models.hpp"
#include "apricot/eval/eval.hpp"
#include "apricot/sim/simulator.hpp"
#include "apricot/sim/trace.hpp"
#include "apricot/sos/engine.hpp"
#include "cli.hpp"

using namespace apricot;
using apricot::testing::build_model;
using apricot::testing::read_model;

namespace {

constexpr double g = 9.8;

/// Outcome of one criterion: pass flag plus a short measurement summary.
struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += "failed: " + what;
    }
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

eval::ExternalRegistry& resiliency() {
  static eval::ExternalRegistry ext;
  if (!ext.find("Resiliency")) apricot::testing::bind_resiliency(ext);
  return ext;
}

std::vector<double> jump_times(const sim::Trace& t) {
  std::vector<double> out;
  for (const auto& e : t.events)
    if (e.kind == "jump" || e.kind == "sync-jump") out.push_back(e.time);
  return out;
}

std::optional<double> value_at(const sim::Trace& t, const std::string& col, double time) {
  const auto c = t.column(col);
  if (!c) return std::nullopt;
  for (const auto& s : t.samples)
    if (std::fabs(s.time - time) < 1e-12) return s.values[*c];
  return std::nullopt;
}

sim::SimConfig config(double t_end, double dt = 1e-3) {
  sim::SimConfig c;
  c.t_end = t_end;
  c.dt = dt;
  c.event_tol = 1e-9;
  c.policy = sim::Policy::Eager;
  return c;
}

/// Criterion 4's run: plant-only system, eager policy, dt = 1e-3.
const sim::Trace& bouncing_trace() {
  static const sim::Trace t = [] {
    auto m = build_model(read_model("bouncing_ball_plant.apr"));
    return sim::Simulator(*m, config(6)).simulate();
  }();
  return t;
}

Outcome corpus_and_mutations() {
  Outcome o;
  for (const char* file : {"bouncing_ball.apr", "bouncing_ball_corrected.apr", "bouncing_ball_plant.apr"}) {
    const auto rules = apricot::testing::check_rules(read_model(file), &resiliency());
    o.require(rules.empty(), std::string(file) + " reported " + std::to_string(rules.size()) + " rule(s)");
  }
  const auto& suite = apricot::testing::mutation_suite();
  o.require(suite.size() == 12, "mutation suite has 12 cases");
  const std::string base = read_model("bouncing_ball.apr");
  int caught = 0;
  for (const auto& m : suite) {
    const auto rules = apricot::testing::check_rules(apricot::testing::apply(m, base), &resiliency());
    if (rules.count(m.rule))
      ++caught;
    else
      o.require(false, m.name + " did not report " + m.rule);
  }
  o.note(std::to_string(caught) + "/12 mutations reported");
  return o;
}

/// Runs the Discrete body of `cls` in `mode` from the given (x, y) and returns the result.
std::vector<double> run_discrete(const std::string& src, const std::string& cls, sos::DiscreteMode mode,
                                 const std::vector<std::string>& vars, const std::vector<double>& init) {
  auto parsed = parse::parse_source(src);
  if (!parsed.ok()) throw std::runtime_error("parse: " + parsed.diagnostics.front().message);
  ClassTable classes(parsed.unit);
  Store store;
  sos::Engine engine(classes, store);
  const auto self = engine.instantiate(cls, Prefix::root("system"));
  for (std::size_t i = 0; i < vars.size(); ++i) store.write(*store.field(self, vars[i]), Value::real(init[i]));
  auto ctx = engine.context(self);
  engine.exec_discrete(classes.method(cls, ast::MethodKind::Discrete)->body, mode, ctx, Prefix::root("system"));
  std::vector<double> out;
  for (const auto& v : vars) out.push_back(store.read(*store.field(self, v)).as_real());
  return out;
}

Outcome discrete_laws() {
  Outcome o;
  const std::string swap = "SequentialAssignment Swap { Real x, y; Discrete(){ x = y; y = x; } }";
  const auto seq = run_discrete(swap, "Swap", sos::DiscreteMode::Sequential, {"x", "y"}, {0, 1});
  const auto par = run_discrete(swap, "Swap", sos::DiscreteMode::Parallel, {"x", "y"}, {0, 1});
  o.require(seq == std::vector<double>{1, 1}, "sequential swap gives (1,1)");
  o.require(par == std::vector<double>{1, 0}, "parallel swap gives (1,0)");

  std::mt19937 rng(2);
  const std::vector<std::string> vars = {"a", "b", "c", "d"};
  int agree = 0;
  for (int trial = 0; trial < 200; ++trial) {
    // Distinct targets keep the body conflict-free.
    auto targets = vars;
    std::shuffle(targets.begin(), targets.end(), rng);
    const std::size_t n = 1 + rng() % vars.size();
    struct Stmt {
      std::size_t target, u, v;
      int c;
    };
    std::vector<std::string> stmts;
    std::vector<Stmt> shape;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t u = rng() % vars.size(), v = rng() % vars.size();
      const int c = static_cast<int>(rng() % 7);
      stmts.push_back(targets[i] + " = " + vars[u] + " - 3 * " + vars[v] + " + " + std::to_string(c) + ";");
      const auto t = static_cast<std::size_t>(std::find(vars.begin(), vars.end(), targets[i]) - vars.begin());
      shape.push_back({t, u, v, c});
    }
    std::vector<double> init;
    for (std::size_t i = 0; i < vars.size(); ++i) init.push_back(static_cast<double>(rng() % 13) - 6);

    // Oracle: every right-hand side reads the pre-state.
    auto expect = init;
    for (const auto& s : shape) expect[s.target] = init[s.u] - 3 * init[s.v] + s.c;

    auto body = [&](const std::vector<std::string>& order) {
      std::string src = "ParallelAssignment P { Real a, b, c, d; Discrete(){ ";
      for (const auto& s : order) src += s + " ";
      return src + "} }";
    };
    auto perm = stmts;
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto r1 = run_discrete(body(stmts), "P", sos::DiscreteMode::Parallel, vars, init);
    const auto r2 = run_discrete(body(perm), "P", sos::DiscreteMode::Parallel, vars, init);
    if (r1 == expect && r2 == expect) ++agree;
  }
  o.require(agree == 200, "permutation invariance");
  o.note("seq (" + num(seq[0]) + "," + num(seq[1]) + "), par (" + num(par[0]) + "," + num(par[1]) + "), " +
         std::to_string(agree) + "/200 permutations agree");
  return o;
}

Outcome math_library() {
  Outcome o;
  auto call = [](const std::string& fn, std::vector<Value> args) { return eval::eval_builtin(fn, args); };
  auto icall = [&](const std::string& fn, std::int64_t a, std::int64_t b) {
    return call(fn, {Value::integer(a), Value::integer(b)}).as_integer();
  };
  o.require(call("round", {Value::real(2.5)}) == Value::integer(3), "round(2.5)=3");
  o.require(call("round", {Value::real(0.4)}) == Value::integer(0), "round(0.4)=0");
  o.require(call("round", {Value::real(-2.5)}) == Value::integer(-3), "round(-2.5)=-3");
  o.require(call("floor", {Value::real(2.5)}) == Value::integer(2), "floor(2.5)=2");
  o.require(call("ceil", {Value::real(2.5)}) == Value::integer(3), "ceil(2.5)=3");

  int identities = 0;
  for (std::int64_t x = -9; x <= 9; ++x)
    for (std::int64_t y = -9; y <= 9; ++y) {
      if (y == 0) continue;
      const auto d = icall("div", x, y), r = icall("rem", x, y), f = icall("fld", x, y), m = icall("mod", x, y);
      const bool ok = x == d * y + r && x == f * y + m &&
                      d == static_cast<std::int64_t>(std::trunc(static_cast<double>(x) / y)) &&
                      f == static_cast<std::int64_t>(std::floor(static_cast<double>(x) / y));
      identities += ok;
    }
  o.require(identities == 19 * 18, "div/rem and fld/mod identities");

  int laws = 0;
  for (std::int64_t a = 1; a <= 30; ++a)
    for (std::int64_t b = 1; b <= 30; ++b) laws += icall("gcd", a, b) * icall("lcm", a, b) == a * b;
  o.require(laws == 900, "gcd*lcm law");

  const double erf3 = call("erf", {Value::integer(3)}).as_real();
  o.require(std::fabs(erf3 - 0.9999779095) < 1e-6, "erf(3)");

  double fact = 1, worst = 0;
  for (int n = 1; n <= 10; ++n) {
    if (n > 1) fact *= n - 1;
    worst = std::max(worst, std::fabs(call("gamma", {Value::integer(n)}).as_real() - fact) / fact);
  }
  o.require(worst <= 1e-9, "gamma(n)=(n-1)!");
  o.note("identities " + std::to_string(identities) + "/342, gcd*lcm " + std::to_string(laws) + "/900, erf(3)=" +
         num(erf3) + ", gamma rel err " + num(worst));
  return o;
}

Outcome bouncing_dynamics() {
  Outcome o;
  const auto& t = bouncing_trace();
  const auto jumps = jump_times(t);
  const std::vector<double> impacts = {1.74964, 3.84921, 5.10895};
  o.require(jumps.size() >= 3, "three impacts");
  double worst_t = 0;
  for (std::size_t i = 0; i < 3 && i < jumps.size(); ++i) worst_t = std::max(worst_t, std::fabs(jumps[i] - impacts[i]));
  o.require(worst_t < 1e-4, "impact times within 1e-4 s");

  const auto h = *t.column("ball.height");
  const auto v = *t.column("ball.velocity");
  const std::vector<double> peaks = {5.4, 1.944};
  double worst_p = 0;
  for (std::size_t i = 0; i < 2 && i + 1 < jumps.size(); ++i) {
    double peak = 0;
    for (const auto& s : t.samples)
      if (s.time > jumps[i] && s.time < jumps[i + 1]) peak = std::max(peak, s.values[h]);
    worst_p = std::max(worst_p, std::fabs(peak - peaks[i]));
  }
  o.require(worst_p < 1e-4, "peak heights within 1e-4 m");

  double min_h = INFINITY, max_v = 0;
  for (const auto& s : t.samples) {
    min_h = std::min(min_h, s.values[h]);
    max_v = std::max(max_v, std::fabs(s.values[v]));
  }
  o.require(min_h >= -1e-9, "height never below -1e-9");
  o.require(max_v <= 60, "velocity within [-60,60]");
  o.note("impact err " + num(worst_t) + " s, peak err " + num(worst_p) + " m, min h " + num(min_h) + ", max |v| " +
         num(max_v));
  return o;
}

Outcome flight_conservation() {
  Outcome o;
  const auto& t = bouncing_trace();
  const auto h = *t.column("ball.height");
  const auto v = *t.column("ball.velocity");
  auto bounds = jump_times(t);
  bounds.insert(bounds.begin(), 0.0);
  bounds.push_back(INFINITY);
  double worst = 0;
  for (std::size_t p = 0; p + 1 < bounds.size(); ++p) {
    std::optional<double> e0;
    for (const auto& s : t.samples) {
      if (s.time <= bounds[p] || s.time >= bounds[p + 1]) continue;
      const double e = s.values[h] + s.values[v] * s.values[v] / (2 * g);
      if (!e0) e0 = e;
      worst = std::max(worst, std::fabs(e - *e0));
    }
  }
  o.require(worst < 1e-6, "energy drift below 1e-6");
  o.note("max drift " + num(worst) + " over " + std::to_string(bounds.size() - 1) + " flight phases");
  return o;
}

Outcome integration_order() {
  Outcome o;
  auto m = build_model(apricot::testing::drag_model());
  auto f = [](double v) { return -9.8 - 0.1 * v * std::fabs(v); };
  std::vector<double> ref(101);
  double v = 0;
  const int per = 10000;
  for (int i = 1; i <= 100 * per; ++i) {
    const double h = 1e-6;
    const double k1 = f(v), k2 = f(v + h / 2 * k1), k3 = f(v + h / 2 * k2), k4 = f(v + h * k3);
    v += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    if (i % per == 0) ref[i / per] = v;
  }
  auto max_err = [&](double dt) {
    auto t = sim::Simulator(*m, config(1, dt)).simulate();
    double worst = 0;
    for (int i = 0; i <= 100; ++i) {
      const auto x = value_at(t, "body.v", i * 1e-2);
      if (!x) return std::numeric_limits<double>::infinity();
      worst = std::max(worst, std::fabs(*x - ref[i]));
    }
    return worst;
  };
  const double coarse = max_err(1e-2), fine = max_err(5e-3);
  o.require(coarse > 0 && coarse / fine >= 8, "error ratio >= 8");
  o.note("max err " + num(coarse) + " at dt=1e-2, " + num(fine) + " at dt=5e-3, ratio " + num(coarse / fine));
  return o;
}

Outcome synchronized_jumps() {
  Outcome o;
  auto m = build_model(apricot::testing::sync_model(false));
  auto t = sim::Simulator(*m, config(6)).simulate();
  o.require(!t.events.empty() && t.events.front().kind == "sync-jump", "sync-jump event");
  if (!t.events.empty()) {
    const auto& e = t.events.front();
    const auto x = *t.column("left.x");
    const auto c = *t.column("right.c");
    // Hand oracle: pre (x, y) = (5, 2); x := y and y := x on the pre-state give x = 2; both share the instant.
    o.require(std::fabs(e.time - 5) < 1e-9, "jump at x = 5");
    o.require(e.pre[x] == 5 || std::fabs(e.pre[x] - 5) < 1e-9, "pre x = 5");
    o.require(e.post[x] == 2, "post x = 2");
    o.require(e.post[c] == e.pre[c], "controller keeps its clock");
    sim::Simulator s(*m, config(6));
    auto st = s.initial_state();
    const auto& left = m->components[0];
    st.store.write(left.variables[0].loc, Value::real(5));
    auto items = s.valid_compositions(st);
    o.require(items.size() == 1 && items[0].sync >= 0 && items[0].members.size() == 2, "one synchronised item");
    if (items.size() == 1) {
      s.apply_jump(st, items[0], nullptr);
      const double nx = st.store.read(left.variables[0].loc).as_real();
      const double ny = st.store.read(*st.store.field(left.object, "y")).as_real();
      o.require(nx == 2 && ny == 5, "parallel semantics (2,5)");
      o.note("post (x,y) = (" + num(nx) + "," + num(ny) + ")");
    }
  }
  std::string rule = "<none>";
  try {
    auto bad = build_model(apricot::testing::sync_model(true));
    sim::Simulator(*bad, config(6)).simulate();
  } catch (const sim::SimError& e) {
    rule = e.rule_id();
  }
  o.require(rule == "write-conflict", "overlapping writes raise write-conflict");
  o.note("conflict rule " + rule);
  return o;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome nondeterminism() {
  Outcome o;
  auto m = build_model(apricot::testing::two_guard_model());
  auto c = config(7);
  c.policy = sim::Policy::Explore;
  auto r = sim::Simulator(*m, c).explore();
  int first = 0;
  for (const auto& n : r.nodes) first += n.parent == 0;
  o.require(first == 3, "three first-level branches");

  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "apricot-acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto model = dir / "two.apr";
  std::ofstream(model) << apricot::testing::two_guard_model();
  auto run = [&](const std::string& out) {
    const std::vector<std::string> args = {"apricot", "run", model.string(), "--t-end", "40", "--policy", "random",
                                           "--seed",  "7",   "-o",           (dir / out).string()};
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream so, se;
    return cli::run(static_cast<int>(argv.size()), argv.data(), so, se);
  };
  const int ca = run("a.csv"), cb = run("b.csv");
  const bool same = ca == 0 && cb == 0 && slurp(dir / "a.csv") == slurp(dir / "b.csv") &&
                    slurp(dir / "a.events.csv") == slurp(dir / "b.events.csv") && !slurp(dir / "a.csv").empty();
  o.require(same, "random seed 7 byte-reproducible");
  fs::remove_all(dir);
  o.note(std::to_string(first) + " first-level branches, seed-7 runs " + (same ? "identical" : "differ"));
  return o;
}

Outcome flow_termination() {
  Outcome o;
  auto m = build_model(apricot::testing::flow_stop_model());
  auto t = sim::Simulator(*m, config(10)).simulate();
  std::optional<double> stop;
  bool resumed = false;
  for (const auto& e : t.events) {
    if (e.kind == "flow-stop" && !stop) stop = e.time;
    if (e.kind == "jump" && e.name == "tank.CT" && stop) resumed = true;
  }
  o.require(stop.has_value(), "flow-stop event");
  const auto tw = *t.column("tank.tw");
  double worst = 0;
  int waiting = 0;
  if (stop) {
    for (const auto& s : t.samples)
      if (s.time > *stop && s.time < 8) {
        worst = std::max(worst, std::fabs(s.values[tw] - (s.time - *stop)));
        ++waiting;
      }
  }
  o.require(waiting > 0 && worst <= 1e-9, "tw equals elapsed waiting time");
  o.require(resumed, "controller write re-enables the tank");
  const auto x_end = value_at(t, "tank.x", 10);
  o.require(x_end && std::fabs(*x_end - 2) < 1e-9, "flow resumes to x(10) = 2");
  o.note("stop at " + (stop ? num(*stop) : std::string("-")) + ", tw err " + num(worst) + " over " +
         std::to_string(waiting) + " samples, x(10) = " + (x_end ? num(*x_end) : std::string("-")));
  return o;
}

Outcome clock_conformance() {
  Outcome o;
  const std::string base = read_model("bouncing_ball.apr");
  for (const char* bad : {"dot(t,1)==2", "dot(t,2)==1", "dot(t,1)==t"}) {
    std::string src = base;
    src.replace(src.find("dot(t,1)==1"), 11, bad);
    o.require(apricot::testing::check_rules(src, &resiliency()).count("clock.constraint") == 1,
              std::string(bad) + " rejected");
  }
  const auto& t = bouncing_trace();
  const auto c = *t.column("watch.c");
  double worst = 0;
  for (const auto& s : t.samples)
    if (s.time > 0) worst = std::max(worst, std::fabs(s.values[c] - s.time) / s.time);
  o.require(worst <= 1e-9, "clock equals time within 1e-9*t");
  o.note("3 non-conforming clocks rejected, max relative clock err " + num(worst));
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Outcome()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "corpus parse/check and mutation suite", 1, corpus_and_mutations},
      {2, "discrete-semantics laws", 5, discrete_laws},
      {3, "math library", 5, math_library},
      {4, "bouncing-ball dynamics", 10, bouncing_dynamics},
      {5, "flight-phase conservation", 0, flight_conservation},
      {6, "integration order", 0, integration_order},
      {7, "synchronized jumps", 0, synchronized_jumps},
      {8, "nondeterminism", 0, nondeterminism},
      {9, "flow termination", 0, flow_termination},
      {10, "clock constraint conformance", 0, clock_conformance},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_s > 0) o.require(secs < c.limit_s, "runtime under " + num(c.limit_s) + " s");
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail << " ["
              << num(secs) << " s]\n";
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}

#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "apricot/sim/simulator.hpp"
#include "apricot/sim/trace.hpp"
#include "../support/corpus.hpp"
#include "../support/models.hpp"

using namespace apricot;
using namespace apricot::sim;
using apricot::testing::build_model;
using apricot::testing::read_model;

namespace {

constexpr double g = 9.8;
constexpr double k = 0.6;

/// Impact times of a ball dropped from rest at `h0`, bouncing with restitution k.
std::vector<double> impact_oracle(double h0, int n) {
  std::vector<double> out;
  double v = std::sqrt(2 * g * h0);
  double t = v / g;
  for (int i = 0; i < n; ++i) {
    out.push_back(t);
    v *= k;
    t += 2 * v / g;
  }
  return out;
}

/// Accumulation point of the impact times.
double zeno_time(double h0) {
  const double v = std::sqrt(2 * g * h0);
  return v / g + 2 * k * v / (g * (1 - k));
}

std::vector<double> jump_times(const Trace& t) {
  std::vector<double> out;
  for (const auto& e : t.events)
    if (e.kind == "jump" || e.kind == "sync-jump") out.push_back(e.time);
  return out;
}

double value_at(const Trace& t, const std::string& col, double time) {
  const auto c = t.column(col).value();
  for (const auto& s : t.samples)
    if (std::fabs(s.time - time) < 1e-12) return s.values[c];
  FAIL("no sample at t=" << time);
  return 0;
}

std::shared_ptr<analysis::HybridModel> plant() { return build_model(read_model("bouncing_ball_plant.apr")); }

std::shared_ptr<analysis::HybridModel> corrected() {
  static eval::ExternalRegistry ext;
  if (!ext.find("Resiliency")) apricot::testing::bind_resiliency(ext);
  return build_model(read_model("bouncing_ball_corrected.apr"), &ext);
}

Trace run(const analysis::HybridModel& m, SimConfig cfg) { return Simulator(m, cfg).simulate(); }

SimConfig with_end(double t_end) {
  SimConfig c;
  c.t_end = t_end;
  return c;
}

}  // namespace

TEST_CASE("config validation rejects unusable values") {
  SimConfig c;
  CHECK_FALSE(c.validate());
  c.dt = 0;
  CHECK(c.validate());
  auto m = plant();
  CHECK_THROWS_AS(Simulator(*m, c), SimError);
  CHECK(policy_from("lazy") == Policy::Lazy);
  CHECK_FALSE(policy_from("greedy"));
  CHECK(to_string(Policy::Explore) == "explore");
}

TEST_CASE("one RK4 step on the free fall is exact") {
  auto m = plant();
  Simulator s(*m, with_end(1));
  auto st = s.initial_state();
  s.integrate_step(st, 0.5);
  const auto& ball = m->components[1];
  CHECK(st.time == 0.5);
  CHECK(st.store.read(ball.variables[0].loc).as_real() == doctest::Approx(15 - 0.5 * g * 0.25).epsilon(1e-14));
  CHECK(st.store.read(ball.variables[1].loc).as_real() == doctest::Approx(-g * 0.5).epsilon(1e-14));
}

TEST_CASE("height and velocity after 0.5 s of flow") {
  auto t = run(*plant(), with_end(0.5));
  CHECK(value_at(t, "ball.height", 0.5) == doctest::Approx(13.775).epsilon(1e-12));
  CHECK(value_at(t, "ball.velocity", 0.5) == doctest::Approx(-4.9).epsilon(1e-12));
}

TEST_CASE("invariant horizon of the drop is the first impact") {
  auto m = plant();
  Simulator s(*m, with_end(1));
  auto st = s.initial_state();
  auto h = s.check_invariant_horizon(st, 1, 2.0);
  REQUIRE(h);
  CHECK(*h == doctest::Approx(std::sqrt(30 / g)).epsilon(1e-9));
  CHECK_FALSE(s.check_invariant_horizon(st, 1, 1.0));
  CHECK(s.valid_compositions(st).empty());
}

TEST_CASE("t_end = 0 yields the initial sample only") {
  auto t = run(*plant(), with_end(0));
  REQUIRE(t.samples.size() == 1);
  CHECK(t.samples[0].time == 0);
  CHECK(value_at(t, "ball.height", 0) == 15);
  CHECK(t.termination == "t_end");
}

TEST_CASE("impact times and peaks match closed-form kinematics") {
  auto t = run(*plant(), with_end(6));
  const auto oracle = impact_oracle(15, 3);
  const auto jumps = jump_times(t);
  REQUIRE(jumps.size() >= 3);
  for (int i = 0; i < 3; ++i) CHECK(std::fabs(jumps[i] - oracle[i]) < 1e-6);

  const auto h = t.column("ball.height").value();
  for (int i = 0; i < 2; ++i) {
    double peak = 0;
    for (const auto& s : t.samples)
      if (s.time > jumps[i] && s.time < jumps[i + 1]) peak = std::max(peak, s.values[h]);
    const double oracle_peak = std::pow(k, 2 * (i + 1)) * 15;
    CHECK(std::fabs(peak - oracle_peak) < 1e-4);
  }
}

TEST_CASE("flight phases conserve mechanical energy") {
  auto t = run(*plant(), with_end(6));
  const auto h = t.column("ball.height").value();
  const auto v = t.column("ball.velocity").value();
  auto jumps = jump_times(t);
  jumps.insert(jumps.begin(), 0.0);
  jumps.push_back(6.0 + 1);
  for (std::size_t p = 0; p + 1 < jumps.size(); ++p) {
    std::optional<double> e0;
    double worst = 0;
    for (const auto& s : t.samples) {
      if (s.time <= jumps[p] || s.time >= jumps[p + 1]) continue;
      const double e = s.values[h] + s.values[v] * s.values[v] / (2 * g);
      if (!e0) e0 = e;
      worst = std::max(worst, std::fabs(e - *e0));
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("property: drops from random heights stay sound") {
  std::mt19937 rng(20261017);
  std::uniform_real_distribution<double> height(1.0, 14.5);
  const std::string base = read_model("bouncing_ball_plant.apr");
  for (int i = 0; i < 12; ++i) {
    const double h0 = height(rng);
    std::string src = base;
    const std::string anchor = "height=15,";
    src.replace(src.find(anchor), anchor.size(), "height=" + format_real(h0) + ",");
    auto m = build_model(src);
    auto t = run(*m, with_end(3));
    const auto hc = t.column("ball.height").value();
    const auto vc = t.column("ball.velocity").value();
    for (std::size_t j = 0; j < t.samples.size(); ++j) {
      CHECK(t.samples[j].values[hc] >= -1e-9);
      CHECK(std::fabs(t.samples[j].values[vc]) <= 60);
      if (j) CHECK(t.samples[j].time > t.samples[j - 1].time);
    }
    const auto jumps = jump_times(t);
    REQUIRE_FALSE(jumps.empty());
    CHECK(std::fabs(jumps[0] - impact_oracle(h0, 1)[0]) < 1e-6);
    for (const auto& e : t.events) {
      if (e.kind != "jump") continue;
      // Guard held before the jump; the action reversed and damped the velocity.
      CHECK(std::fabs(e.pre[hc]) <= 1e-9);
      CHECK(e.post[vc] == doctest::Approx(-k * e.pre[vc]).epsilon(1e-12));
      CHECK(e.post[hc] == e.pre[hc]);
    }
  }
}

TEST_CASE("bounces below value_tol end in a flow-stop before the accumulation point") {
  const double tz = zeno_time(15);
  CHECK(tz == doctest::Approx(7.0).epsilon(1e-3));
  auto t = run(*plant(), with_end(tz + 0.5));
  REQUIRE_FALSE(t.events.empty());
  const auto& last = t.events.back();
  CHECK(last.kind == "flow-stop");
  CHECK(last.time < tz);
  CHECK(last.time > tz - 1e-2);
  CHECK(value_at(t, "ball.tw", tz + 0.5) == doctest::Approx(tz + 0.5 - last.time).epsilon(1e-9));
}

TEST_CASE("RK4 error shrinks at fourth order on the drag flow") {
  auto m = build_model(apricot::testing::drag_model());
  // Independent reference: plain RK4 with dt = 1e-6.
  auto f = [](double v) { return -9.8 - 0.1 * v * std::fabs(v); };
  std::vector<double> ref(101);
  double v = 0;
  ref[0] = v;
  const int per = 10000;
  for (int i = 1; i <= 100 * per; ++i) {
    const double h = 1e-6;
    const double k1 = f(v), k2 = f(v + h / 2 * k1), k3 = f(v + h / 2 * k2), k4 = f(v + h * k3);
    v += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    if (i % per == 0) ref[i / per] = v;
  }
  // The closed form for a fall from rest cross-checks the reference.
  CHECK(ref[100] == doctest::Approx(-std::sqrt(98.0) * std::tanh(std::sqrt(0.98))).epsilon(1e-12));

  auto max_err = [&](double dt) {
    SimConfig c = with_end(1);
    c.dt = dt;
    auto t = run(*m, c);
    double worst = 0;
    for (int i = 0; i <= 100; ++i) worst = std::max(worst, std::fabs(value_at(t, "body.v", i * 1e-2) - ref[i]));
    return worst;
  };
  const double coarse = max_err(1e-2);
  const double fine = max_err(5e-3);
  CHECK(coarse > 0);
  CHECK(coarse / fine >= 8);
}

TEST_CASE("the conforming clock equals simulation time") {
  auto t = run(*plant(), with_end(4));
  const auto c = t.column("watch.c").value();
  for (const auto& s : t.samples) CHECK(std::fabs(s.values[c] - s.time) <= 1e-9 * std::max(s.time, 1.0));
}

TEST_CASE("lazy policy jumps at the same border instants") {
  auto cfg = with_end(6);
  auto eager = jump_times(run(*plant(), cfg));
  cfg.policy = Policy::Lazy;
  auto lazy = jump_times(run(*plant(), cfg));
  REQUIRE(eager.size() == lazy.size());
  for (std::size_t i = 0; i < eager.size(); ++i) CHECK(std::fabs(eager[i] - lazy[i]) < 1e-8);
}

TEST_CASE("synchronised jump fires both members on the pre-state") {
  auto m = build_model(apricot::testing::sync_model(false));
  auto t = run(*m, with_end(6));
  REQUIRE_FALSE(t.events.empty());
  const auto& e = t.events.front();
  CHECK(e.kind == "sync-jump");
  CHECK(e.name == "left.CL||right.CR");
  CHECK(e.time == doctest::Approx(5).epsilon(1e-12));
  // Hand oracle: pre (x, y) = (5, 2); parallel x := y, y := x gives (2, 5).
  const auto& left = m->components[0];
  Simulator s(*m, with_end(6));
  auto st = s.initial_state();
  st.store.write(left.variables[0].loc, Value::real(5));
  auto items = s.valid_compositions(st);
  REQUIRE(items.size() == 1);
  s.apply_jump(st, items[0], nullptr);
  CHECK(st.store.read(left.variables[0].loc).as_real() == 2);
  CHECK(st.store.read(*st.store.field(left.object, "y")).as_real() == 5);
  CHECK(st.store.read(left.tw).as_real() == 0);
}

TEST_CASE("overlapping synchronised writes raise write-conflict") {
  auto m = build_model(apricot::testing::sync_model(true));
  try {
    run(*m, with_end(6));
    FAIL("expected a write conflict");
  } catch (const SimError& e) {
    CHECK(e.rule_id() == "write-conflict");
  }
}

TEST_CASE("flow stops at a border without an enabled composition and tw counts the wait") {
  auto m = build_model(apricot::testing::flow_stop_model());
  auto t = run(*m, with_end(10));
  bool stopped = false;
  for (const auto& e : t.events)
    if (e.kind == "flow-stop") {
      stopped = true;
      CHECK(e.name == "tank.fill");
      CHECK(e.time == doctest::Approx(5).epsilon(1e-12));
    }
  CHECK(stopped);
  const auto tw = t.column("tank.tw").value();
  const auto x = t.column("tank.x").value();
  for (const auto& s : t.samples)
    if (s.time > 5 && s.time < 8) {
      CHECK(std::fabs(s.values[tw] - (s.time - 5)) <= 1e-9);
      CHECK(s.values[x] == doctest::Approx(5).epsilon(1e-12));
    }
  // The controller's write at c = 8 re-enables the tank, which resets and flows again.
  CHECK(value_at(t, "tank.x", 10) == doctest::Approx(2).epsilon(1e-9));
  CHECK(value_at(t, "tank.tw", 10) == 0);
}

TEST_CASE("corrected model: first impact synchronised, second impact stops the ball") {
  auto t = run(*corrected(), with_end(10));
  REQUIRE(t.events.size() == 2);
  CHECK(t.events[0].kind == "sync-jump");
  CHECK(t.events[0].name == "god.CompIR||ball.CompMJ");
  CHECK(t.events[0].prefix == "system.god.CompIR||ball.CompMJ");
  CHECK(t.events[1].kind == "flow-stop");
  const double stop = t.events[1].time;
  CHECK(std::fabs(stop - impact_oracle(15, 2)[1]) < 1e-6);
  CHECK(value_at(t, "ball.tw", 10) == doctest::Approx(10 - stop).epsilon(1e-9));
}

TEST_CASE("the verbatim model stops at its first impact") {
  // Positional binding swaps the roles: the jump scales the height by -k and keeps the velocity.
  eval::ExternalRegistry ext;
  apricot::testing::bind_resiliency(ext);
  auto m = build_model(read_model("bouncing_ball.apr"), &ext);
  auto t = run(*m, with_end(4));
  REQUIRE(t.events.size() == 2);
  CHECK(t.events[0].kind == "sync-jump");
  const auto h = t.column("ball.height").value();
  const auto v = t.column("ball.velocity").value();
  CHECK(t.events[0].post[v] == t.events[0].pre[v]);
  CHECK(t.events[0].post[h] == doctest::Approx(-k * t.events[0].pre[h]).epsilon(1e-12));
  CHECK(t.events[1].kind == "flow-stop");
  CHECK(t.events[1].time == t.events[0].time);
  CHECK(std::fabs(t.events[0].time - impact_oracle(15, 1)[0]) < 1e-6);
}

TEST_CASE("explore forks into both jumps and continuing") {
  auto m = build_model(apricot::testing::two_guard_model());
  SimConfig c = with_end(7);
  c.policy = Policy::Explore;
  auto r = Simulator(*m, c).explore();
  CHECK_FALSE(r.truncated);
  std::vector<std::string> first;
  for (const auto& n : r.nodes)
    if (n.parent == 0) first.push_back(n.label);
  CHECK(first == std::vector<std::string>{"tank.CA", "tank.CB", "continue"});
  REQUIRE(r.leaves.size() == 3);
  CHECK(value_at(r.leaves[0].second, "tank.x", 7) == doctest::Approx(2).epsilon(1e-9));
  CHECK(value_at(r.leaves[1].second, "tank.x", 7) == doctest::Approx(3).epsilon(1e-9));
  CHECK(value_at(r.leaves[2].second, "tank.x", 7) == doctest::Approx(7).epsilon(1e-9));
}

TEST_CASE("explore on a deterministic model is the eager run") {
  auto m = plant();
  SimConfig c = with_end(4);
  auto eager = run(*m, c);
  c.policy = Policy::Explore;
  auto r = Simulator(*m, c).explore();
  REQUIRE(r.leaves.size() == 1);
  CHECK_FALSE(r.truncated);
  const auto& t = r.leaves[0].second;
  REQUIRE(t.samples.size() == eager.samples.size());
  for (std::size_t i = 0; i < t.samples.size(); ++i) CHECK(t.samples[i].values == eager.samples[i].values);

  c.max_jumps = 1;
  auto cut = Simulator(*m, c).explore();
  CHECK(cut.truncated);
  REQUIRE(cut.leaves.size() == 1);
  CHECK(jump_times(cut.leaves[0].second).size() == 1);
}

TEST_CASE("explore respects the branch budget") {
  auto m = build_model(apricot::testing::two_guard_model());
  SimConfig c = with_end(7);
  c.policy = Policy::Explore;
  c.max_branches = 2;
  auto r = Simulator(*m, c).explore();
  CHECK(r.truncated);
  CHECK(r.leaves.size() == 2);
}

TEST_CASE("random policy is reproducible for a seed") {
  auto m = build_model(apricot::testing::two_guard_model());
  SimConfig c = with_end(40);
  c.policy = Policy::Random;
  c.seed = 7;
  std::ostringstream a, b;
  write_csv(run(*m, c), a);
  write_csv(run(*m, c), b);
  CHECK(a.str() == b.str());
  // Different seeds explore different paths over enough decisions.
  std::set<std::string> outcomes;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    c.seed = seed;
    std::ostringstream o;
    write_csv(run(*m, c), o);
    outcomes.insert(o.str());
  }
  CHECK(outcomes.size() > 1);
}

TEST_CASE("trace formats round-trip") {
  auto t = run(*corrected(), with_end(5));
  std::stringstream csv;
  write_csv(t, csv);
  auto back = read_csv(csv);
  CHECK(back.columns == t.columns);
  CHECK(back.components == t.components);
  REQUIRE(back.samples.size() == t.samples.size());
  for (std::size_t i = 0; i < t.samples.size(); ++i) {
    CHECK(back.samples[i].time == t.samples[i].time);
    CHECK(back.samples[i].values == t.samples[i].values);
    CHECK(back.samples[i].active == t.samples[i].active);
  }

  std::stringstream jl;
  write_jsonl(t, jl);
  auto j = read_jsonl(jl);
  CHECK(j.termination == t.termination);
  REQUIRE(j.events.size() == t.events.size());
  CHECK(j.events[0].name == t.events[0].name);
  CHECK(j.events[0].pre == t.events[0].pre);
  REQUIRE(j.samples.size() == t.samples.size());
  CHECK(j.samples.back().values == t.samples.back().values);

  std::stringstream ev;
  write_events_csv(t, ev);
  std::string header;
  std::getline(ev, header);
  CHECK(header == "time,kind,name,prefix");

  auto sel = select_columns(t, {"ball.height", "ball.@active"});
  CHECK(sel.columns == std::vector<std::string>{"ball.height"});
  CHECK(sel.components == std::vector<std::string>{"ball"});
  CHECK_THROWS(select_columns(t, {"nope"}));

  auto stats = column_stats(t);
  CHECK(stats[t.column("ball.height").value()].max == 15);

  std::stringstream bad("time,a\n1,x\n");
  CHECK_THROWS(read_csv(bad));
}

TEST_CASE("step log records the actions of every jump") {
  auto m = plant();
  SimConfig c = with_end(2);
  c.step_log = true;
  auto t = run(*m, c);
  REQUIRE_FALSE(t.steps.empty());
  CHECK(t.steps.front().prefix.to_string().rfind("system.ball.CompMJ", 0) == 0);
  CHECK(t.steps.front().time == doctest::Approx(impact_oracle(15, 1)[0]).epsilon(1e-6));
}

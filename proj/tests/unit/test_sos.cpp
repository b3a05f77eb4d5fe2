#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>

#include "apricot/parser/parser.hpp"
#include "apricot/sos/engine.hpp"

using namespace apricot;
using namespace apricot::sos;

namespace {

std::string read_model(const std::string& name) {
  std::ifstream in(std::string(APRICOT_MODELS_DIR) + "/" + name);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Parsed program plus a live engine over a fresh store.
struct World {
  parse::ParseResult parsed;
  std::unique_ptr<ClassTable> classes;
  Store store;
  std::unique_ptr<Engine> engine;
  std::vector<StepRecord> log;
  ObjectId sys;

  explicit World(const std::string& src, const std::string& system = {}) {
    parsed = parse::parse_source(src);
    REQUIRE_MESSAGE(parsed.ok(), src);
    classes = std::make_unique<ClassTable>(parsed.unit);
    engine = std::make_unique<Engine>(*classes, store);
    engine->set_log(&log);
    if (!system.empty()) sys = engine->instantiate(system, Prefix::root("system"));
  }

  Location loc(ObjectId obj, const std::string& path) {
    std::string rest = path;
    for (;;) {
      auto dot = rest.find('.');
      auto l = store.field(obj, rest.substr(0, dot));
      REQUIRE_MESSAGE(l, path);
      if (dot == std::string::npos) return *l;
      obj = store.read(*l).as_ref();
      rest = rest.substr(dot + 1);
    }
  }
  Value get(const std::string& path) { return store.read(loc(sys, path)); }
  ObjectId obj(const std::string& path) { return get(path).as_ref(); }

  void assign(const std::string& lhs, const std::string& rhs) {
    auto l = parse::parse_expression(lhs);
    auto r = parse::parse_expression(rhs);
    auto ctx = engine->context(sys);
    engine->exec_single_assignment(*l.expr, *r.expr, ctx, Prefix::root("system"));
  }

  /// Body of the Discrete method of the first class named `cls`.
  const std::vector<ast::StmtPtr>& discrete_body(const std::string& cls) {
    const ast::Method* m = classes->method(cls, ast::MethodKind::Discrete);
    REQUIRE(m);
    return m->body;
  }
};

std::string rule_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const SosError& e) {
    return e.rule_id();
  }
  return "<none>";
}

const char* kCounter = R"(
System S {
  Real x, y;
  Integer n = 0;
  Constant real c = 2;
  S() { x = 1; y = 0; }
  twice(Real a) { Return a * 2; }
  bump(Real r) { r = r + 1; }
  copy(real r) { r = r + 1; }
  Init() { x = 1; }
}
)";

}  // namespace

TEST_CASE("single assignment reads the pre-state") {
  World w(kCounter, "S");
  w.assign("x", "x + 1");
  CHECK(w.get("x").as_real() == 2.0);
  w.assign("x", "x + 1");
  CHECK(w.get("x").as_real() == 3.0);
  REQUIRE(!w.log.empty());
  CHECK(w.log.back().rule_id == "assign-single");
  CHECK(w.log.back().writes.size() == 1);
  CHECK(w.log.back().writes[0].before.as_real() == 2.0);
}

TEST_CASE("Integer literals widen into Real cells") {
  World w(kCounter, "S");
  w.assign("x", "7");
  CHECK(w.get("x").is_real());
  w.assign("n", "7");
  CHECK(w.get("n").is_integer());
}

TEST_CASE("constants cannot be reassigned") {
  World w(kCounter, "S");
  CHECK(w.get("c").as_real() == 2.0);
  CHECK(rule_of([&] { w.assign("c", "3"); }) == "constant.reassign");
  CHECK(w.get("c").as_real() == 2.0);
}

TEST_CASE("return binds the call value") {
  World w(kCounter, "S");
  w.assign("y", "twice(3)");
  CHECK(w.get("y").as_real() == 6.0);
  CHECK(w.store.frame_depth() == 0);
}

TEST_CASE("mathematic parameters alias, primitive parameters copy") {
  World w(kCounter, "S");
  w.assign("y", "bump(x)");
  CHECK(w.get("x").as_real() == 2.0);
  w.assign("y", "copy(x)");
  CHECK(w.get("x").as_real() == 2.0);
  // a non-lvalue argument gets a fresh location
  w.assign("y", "bump(x + 0)");
  CHECK(w.get("x").as_real() == 2.0);
}

TEST_CASE("sequential and parallel discrete semantics") {
  const char* src = R"(
SequentialAssignment Swap { Real x, y; Swap(){ x = 1; y = 0; } Discrete(){ x = y; y = x; } }
)";
  for (auto mode : {DiscreteMode::Sequential, DiscreteMode::Parallel}) {
    World w(src, "Swap");
    auto ctx = w.engine->context(w.sys);
    w.engine->exec_discrete(w.discrete_body("Swap"), mode, ctx, Prefix::root("system"));
    if (mode == DiscreteMode::Sequential) {
      CHECK(w.get("x").as_real() == 0.0);
      CHECK(w.get("y").as_real() == 0.0);
    } else {
      CHECK(w.get("x").as_real() == 0.0);
      CHECK(w.get("y").as_real() == 1.0);
    }
  }
}

TEST_CASE("parallel writes to one location conflict") {
  World w(R"(ParallelAssignment P { Real x; Discrete(){ x = 1; x = 2; } })", "P");
  auto ctx = w.engine->context(w.sys);
  CHECK(rule_of([&] { w.engine->exec_discrete(w.discrete_body("P"), DiscreteMode::Parallel, ctx, Prefix::root("s")); }) ==
        "write-conflict");
  CHECK(w.get("x").is_null());
  // sequentially the last write wins
  w.engine->exec_discrete(w.discrete_body("P"), DiscreteMode::Sequential, ctx, Prefix::root("s"));
  CHECK(w.get("x").as_real() == 2.0);
}

TEST_CASE("parallel assignment is invariant under statement permutation") {
  std::mt19937 rng(17);
  const std::vector<std::string> vars = {"a", "b", "c", "d"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> stmts;
    std::vector<std::string> targets = vars;
    std::shuffle(targets.begin(), targets.end(), rng);
    const int k = 1 + static_cast<int>(rng() % vars.size());
    for (int i = 0; i < k; ++i) {
      const auto& u = vars[rng() % vars.size()];
      const auto& v = vars[rng() % vars.size()];
      stmts.push_back(targets[i] + " = " + u + " * 2 - " + v + " + " + std::to_string(rng() % 5) + ";");
    }
    std::vector<double> init;
    for (std::size_t i = 0; i < vars.size(); ++i) init.push_back(static_cast<double>(rng() % 11) - 5.0);

    auto run = [&](const std::vector<std::string>& order) {
      std::string src = "ParallelAssignment P { Real a, b, c, d; Discrete(){ ";
      for (const auto& s : order) src += s + " ";
      src += "} }";
      World w(src, "P");
      for (std::size_t i = 0; i < vars.size(); ++i) w.store.write(w.loc(w.sys, vars[i]), Value::real(init[i]));
      auto ctx = w.engine->context(w.sys);
      w.engine->exec_discrete(w.discrete_body("P"), DiscreteMode::Parallel, ctx, Prefix::root("s"));
      std::vector<double> out;
      for (const auto& v : vars) out.push_back(w.get(v).as_real());
      return out;
    };
    auto base = run(stmts);
    // independent oracle: every right-hand side reads the initial values
    std::vector<double> expect = init;
    for (const auto& s : stmts) {
      auto idx = [&](const std::string& n) { return std::find(vars.begin(), vars.end(), n) - vars.begin(); };
      std::istringstream is(s);
      std::string t, eq, u, mul, two, minus, v, plus, cst;
      is >> t >> eq >> u >> mul >> two >> minus >> v >> plus >> cst;
      expect[idx(t)] = init[idx(u)] * 2 - init[idx(v)] + std::stod(cst);
    }
    CHECK(base == expect);
    auto perm = stmts;
    std::shuffle(perm.begin(), perm.end(), rng);
    CHECK(run(perm) == base);
  }
}

TEST_CASE("method frames are balanced at any nesting depth") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int depth = 1 + static_cast<int>(rng() % 5);
    std::string src = "System S { Real r; ";
    for (int i = 0; i < depth; ++i)
      src += "m" + std::to_string(i) + "(Real a){ Real loc = a + 1; Return m" + std::to_string(i + 1) + "(loc); } ";
    src += "m" + std::to_string(depth) + "(Real a){ Return a; } }";
    World w(src, "S");
    w.assign("r", "m0(0)");
    CHECK(w.get("r").as_real() == depth);
    CHECK(w.store.frame_depth() == 0);
    const auto invokes = std::count_if(w.log.begin(), w.log.end(), [](auto& r) { return r.rule_id == "method-invoke"; });
    const auto ends = std::count_if(w.log.begin(), w.log.end(), [](auto& r) { return r.rule_id == "method-end"; });
    CHECK(invokes == depth + 1);
    CHECK(ends == invokes);
  }
}

TEST_CASE("runaway recursion hits the frame limit and unwinds") {
  World w("System S { Real r; f(Real a){ Return f(a); } }", "S");
  w.engine->set_frame_limit(8);
  CHECK(rule_of([&] { w.assign("r", "f(1)"); }) == "frame-limit");
  CHECK(w.store.frame_depth() == 0);
}

TEST_CASE("local declarations and duplicate names") {
  World w("System S { Real r; f(){ Real a = 1; Real a = 2; Return a; } g(){ Real a = 1, b = a + 1; Return b; } }", "S");
  CHECK(rule_of([&] { w.assign("r", "f()"); }) == "declaration.duplicate");
  CHECK(w.store.frame_depth() == 0);
  w.assign("r", "g()");
  CHECK(w.get("r").as_real() == 2.0);
}

TEST_CASE("bouncing ball instance graph") {
  World w(read_model("bouncing_ball_corrected.apr"), "BouncingBall");

  SUBCASE("array declarations") {
    auto h = w.get("h");
    REQUIRE(h.is_array());
    CHECK(h.as_array().size() == 3);
    CHECK(w.store.read(h.as_array()[0]).as_real() == 15.0);
    CHECK(w.store.read(h.as_array()[0]).is_real());
  }

  SUBCASE("constructor wiring shares locations down the hierarchy") {
    Location top = w.loc(w.sys, "height");
    CHECK(w.store.same_location(top, w.loc(w.sys, "ball.height")));
    CHECK(w.store.same_location(top, w.loc(w.sys, "ball.moving.height")));
    CHECK(w.store.same_location(top, w.loc(w.sys, "ball.jump.height")));
    CHECK(w.store.same_location(top, w.loc(w.sys, "god.height")));
    CHECK(w.store.same_location(w.loc(w.sys, "velocity"), w.loc(w.sys, "ball.jump.velocity")));
    CHECK(w.store.same_location(w.loc(w.sys, "g"), w.loc(w.sys, "ball.moving.acceleration")));
    CHECK_FALSE(w.store.same_location(top, w.loc(w.sys, "velocity")));
    w.store.write(top, Value::real(4.5));
    CHECK(w.get("ball.moving.height").as_real() == 4.5);
  }

  SUBCASE("constancy propagates through aliases") {
    CHECK(w.store.cell(w.loc(w.sys, "god.k")).constant);
    CHECK(w.get("god.mass").as_real() == 5.0);
    auto ctx = w.engine->context(w.obj("god"));
    auto lhs = parse::parse_expression("k");
    auto rhs = parse::parse_expression("1");
    CHECK(rule_of([&] { w.engine->exec_single_assignment(*lhs.expr, *rhs.expr, ctx, Prefix::root("s")); }) ==
          "constant.reassign");
  }

  SUBCASE("anonymous dynamic with implicit constructor") {
    ObjectId idle = w.obj("god.idle");
    const Object& o = w.store.object(idle);
    CHECK(o.class_name.rfind("anonymous#", 0) == 0);
    REQUIRE(o.outer);
    CHECK(*o.outer == w.obj("god"));
    // the outer instance provides `t`
    CHECK(w.store.same_location(*w.store.field(idle, "t"), w.loc(w.sys, "t")));
    CHECK(w.get("god.reset").is_null());
  }

  SUBCASE("sync declarations from the system constructor") {
    auto& syncs = w.engine->sync_decls();
    REQUIRE(syncs.size() == 1);
    REQUIRE(syncs[0].members.size() == 2);
    CHECK(syncs[0].members[0] == std::make_pair(w.obj("god"), std::string("CompIR")));
    CHECK(syncs[0].members[1] == std::make_pair(w.obj("ball"), std::string("CompMJ")));
  }

  SUBCASE("Init") {
    w.log.clear();
    auto result = w.engine->run_init(w.sys, Prefix::root("system"));
    CHECK(w.get("height").as_real() == 15.0);
    CHECK(w.get("velocity").as_real() == 0.0);
    CHECK(w.get("t").as_real() == 0.0);
    CHECK(w.get("ball.moving.height").as_real() == 15.0);
    REQUIRE(result.starts.size() == 2);
    CHECK(result.starts[0].component == w.obj("god"));
    CHECK(result.starts[0].dynamic == w.obj("god.idle"));
    CHECK(result.starts[1].component == w.obj("ball"));
    CHECK(result.starts[1].dynamic == w.obj("ball.moving"));
    REQUIRE(result.config.statements.size() == 2);
    CHECK(result.config.statements[0].to_string() == "system.god.idle");
    CHECK(result.config.statements[1].to_string() == "system.ball.moving");
    bool saw = false;
    for (const auto& r : w.log)
      if (r.prefix.to_string() == "system.init().height=h[1]") saw = true;
    CHECK(saw);
    CHECK(w.log.front().prefix.to_string() == "system.init()");
  }
}

TEST_CASE("verbatim argument order wires height into the jump velocity") {
  World w(read_model("bouncing_ball.apr"), "BouncingBall");
  CHECK(w.store.same_location(w.loc(w.sys, "velocity"), w.loc(w.sys, "ball.jump.height")));
  CHECK(w.store.same_location(w.loc(w.sys, "height"), w.loc(w.sys, "ball.jump.velocity")));
}

TEST_CASE("Init errors") {
  SUBCASE("missing Init") {
    World w("System S { Real x; }", "S");
    CHECK(rule_of([&] { w.engine->run_init(w.sys, Prefix::root("system")); }) == "init.missing");
  }
  SUBCASE("two starts for one component") {
    World w(R"(
Dynamic D { Real x; Continuous(){ dot(x,1) == 1; } Invariant{ x in [0, 10]; }; }
Plant P { Dynamic a = new D(); Dynamic b = new D(); }
System S { Plant p = new P(); Init(){ p.a.start(); p.b.start(); } }
)",
            "S");
    CHECK(rule_of([&] { w.engine->run_init(w.sys, Prefix::root("system")); }) == "init.multiple-starts");
  }
  SUBCASE("start of a non-dynamic") {
    World w(R"(
ParallelAssignment J { Real x; Discrete(){ x = 0; } }
Plant P { Assignment j = new J(); }
System S { Plant p = new P(); Init(){ p.j.start(); } }
)",
            "S");
    CHECK(rule_of([&] { w.engine->run_init(w.sys, Prefix::root("system")); }) == "start.non-dynamic");
  }
}

TEST_CASE("object creation errors") {
  World w("Dynamic D { Real x; D(Real x){ this.x = x; } } System S { Real r; Dynamic d; }", "S");
  CHECK(rule_of([&] { w.assign("d", "new D()"); }) == "arity.mismatch");
  w.assign("d", "new D(r)");
  CHECK(w.store.same_location(w.loc(w.sys, "r"), w.loc(w.sys, "d.x")));
}

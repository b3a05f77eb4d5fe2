#include <doctest.h>

#include <random>
#include <set>

#include "apricot/core/config.hpp"
#include "apricot/core/interval.hpp"
#include "apricot/core/store.hpp"
#include "apricot/core/types.hpp"

using namespace apricot;

TEST_SUITE("store") {
  TEST_CASE("fresh locations start at Null and are distinct") {
    Store s;
    Location a = s.fresh_location(SemType::mathematic(Scalar::Real));
    Location b = s.fresh_location(SemType::mathematic(Scalar::Boolean));
    CHECK(a != b);
    CHECK(s.read(a).is_null());
    CHECK(s.read(b).is_null());
    CHECK(s.cell(b).type == SemType::mathematic(Scalar::Boolean));
  }

  TEST_CASE("n fresh calls give n distinct locations") {
    Store s;
    for (int i = 0; i < 5; ++i) s.fresh_location(SemType::mathematic(Scalar::Real));
    Location sixth = s.fresh_location(SemType::mathematic(Scalar::Boolean));
    std::set<std::uint32_t> seen;
    for (std::uint32_t i = 0; i < s.location_count(); ++i) seen.insert(s.resolve(Location{i}).index);
    CHECK(seen.size() == 6);
    CHECK(s.read(sixth).is_null());
  }

  TEST_CASE("aliases observe each other's writes") {
    Store s;
    ObjectId ball = s.new_object("Ball");
    ObjectId system = s.new_object("BouncingBall");
    Location h = s.fresh_location(SemType::mathematic(Scalar::Real));
    s.add_field(system, "height", h);
    s.add_field(ball, "height", h);
    s.write(*s.own_field(ball, "height"), Value::real(7));
    CHECK(s.read(*s.own_field(system, "height")) == Value::real(7));
  }

  TEST_CASE("rebinding follows the last location") {
    Store s;
    s.push_frame(ObjectId{0});
    Location a = s.fresh_location(SemType::mathematic(Scalar::Real));
    Location b = s.fresh_location(SemType::mathematic(Scalar::Real));
    s.write(a, Value::real(1));
    s.write(b, Value::real(2));
    s.bind_alias("x", a);
    s.bind_alias("x", b);
    CHECK(s.read(*s.lookup_local("x")) == Value::real(2));
  }

  TEST_CASE("three names on one location after merges") {
    Store s;
    s.push_frame(ObjectId{0});
    Location a = s.fresh_location(SemType::mathematic(Scalar::Real));
    Location b = s.fresh_location(SemType::mathematic(Scalar::Real));
    Location c = s.fresh_location(SemType::mathematic(Scalar::Real));
    s.bind_alias("a", a);
    s.bind_alias("b", b);
    s.bind_alias("c", c);
    s.merge(b, a);
    s.merge(c, b);
    s.write(*s.lookup_local("b"), Value::integer(42));
    for (const char* n : {"a", "b", "c"}) CHECK(s.read(*s.lookup_local(n)) == Value::integer(42));
  }

  TEST_CASE("merge keeps the target value and inherits constancy") {
    Store s;
    Location field = s.fresh_location(SemType::mathematic(Scalar::Real));
    Location g = s.fresh_location(SemType::primitive(Scalar::Real));
    s.write(g, Value::real(9.8));
    s.set_constant(g, true);
    s.merge(field, g);
    CHECK(s.read(field) == Value::real(9.8));
    CHECK(s.cell(field).constant);
  }

  TEST_CASE("frames hide locals after pop") {
    Store s;
    s.push_frame(ObjectId{0});
    s.bind_alias("outer", s.fresh_location(SemType::unknown()));
    auto before = s.visible_locals();
    s.push_frame(ObjectId{0});
    s.bind_alias("a", s.fresh_location(SemType::unknown()));
    s.bind_alias("b", s.fresh_location(SemType::unknown()));
    CHECK_FALSE(s.lookup_local("outer"));
    s.pop_frame();
    CHECK(s.visible_locals() == before);
    CHECK_FALSE(s.lookup_local("a"));
  }

  TEST_CASE("nested block frames see the enclosing method frame") {
    Store s;
    s.push_frame(ObjectId{0});
    s.bind_alias("x", s.fresh_location(SemType::unknown()));
    s.push_frame(ObjectId{0}, false);
    CHECK(s.lookup_local("x"));
  }

  TEST_CASE("anonymous objects find fields of their enclosing instance") {
    Store s;
    ObjectId god = s.new_object("God");
    Location t = s.fresh_location(SemType::mathematic(Scalar::Real));
    s.add_field(god, "t", t);
    ObjectId idle = s.new_object("anonymous#1", god);
    CHECK_FALSE(s.own_field(idle, "t"));
    REQUIRE(s.field(idle, "t"));
    CHECK(s.same_location(*s.field(idle, "t"), t));
  }

  TEST_CASE("property: read-after-write through random alias groups") {
    std::mt19937 rng(1234);
    for (int trial = 0; trial < 100; ++trial) {
      Store s;
      const int n = 2 + static_cast<int>(rng() % 8);
      std::vector<Location> locs;
      for (int i = 0; i < n; ++i) locs.push_back(s.fresh_location(SemType::mathematic(Scalar::Real)));
      // independent oracle: explicit group labels maintained by relabelling
      std::vector<int> group(n);
      for (int i = 0; i < n; ++i) group[i] = i;
      for (int m = 0; m < n; ++m) {
        int a = static_cast<int>(rng() % n), b = static_cast<int>(rng() % n);
        s.merge(locs[a], locs[b]);
        int ga = group[a], gb = group[b];
        for (auto& g : group)
          if (g == ga) g = gb;
      }
      int w = static_cast<int>(rng() % n);
      s.write(locs[w], Value::integer(trial + 1000));
      for (int i = 0; i < n; ++i) {
        bool aliased = group[i] == group[w];
        CHECK(s.same_location(locs[i], locs[w]) == aliased);
        if (aliased) CHECK(s.read(locs[i]) == Value::integer(trial + 1000));
      }
    }
  }

  TEST_CASE("derivative slots are created once per (variable, order)") {
    Store s;
    Location x = s.fresh_location(SemType::mathematic(Scalar::Real));
    CHECK_FALSE(s.derivative_slot(x, 1));
    Location d1 = s.ensure_derivative_slot(x, 1);
    CHECK(s.same_location(s.ensure_derivative_slot(x, 1), d1));
    CHECK(s.ensure_derivative_slot(x, 2) != d1);
  }

  TEST_CASE("copying a store forks an independent branch") {
    Store s;
    Location x = s.fresh_location(SemType::mathematic(Scalar::Real));
    s.write(x, Value::real(1));
    Store fork = s;
    fork.write(x, Value::real(2));
    CHECK(s.read(x) == Value::real(1));
    CHECK(fork.read(x) == Value::real(2));
  }
}

TEST_SUITE("prefix") {
  TEST_CASE("extend is persistent") {
    Prefix root = Prefix::root("system");
    Prefix init = root.extend("init()");
    Prefix stmt = init.extend("height=h[1]");
    CHECK(root.to_string() == "system");
    CHECK(init.to_string() == "system.init()");
    CHECK(stmt.to_string() == "system.init().height=h[1]");
    CHECK(stmt.size() == init.size() + 1);
    CHECK(stmt.pop() == init);
  }

  TEST_CASE("the system head cannot be popped") { CHECK_THROWS(Prefix::root("system").pop()); }

  TEST_CASE("replaying step deltas reproduces the final store") {
    Store s;
    Location a = s.fresh_location(SemType::mathematic(Scalar::Real));
    Location b = s.fresh_location(SemType::mathematic(Scalar::Real));
    Store initial = s;
    std::vector<StepRecord> log;
    auto write = [&](Location l, Value v) {
      StepRecord r{Prefix::root("system"), "assign-single", {{l, s.read(l), v}}, 0.0};
      s.write(l, v);
      log.push_back(r);
    };
    write(a, Value::real(1.5));
    write(b, Value::integer(3));
    write(a, Value::boolean(true));
    replay(initial, log);
    CHECK(initial.read(a) == s.read(a));
    CHECK(initial.read(b) == s.read(b));
    CHECK(format_step(log[1]) == "t=0 system :: assign-single :: @1:null->3");
  }
}

TEST_SUITE("values and intervals") {
  TEST_CASE("Inf comparison laws") {
    const std::vector<Value> finite = {Value::real(-1e300), Value::integer(-3), Value::real(0.0), Value::integer(7),
                                       Value::real(1e300)};
    for (const auto& v : finite) {
      CHECK(compare_numbers(Value::neg_inf(), v) < 0);
      CHECK(compare_numbers(v, Value::inf()) < 0);
    }
    CHECK(compare_numbers(Value::inf(), Value::inf()) == 0);
    CHECK(compare_numbers(Value::neg_inf(), Value::neg_inf()) == 0);
    CHECK(compare_numbers(Value::neg_inf(), Value::inf()) < 0);
    CHECK(compare_numbers(Value::integer(2), Value::real(2.0)) == 0);
  }

  TEST_CASE("bouncing-ball intervals") {
    CHECK(Interval{Value::integer(0), Value::integer(15), false, false}.valid());
    CHECK(Interval{Value::integer(0), Value::inf(), false, true}.valid());
    CHECK_FALSE(Interval{Value::integer(1), Value::integer(2), true, true}.valid());
    CHECK_FALSE(Interval{Value::neg_inf(), Value::inf(), false, false}.valid());
  }

  TEST_CASE("property: validity over an enumerated bound grid") {
    // Expected validity per bound kind: 0 = -Inf, 1 = finite, 2 = Inf.
    const Value bounds[] = {Value::neg_inf(), Value::integer(-1), Value::real(0.5), Value::integer(3), Value::inf()};
    auto kind = [](const Value& v) { return v.is_neg_inf() ? 0 : v.is_inf() ? 2 : 1; };
    auto numeric = [](const Value& v) { return v.is_neg_inf() ? -1e308 : v.is_inf() ? 1e308 : v.as_real(); };
    int valid_count = 0;
    for (const auto& lo : bounds)
      for (const auto& hi : bounds)
        for (bool lo_open : {false, true})
          for (bool hi_open : {false, true}) {
            // lower side legal forms: "[finite" or "(-Inf"; upper: "finite]" or "Inf)"
            bool lower_ok = (kind(lo) == 1 && !lo_open) || (kind(lo) == 0 && lo_open);
            bool upper_ok = (kind(hi) == 1 && !hi_open) || (kind(hi) == 2 && hi_open);
            bool expected = lower_ok && upper_ok && numeric(lo) <= numeric(hi);
            Interval iv{lo, hi, lo_open, hi_open};
            CHECK(iv.valid() == expected);
            valid_count += expected;
          }
    // lower sides {-Inf,-1,0.5,3} x upper sides {-1,0.5,3,Inf} ordered pairs
    CHECK(valid_count == 13);
  }

  TEST_CASE("value rendering") {
    CHECK(Value::null().to_string() == "null");
    CHECK(Value::neg_inf().to_string() == "-Inf");
    CHECK(Value::real(0.1).to_string() == "0.10000000000000001");
    CHECK(Value::integer(-4).to_string() == "-4");
  }
}

TEST_SUITE("types") {
  ParentLookup parents = [](const std::string& c) -> std::optional<std::string> {
    if (c == "Moving") return std::string("Dynamic");
    if (c == "Jump") return std::string("ParallelAssignment");
    if (c == "FastJump") return std::string("Jump");
    return std::nullopt;
  };

  TEST_CASE("interface and class subtyping") {
    CHECK(is_subtype(SemType::class_type("Moving"), SemType::interface_type("Dynamic"), parents));
    CHECK(is_subtype(SemType::class_type("FastJump"), SemType::interface_type("Assignment"), parents));
    CHECK(is_subtype(SemType::interface_type("SequentialAssignment"), SemType::interface_type("Assignment"), parents));
    CHECK_FALSE(is_subtype(SemType::class_type("Moving"), SemType::interface_type("Assignment"), parents));
    CHECK_FALSE(is_subtype(SemType::interface_type("Assignment"), SemType::interface_type("ParallelAssignment"), parents));
  }

  TEST_CASE("scalar widening") {
    CHECK(is_subtype(SemType::mathematic(Scalar::Integer), SemType::mathematic(Scalar::Real), parents));
    CHECK_FALSE(is_subtype(SemType::mathematic(Scalar::Real), SemType::mathematic(Scalar::Integer), parents));
    CHECK_FALSE(is_subtype(SemType::mathematic(Scalar::Real), SemType::mathematic(Scalar::Boolean), parents));
    CHECK(is_subtype(SemType::null_type(), SemType::class_type("Moving"), parents));
  }
}

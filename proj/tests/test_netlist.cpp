#include "doctest.h"

#include "designs.hpp"
#include "ir/dag.hpp"
#include "ir/netlist.hpp"
#include "ir/netlist_interp.hpp"

using namespace mnt;

namespace {

std::string parse_error(const std::string& text) {
  try {
    parse_netlist(text);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

BigUint eval1(const std::string& body, unsigned w) {
  auto p = parse_netlist("design t\nreg out " + std::to_string(w) + "\n" + body + "\nnext out = v\n");
  auto t = interpret_netlist(p, 1);
  return t.snapshots.at(0).at(0);
}

} // namespace

TEST_CASE("counter parses into one register and two instructions") {
  auto p = parse_netlist(testdesigns::kCounter4);
  CHECK(p.name == "counter");
  CHECK(p.registers.size() == 1);
  CHECK(p.instructions.size() == 2);
  CHECK(p.sinks().size() == 1);
}

TEST_CASE("duplicate wire definition is rejected") {
  auto e = parse_error("design d\nreg r 4\nw:4 = add r, 4'h1\nw:4 = add r, 4'h2\nnext r = w\n");
  CHECK(e.find("duplicate definition of w") != std::string::npos);
  CHECK(e.rfind("4:1:", 0) == 0);
}

TEST_CASE("combinational loop is rejected") {
  auto e = parse_error("design d\na:1 = not b\nb:1 = not a\n");
  CHECK(e.find("combinational cycle") != std::string::npos);
}

TEST_CASE("width and reference errors carry positions") {
  CHECK(parse_error("design d\nreg r 4\nw:4 = add r, 3'h1\nnext r = w\n").find("width mismatch") !=
        std::string::npos);
  auto e = parse_error("design d\nreg r 4\nnext r = q\n");
  CHECK(e.find("undefined reference to q") != std::string::npos);
  CHECK(e.rfind("3:10:", 0) == 0);
  CHECK(parse_error("design d\nreg r 4\nnext r = 4'h1F\n").find("does not fit") != std::string::npos);
  CHECK(parse_error("design d\nmem m 8 3 local\n").find("power of two") != std::string::npos);
  CHECK(parse_error("reg r 4\n").find("missing design") != std::string::npos);
}

TEST_CASE("counter interpretation and wrap-around") {
  auto p = parse_netlist(testdesigns::kCounter4);
  auto t = interpret_netlist(p, 3);
  REQUIRE(t.snapshots.size() == 3);
  CHECK(t.snapshots[0][0] == 1);
  CHECK(t.snapshots[1][0] == 2);
  CHECK(t.snapshots[2][0] == 3);
  auto t20 = interpret_netlist(p, 20);
  CHECK(t20.snapshots.back()[0] == 4);
}

TEST_CASE("xorshift-128 netlist matches scalar generator") {
  auto p = parse_netlist(testdesigns::kXorshift);
  const int n = 500;
  auto t = interpret_netlist(p, n);
  testdesigns::Xorshift128 g;
  for (int v = 0; v < n; ++v) {
    uint32_t w = g.next();
    REQUIRE(t.snapshots[v][3] == w);
    REQUIRE(t.snapshots[v][0] == g.x);
  }
}

TEST_CASE("operator semantics on declared widths") {
  CHECK(eval1("v:8 = sra 8'h90, 3'd2", 8) == 0xE4);
  CHECK(eval1("v:8 = sra 8'h90, 4'd9", 8) == 0xFF);
  CHECK(eval1("v:8 = shr 8'h90, 4'd9", 8) == 0);
  CHECK(eval1("v:8 = shl 8'h91, 3'd1", 8) == 0x22);
  CHECK(eval1("v:1 = lts 4'h8, 4'h7", 1) == 1);
  CHECK(eval1("v:1 = ltu 4'h8, 4'h7", 1) == 0);
  CHECK(eval1("v:12 = concat 4'hA, 8'h5C", 12) == 0xA5C);
  CHECK(eval1("v:4 = slice 12'hA5C, 4", 4) == 0x5);
  CHECK(eval1("v:20 = sub 20'h0, 20'h1", 20) == 0xFFFFF);
  CHECK(eval1("v:3 = not 3'h5", 3) == 2);
  CHECK(eval1("v:8 = mux 1'h0, 8'h1, 8'h2", 8) == 2);
}

TEST_CASE("memories read old contents and apply stores in source order") {
  const char* text = R"(design m
mem m 8 4 local init 1 2 3 4
reg r 8 = 0
reg a 2 = 0
d:8 = load m, a
na:2 = add a, 2'h1
store m, a, 8'h10, 1'h1
store m, a, 8'h20, 1'h1
next r = d
next a = na
)";
  auto p = parse_netlist(text);
  auto t = interpret_netlist(p, 2);
  CHECK(t.snapshots[0][0] == 1);
  CHECK(t.snapshots[1][0] == 2);
  CHECK(t.memories[0].values[0] == 0x20);
  CHECK(t.memories[0].values[1] == 0x20);
  CHECK(t.memories[0].values[2] == 3);
}

TEST_CASE("failing expect halts before commit") {
  const char* text = R"(design e
reg c 8 = 0
n:8 = add c, 8'h1
next c = n
f:1 = eq c, 8'h5
p:1 = eq c, 8'h2
display p, c
expect f, 1'h0
)";
  auto p = parse_netlist(text);
  auto t = interpret_netlist(p, 100);
  REQUIRE(t.stop.has_value());
  CHECK(t.stop->vcycle == 5);
  CHECK(t.stop->eids == std::vector<uint32_t>{1});
  CHECK(t.snapshots.size() == 5);
  CHECK(t.snapshots.back()[0] == 5);
  REQUIRE(t.displays.size() == 1);
  CHECK(t.displays[0].vcycle == 2);
  CHECK(t.displays[0].value == 2);
}

TEST_CASE("printer output parses back to an equal program") {
  for (const char* text : {testdesigns::kCounter4, testdesigns::kXorshift}) {
    auto p = parse_netlist(text);
    auto q = parse_netlist(print_netlist(p));
    CHECK(p == q);
  }
  const char* mem = "design m\nmem m 20 4 global init 1 2 3 0xfffff\nreg a 2\nd:20 = load m, a\nexpect d, d\n";
  auto p = parse_netlist(mem);
  CHECK(parse_netlist(print_netlist(p)) == p);
}

TEST_CASE("dependence graph sources and sinks") {
  auto counter = build_dag(parse_netlist(testdesigns::kCounter4));
  CHECK(counter.sources.size() == 1);
  CHECK(counter.sinks.size() == 1);
  CHECK(counter.is_acyclic());

  // Two registers sharing gates: g1 feeds both nexts.
  const char* fig = R"(design two
reg a 1 = 0
reg b 1 = 1
g1:1 = and a, b
g2:1 = xor g1, a
g3:1 = or g1, b
next a = g2
next b = g3
)";
  auto g = build_dag(parse_netlist(fig));
  CHECK(g.sources.size() == 2);
  CHECK(g.sinks.size() == 2);
  CHECK(g.nodes[0].succs.size() == 2);
  CHECK(g.is_acyclic());

  auto e = build_dag(parse_netlist("design e\nreg a 4\nexpect a, 4'h0\n"));
  REQUIRE(e.sinks.size() == 1);
  CHECK(e.nodes[e.sinks[0]].preds.size() == 1);
}

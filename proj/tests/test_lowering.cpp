#include "doctest.h"

#include "designs.hpp"
#include "driver/generators.hpp"
#include "ir/lower_interp.hpp"
#include "ir/lowering.hpp"
#include "ir/netlist_interp.hpp"

#include <random>

using namespace mnt;
using low::Op;

namespace {

size_t count_ops(const low::Process& p, Op op) {
  size_t n = 0;
  for (const auto& in : p.body)
    n += in.op == op;
  return n;
}

size_t count_non_set(const low::Process& p) {
  size_t n = 0;
  for (const auto& in : p.body)
    n += in.op != Op::Set;
  return n;
}

void check_equivalent(const std::string& text, uint64_t vcycles) {
  auto n = parse_netlist(text);
  auto ref = interpret_netlist(n, vcycles);
  auto l = lower(n);
  low::validate_lower(l);
  auto got = interpret_lower(l, vcycles);
  auto d = compare_traces(ref, got);
  INFO(d.message);
  CHECK(d.equal);
}

} // namespace

TEST_CASE("16-bit add lowers to one ADD") {
  auto l = lower(parse_netlist("design a\nreg x 16\nreg y 16\ns:16 = add x, y\nnext x = s\n"));
  REQUIRE(l.processes.size() == 1);
  CHECK(count_non_set(l.processes[0]) == 1);
  CHECK(count_ops(l.processes[0], Op::Add) == 1);
}

TEST_CASE("20-bit add wraps through an ADD/ADDC chain") {
  auto n = parse_netlist("design a\nreg x 20 = 0xfffff\nreg y 20 = 1\ns:20 = add x, y\nnext x = s\n");
  auto l = lower(n);
  CHECK(count_ops(l.processes[0], Op::Add) == 1);
  CHECK(count_ops(l.processes[0], Op::Addc) == 1);
  auto t = interpret_lower(l, 1);
  // Independent arbitrary-precision expectation truncated to 20 bits.
  BigUint expected = (BigUint(0xFFFFF) + BigUint(1)) & ((BigUint(1) << 20) - 1);
  CHECK(t.snapshots[0][0] == expected);
  CHECK(t.snapshots[0][0] == 0);
}

TEST_CASE("1-bit xor is a single XOR") {
  auto l = lower(parse_netlist("design a\nreg x 1\nreg y 1 = 1\ns:1 = xor x, y\nnext x = s\n"));
  CHECK(count_non_set(l.processes[0]) == 1);
  CHECK(count_ops(l.processes[0], Op::Xor) == 1);
  auto t = interpret_lower(l, 2);
  CHECK(t.snapshots[0][0] == 1);
  CHECK(t.snapshots[1][0] == 0);
}

TEST_CASE("lowered counter and expect halting") {
  auto l = lower(parse_netlist(testdesigns::kCounter4));
  auto t = interpret_lower(l, 3);
  CHECK(t.snapshots[0][0] == 1);
  CHECK(t.snapshots[2][0] == 3);

  auto e = lower(parse_netlist("design e\nreg c 8\nn:8 = add c, 8'h1\nnext c = n\nexpect c, 8'h0\n"));
  auto te = interpret_lower(e, 20);
  // The EXPECT compares against zero, so it fires on the second vcycle.
  REQUIRE(te.stop.has_value());
  CHECK(te.stop->vcycle == 1);
  auto e5 = lower(parse_netlist("design e\nreg c 8\nn:8 = add c, 8'h1\nnext c = n\nf:1 = eq c, 8'h5\n"
                                "expect f, 1'h0\n"));
  auto t5 = interpret_lower(e5, 20);
  REQUIRE(t5.stop.has_value());
  CHECK(t5.stop->vcycle == 5);
  CHECK(t5.stop->eids == std::vector<uint32_t>{0});
  CHECK(t5.snapshots.size() == 5);
}

TEST_CASE("local memory too large for a scratchpad is rejected") {
  try {
    lower(parse_netlist("design m\nmem big 16 32768 local\nreg a 15\nd:16 = load big, a\nexpect d, d\n"));
    FAIL("expected an error");
  } catch (const CompileError& e) {
    CHECK(std::string(e.what()).find("global") != std::string::npos);
  }
}

TEST_CASE("every operator matches the netlist oracle across widths") {
  const unsigned widths[] = {1, 5, 15, 16, 17, 20, 31, 32, 33, 48, 64, 100, 255, 256};
  const char* binops[] = {"and", "or", "xor", "add", "sub", "eq", "ltu", "lts", "shl", "shr", "sra"};
  std::mt19937_64 rng(5);
  for (unsigned w : widths) {
    for (const char* op : binops) {
      for (int variant = 0; variant < 2; ++variant) {
        std::string ws = std::to_string(w);
        bool cmp = std::string(op) == "eq" || std::string(op) == "ltu" || std::string(op) == "lts";
        bool shift = std::string(op).size() == 3 && (op[0] == 's' && op[1] != 'u');
        std::string rw = cmp ? "1" : ws;
        std::string text = "design t\nreg a " + ws + " = 0x" + to_hex(truncate(BigUint(rng()) << 70 | rng(), w)) +
                           "\nreg b " + ws + " = 0x" + to_hex(truncate(BigUint(rng()), w)) + "\nreg r " + rw +
                           "\nreg k 9 = 0\n";
        // Keep a and b moving: a += b ^ k-derived, b rotates.
        text += "kk:9 = add k, 9'h7\nnext k = kk\n";
        text += "bs:" + ws + " = shl b, 9'd3\nbx:" + ws + " = xor bs, a\nnb:" + ws + " = add bx, " + ws + "'h1\n";
        text += "na:" + ws + " = sub a, b\nnext a = na\nnext b = nb\n";
        std::string amt = variant == 0 ? "k" : "9'd" + std::to_string(rng() % (w + 2));
        if (shift)
          text += "v:" + rw + " = " + op + " a, " + amt + "\n";
        else
          text += "v:" + rw + " = " + op + " a, " + (variant == 0 ? "b" : "a") + "\n";
        text += "next r = v\n";
        INFO(text);
        check_equivalent(text, 40);
      }
    }
    std::string ws = std::to_string(w);
    std::string text = "design t\nreg a " + ws + " = 1\nreg r " + ws + "\nreg s 1 = 1\n";
    text += "n:" + ws + " = not a\nm:" + ws + " = mux s, n, a\nns:1 = not s\nnext s = ns\n";
    text += "p:" + ws + " = add m, " + ws + "'h1\nnext a = p\nnext r = m\n";
    if (w > 2 && w <= 253)
      text += "reg q " + std::to_string(w - 2) + "\nsl:" + std::to_string(w - 2) + " = slice a, 1\nnext q = sl\n"
              "reg c " + std::to_string(w + 3) + "\ncc:" + std::to_string(w + 3) + " = concat 3'h5, a\nnext c = cc\n";
    INFO(text);
    check_equivalent(text, 30);
  }
}

TEST_CASE("random designs lower to equivalent programs") {
  for (uint64_t seed = 1; seed <= 40; ++seed) {
    RandomDagParams p;
    p.seed = seed;
    p.instructions = 150;
    p.max_width = seed % 3 == 0 ? 256 : 64;
    p.global_memory = seed % 4 == 0;
    auto text = gen_random_dag(p);
    INFO("seed " << seed);
    check_equivalent(text, 100);
  }
}

TEST_CASE("memory generators lower to equivalent programs") {
  check_equivalent(gen_fifo(1024), 600);
  check_equivalent(gen_ram(1024), 300);
  check_equivalent(gen_ram(64 * 1024), 200);
  check_equivalent(gen_counters(5), 20);
}

TEST_CASE("lower text form round-trips") {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    RandomDagParams p;
    p.seed = seed;
    p.global_memory = true;
    auto l = lower(parse_netlist(gen_random_dag(p)));
    auto text = low::print_lower(l);
    auto back = low::parse_lower(text);
    CHECK(back == l);
    CHECK(low::print_lower(back) == text);
  }
}

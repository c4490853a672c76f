#include "driver/generators.hpp"

#include <random>
#include <sstream>
#include <vector>

#include "ir/bits.hpp"

namespace mnt {

namespace {

unsigned log2_exact(uint64_t v) {
  unsigned k = 0;
  while ((uint64_t(1) << k) < v)
    ++k;
  return k;
}

std::string hex(uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

} // namespace

std::string gen_counters(unsigned count, unsigned width) {
  std::ostringstream os;
  os << "design counters" << count << "\n";
  for (unsigned i = 0; i < count; ++i) {
    os << "reg c" << i << " " << width << " = 0\n";
    os << "n" << i << ":" << width << " = add c" << i << ", " << width << "'d" << (i % 7 + 1) << "\n";
    os << "next c" << i << " = n" << i << "\n";
  }
  return os.str();
}

std::string gen_fifo(uint64_t bytes) {
  const uint64_t depth = bytes / 2;
  const unsigned aw = log2_exact(depth);
  const char* kind = depth <= 16384 ? "local" : "global";
  std::ostringstream os;
  os << "design fifo" << bytes / 1024 << "k\n";
  os << "mem q 16 " << depth << " " << kind << "\n";
  os << "reg rptr " << aw << " = 0\n";
  os << "reg wptr " << aw << " = " << depth / 2 << "\n";
  os << "reg acc 16 = 0\n";
  os << "d:16 = load q, rptr\n";
  os << "store q, wptr, acc, 1'h1\n";
  os << "nr:" << aw << " = add rptr, " << aw << "'h1\n";
  os << "nw:" << aw << " = add wptr, " << aw << "'h1\n";
  os << "s:16 = add acc, d\n";
  os << "na:16 = add s, 16'h1\n";
  os << "next rptr = nr\n";
  os << "next wptr = nw\n";
  os << "next acc = na\n";
  return os.str();
}

std::string gen_ram(uint64_t bytes) {
  const uint64_t depth = bytes / 2;
  const unsigned aw = log2_exact(depth);
  const char* kind = depth <= 16384 ? "local" : "global";
  std::ostringstream os;
  os << "design ram" << bytes / 1024 << "k\n";
  os << "mem m 16 " << depth << " " << kind << "\n";
  os << "reg x 32 = 123456789\nreg y 32 = 362436069\nreg z 32 = 521288629\nreg w 32 = 88675123\n";
  os << "reg acc 16 = 0\n";
  os << "xs:32 = shl x, 5'd11\nt:32 = xor x, xs\nt8:32 = shr t, 5'd8\ntt:32 = xor t, t8\n";
  os << "w19:32 = shr w, 5'd19\nww:32 = xor w, w19\nnw:32 = xor ww, tt\n";
  os << "ra:" << aw << " = slice nw, 0\n";
  os << "wa:" << aw << " = slice nw, " << 32 - aw << "\n";
  os << "d:16 = load m, ra\n";
  os << "d1:16 = add d, 16'h1\n";
  os << "store m, wa, d1, 1'h1\n";
  os << "na:16 = add acc, d\n";
  os << "next x = y\nnext y = z\nnext z = w\nnext w = nw\nnext acc = na\n";
  return os.str();
}

std::string gen_logic_chain() {
  return R"(design chain
reg a 16 = 0x1234
reg b 16 = 0x0f00
reg c 16 = 0x00ff
reg d 16 = 0x8001
reg out 16 = 0
na:16 = add a, 16'h3
nb:16 = add b, 16'h101
nc:16 = add c, 16'h7
nd:16 = add d, 16'h1f
x1:16 = and a, 16'hf
x2:16 = or x1, b
x3:16 = and c, 16'h3
x4:16 = or x2, x3
x5:16 = xor d, 16'h1
x6:16 = or x4, x5
next a = na
next b = nb
next c = nc
next d = nd
next out = x6
)";
}

namespace {

class DagGenerator {
public:
  explicit DagGenerator(const RandomDagParams& p) : p_(p), rng_(p.seed * 0x9E3779B97F4A7C15ull + 17) {}

  std::string run() {
    os_ << "design rdag" << p_.seed << "\n";
    declare();
    while (count_ < p_.instructions)
      p_.logic_heavy ? logic_step() : step();
    finish();
    return os_.str();
  }

private:
  struct Val {
    std::string name;
    unsigned width;
  };
  struct Mem {
    std::string name;
    unsigned width;
    uint64_t depth;
  };

  uint64_t below(uint64_t n) { return n <= 1 ? 0 : rng_() % n; }
  bool chance(unsigned percent) { return below(100) < percent; }

  unsigned pick_width() {
    static const unsigned widths[] = {1, 2, 3, 4, 5, 7, 8, 9, 12, 15, 16, 17, 20, 24, 31, 32, 33, 40, 48, 63, 64,
                                      80, 100, 128, 160, 200, 256};
    std::vector<unsigned> ok;
    for (unsigned w : widths)
      if (w <= p_.max_width)
        ok.push_back(w);
    // Favor narrow values.
    size_t n = ok.size();
    size_t a = below(n), b = below(n);
    return ok[std::min(a, b)];
  }

  std::string konst(unsigned w) {
    BigUint v = 0;
    for (unsigned i = 0; i < w; i += 64)
      v |= BigUint(rng_()) << i;
    if (chance(30))
      v &= 0xF;
    return std::to_string(w) + "'h" + to_hex(truncate(v, w));
  }

  std::string def(unsigned w, const std::string& rhs) {
    std::string n = "w" + std::to_string(wire_++);
    os_ << n << ":" << w << " = " << rhs << "\n";
    ++count_;
    pool_.push_back({n, w});
    return n;
  }

  const Val& pick() {
    if (chance(60)) {
      size_t span = std::min<size_t>(pool_.size(), 16);
      return pool_[pool_.size() - 1 - below(span)];
    }
    return pool_[below(pool_.size())];
  }

  std::string coerce(const Val& v, unsigned w) {
    if (v.width == w)
      return v.name;
    if (v.width > w)
      return def(w, "slice " + v.name + ", " + std::to_string(below(v.width - w + 1)));
    unsigned pad = w - v.width;
    std::string hi = chance(50) ? std::to_string(pad) + "'h0" : coerce(pick_copy(), pad);
    return def(w, "concat " + hi + ", " + v.name);
  }

  Val pick_copy() { return pick(); }

  std::string operand(unsigned w) {
    if (chance(8))
      return konst(w);
    Val v = pick();
    return coerce(v, w);
  }

  void declare() {
    unsigned nregs = std::max(2u, p_.registers);
    for (unsigned i = 0; i < nregs; ++i) {
      unsigned w = p_.logic_heavy ? 16 : pick_width();
      std::string name = "r" + std::to_string(i);
      BigUint init = 0;
      for (unsigned k = 0; k < w; k += 64)
        init |= BigUint(rng_()) << k;
      init = truncate(init, w);
      os_ << "reg " << name << " " << w << " = 0x" << to_hex(init) << "\n";
      regs_.push_back({name, w});
      pool_.push_back({name, w});
    }
    os_ << "reg tick 16 = 0\n";
    if (p_.memories && !p_.logic_heavy) {
      unsigned nm = 1 + static_cast<unsigned>(below(2));
      for (unsigned i = 0; i < nm; ++i) {
        Mem m{"m" + std::to_string(i), std::min<unsigned>(p_.max_width, 1 + static_cast<unsigned>(below(40))),
              uint64_t(1) << (2 + below(5))};
        os_ << "mem " << m.name << " " << m.width << " " << m.depth << " local";
        if (chance(50)) {
          os_ << " init";
          for (uint64_t k = 0; k < m.depth; ++k)
            os_ << " 0x" << hex(rng_() & ((m.width >= 64) ? ~0ull : ((1ull << m.width) - 1)));
        }
        os_ << "\n";
        mems_.push_back(m);
      }
    }
    if (p_.global_memory && !p_.logic_heavy) {
      Mem m{"g0", 16, 64};
      os_ << "mem g0 16 64 global\n";
      mems_.push_back(m);
    }
  }

  void step() {
    unsigned kind = static_cast<unsigned>(below(100));
    unsigned w = pick_width();
    if (kind < 30) {
      static const char* ops[] = {"and", "or", "xor", "add", "sub"};
      const char* op = ops[below(5)];
      std::string a = operand(w), b = operand(w);
      def(w, std::string(op) + " " + a + ", " + b);
    } else if (kind < 36) {
      def(w, "not " + operand(w));
    } else if (kind < 48) {
      static const char* ops[] = {"shl", "shr", "sra"};
      const char* op = ops[below(3)];
      std::string a = operand(w);
      std::string amt;
      if (chance(50)) {
        unsigned aw = 9;
        amt = std::to_string(aw) + "'d" + std::to_string(below(w + 3));
      } else {
        amt = operand(1 + static_cast<unsigned>(below(9)));
      }
      def(w, std::string(op) + " " + a + ", " + amt);
    } else if (kind < 58) {
      static const char* ops[] = {"eq", "ltu", "lts"};
      const char* op = ops[below(3)];
      std::string a = operand(w), b = operand(w);
      def(1, std::string(op) + " " + a + ", " + b);
    } else if (kind < 68) {
      std::string s = operand(1), a = operand(w), b = operand(w);
      def(w, "mux " + s + ", " + a + ", " + b);
    } else if (kind < 76) {
      if (w < 2)
        w = 2;
      unsigned lo = 1 + static_cast<unsigned>(below(w - 1));
      std::string a = operand(w - lo), b = operand(lo);
      def(w, "concat " + a + ", " + b);
    } else if (kind < 82) {
      const Val v = pick();
      unsigned sw = 1 + static_cast<unsigned>(below(v.width));
      def(sw, "slice " + v.name + ", " + std::to_string(below(v.width - sw + 1)));
    } else if (kind < 90 && !mems_.empty()) {
      const Mem m = mems_[below(mems_.size())];
      std::string a = operand(log2_exact(m.depth));
      def(m.width, "load " + m.name + ", " + a);
    } else {
      std::string a = operand(w), b = operand(w);
      def(w, "add " + a + ", " + b);
    }
  }

  void logic_step() {
    unsigned kind = static_cast<unsigned>(below(100));
    auto side = [&]() { return chance(35) ? konst(16) : operand(16); };
    if (kind < 85) {
      static const char* ops[] = {"and", "or", "xor"};
      std::string a = operand(16), b = side();
      def(16, std::string(ops[below(3)]) + " " + a + ", " + b);
    } else if (kind < 93) {
      def(16, "not " + operand(16));
    } else {
      def(16, "add " + operand(16) + ", " + konst(16));
    }
  }

  void finish() {
    for (const Val& r : regs_) {
      std::string v = operand(r.width);
      os_ << "next " << r.name << " = " << v << "\n";
      ++count_;
    }
    os_ << "tick_n:16 = add tick, 16'h1\nnext tick = tick_n\n";
    for (const Mem& m : mems_) {
      unsigned stores = 1 + static_cast<unsigned>(below(2));
      for (unsigned k = 0; k < stores; ++k) {
        std::string a = operand(log2_exact(m.depth)), d = operand(m.width), pr = operand(1);
        os_ << "store " << m.name << ", " << a << ", " << d << ", " << pr << "\n";
        ++count_;
      }
    }
    if (p_.expects) {
      const Val a = regs_[below(regs_.size())];
      const Val b = pool_[below(pool_.size())];
      std::string bb = coerce(b, a.width);
      std::string e1 = def(a.width, "xor " + a.name + ", " + bb);
      std::string e2 = def(a.width, "xor " + e1 + ", " + bb);
      os_ << "expect " << e2 << ", " << a.name << "\n";
    }
    if (p_.displays) {
      std::string lo = def(4, "slice tick, 0");
      std::string pr = def(1, "eq " + lo + ", 4'h7");
      const Val v = regs_[below(regs_.size())];
      os_ << "display " << pr << ", " << v.name << "\n";
    }
  }

  RandomDagParams p_;
  std::mt19937_64 rng_;
  std::ostringstream os_;
  std::vector<Val> pool_;
  std::vector<Val> regs_;
  std::vector<Mem> mems_;
  unsigned count_ = 0;
  unsigned wire_ = 0;
};

} // namespace

std::string gen_random_dag(const RandomDagParams& params) { return DagGenerator(params).run(); }

} // namespace mnt

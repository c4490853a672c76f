#include "ir/trace.hpp"

#include <algorithm>
#include <sstream>

namespace mnt {

namespace {

std::vector<DisplayEvent> committed_displays(const StateTrace& t) {
  std::vector<DisplayEvent> d;
  for (const auto& e : t.displays)
    if (!t.stop || e.vcycle < t.stop->vcycle)
      d.push_back(e);
  std::stable_sort(d.begin(), d.end(), [](const DisplayEvent& a, const DisplayEvent& b) {
    return a.vcycle != b.vcycle ? a.vcycle < b.vcycle : a.eid < b.eid;
  });
  return d;
}

} // namespace

TraceDiff compare_traces(const StateTrace& reference, const StateTrace& actual) {
  std::ostringstream why;
  auto fail = [&](const std::string& m) { return TraceDiff{false, m}; };

  if (reference.reg_names != actual.reg_names)
    return fail("register sets differ");
  if (reference.vcycles != actual.vcycles)
    return fail("committed vcycles differ: expected " + std::to_string(reference.vcycles) + ", got " +
                std::to_string(actual.vcycles));
  if (reference.snapshots.size() != actual.snapshots.size())
    return fail("snapshot counts differ");
  for (size_t v = 0; v < reference.snapshots.size(); ++v) {
    const auto &a = reference.snapshots[v], &b = actual.snapshots[v];
    for (size_t r = 0; r < a.size(); ++r)
      if (a[r] != b[r]) {
        why << "vcycle " << v << ": register " << reference.reg_names[r] << " expected 0x" << to_hex(a[r])
            << ", got 0x" << to_hex(b[r]);
        return fail(why.str());
      }
  }
  for (size_t r = 0; r < reference.final_registers.size() && r < actual.final_registers.size(); ++r)
    if (reference.final_registers[r] != actual.final_registers[r])
      return fail("final value of register " + reference.reg_names[r] + " differs");

  if (reference.stop.has_value() != actual.stop.has_value())
    return fail(reference.stop ? "expected the run to stop" : "run stopped unexpectedly");
  if (reference.stop) {
    if (reference.stop->vcycle != actual.stop->vcycle)
      return fail("stop vcycle differs");
    for (uint32_t e : actual.stop->eids)
      if (std::find(reference.stop->eids.begin(), reference.stop->eids.end(), e) == reference.stop->eids.end())
        return fail("EXPECT " + std::to_string(e) + " fired but should not have");
  }

  if (committed_displays(reference) != committed_displays(actual))
    return fail("display logs differ");

  if (!reference.stop) {
    for (const auto& m : reference.memories) {
      auto it = std::find_if(actual.memories.begin(), actual.memories.end(),
                             [&](const MemoryImage& x) { return x.name == m.name; });
      if (it == actual.memories.end())
        continue;
      if (it->values.size() != m.values.size())
        return fail("memory " + m.name + " has a different depth");
      for (size_t i = 0; i < m.values.size(); ++i)
        if (it->values[i] != m.values[i]) {
          why << "memory " << m.name << "[" << i << "] expected 0x" << to_hex(m.values[i]) << ", got 0x"
              << to_hex(it->values[i]);
          return fail(why.str());
        }
    }
  }
  return {};
}

std::string trace_csv(const StateTrace& t) {
  std::ostringstream os;
  os << "vcycle";
  for (const auto& n : t.reg_names)
    os << "," << n;
  os << "\n";
  for (size_t v = 0; v < t.snapshots.size(); ++v) {
    os << v;
    for (const auto& x : t.snapshots[v])
      os << ",0x" << to_hex(x);
    os << "\n";
  }
  return os.str();
}

} // namespace mnt

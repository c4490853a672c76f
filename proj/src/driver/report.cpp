#include "driver/report.hpp"

#include <cstdio>
#include <map>
#include <sstream>
#include <tuple>

#include "support/error.hpp"

namespace mnt {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string grid_str(GridDims g) { return std::to_string(g.x) + "x" + std::to_string(g.y); }

const char* status_name(RunStatus s) {
  switch (s) {
  case RunStatus::Completed:
    return "completed";
  case RunStatus::Stopped:
    return "stopped";
  case RunStatus::ScheduleBug:
    return "schedule_bug";
  }
  return "unknown";
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double percent_reduction(double before, double after) { return before == 0 ? 0 : 100.0 * (before - after) / before; }

class Table {
public:
  Table(std::string title, std::vector<std::string> header) : title_(std::move(title)), header_(std::move(header)) {}

  void row(std::vector<std::string> r) { rows_.push_back(std::move(r)); }
  bool empty() const { return rows_.empty(); }

  void render(std::ostream& os, bool csv) const {
    os << "## " << title_ << "\n";
    if (csv) {
      line(os, header_, nullptr);
      for (const auto& r : rows_)
        line(os, r, nullptr);
    } else {
      std::vector<size_t> w(header_.size());
      for (size_t i = 0; i < w.size(); ++i)
        w[i] = header_[i].size();
      for (const auto& r : rows_)
        for (size_t i = 0; i < r.size(); ++i)
          w[i] = std::max(w[i], r[i].size());
      line(os, header_, &w);
      for (const auto& r : rows_)
        line(os, r, &w);
    }
    os << "\n";
  }

private:
  static void line(std::ostream& os, const std::vector<std::string>& cells, const std::vector<size_t>* w) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i)
        os << (w ? "  " : ",");
      os << cells[i];
      if (w && i + 1 < cells.size())
        os << std::string((*w)[i] - cells[i].size(), ' ');
    }
    os << "\n";
  }

  std::string title_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Field access with a diagnostic naming the document and the field.
class Doc {
public:
  Doc(const json& j, size_t index) : j_(j), index_(index) {}

  const json& at(const char* key) const {
    if (!j_.is_object() || !j_.contains(key))
      throw Error(ErrorKind::Validation,
                  "input " + std::to_string(index_) + ": missing field '" + key + "'");
    return j_.at(key);
  }
  std::string str(const char* key) const { return at(key).get<std::string>(); }
  uint64_t num(const char* key) const { return at(key).get<uint64_t>(); }
  bool flag(const char* key) const { return at(key).get<bool>(); }

private:
  const json& j_;
  size_t index_;
};

} // namespace

ordered_json compile_report_json(const CompileReport& r) {
  ordered_json j;
  j["kind"] = "compile";
  j["design"] = r.design;
  j["grid"] = grid_str(r.grid);
  j["partitioner"] = partitioner_name(r.partitioner);
  j["custom_functions"] = r.custom_functions;
  j["processes"] = r.processes;
  uint32_t used = 0;
  for (const CoreBreakdown& c : r.vcpl.cores)
    used += c.compute + c.send > 0;
  j["cores_used"] = used;
  j["total_sends"] = r.total_sends;
  j["non_nop"] = r.non_nop;
  j["instructions_before_cf"] = r.instructions_before_cf;
  j["instructions_after_cf"] = r.instructions_after_cf;
  j["cf"] = {{"cones", r.cf.cones},     {"classes", r.cf.classes}, {"selected", r.cf.selected},
             {"functions", r.cf.functions}, {"saved", r.cf.saved},     {"exact", r.cf.exact}};
  j["regalloc"] = {{"max_registers", r.regalloc.max_registers},
                   {"spilled", r.regalloc.spilled},
                   {"moves", r.regalloc.moves},
                   {"coalesced", r.regalloc.coalesced},
                   {"copies", r.regalloc.copies}};
  ordered_json cores = ordered_json::array();
  for (const CoreBreakdown& c : r.vcpl.cores)
    cores.push_back({{"x", c.coord.x},
                     {"y", c.coord.y},
                     {"compute", c.compute},
                     {"send", c.send},
                     {"nop", c.nop},
                     {"epilogue", c.epilogue},
                     {"sleep", c.sleep}});
  j["vcpl"] = {{"length", r.vcpl.length}, {"cores", cores}};
  j["partition_max_cost"] = r.partition.max_cost();
  j["partition_words"] = r.partition.total_words();
  j["bootstream_bytes"] = r.bootstream_bytes;
  ordered_json passes = ordered_json::array();
  for (const auto& [name, ms] : r.pass_ms)
    passes.push_back({{"pass", name}, {"ms", ms}});
  j["pass_ms"] = passes;
  return j;
}

ordered_json metrics_json(const SimMetrics& m, const std::string& design, RunStatus status,
                          const std::string& failure) {
  ordered_json j;
  j["kind"] = "run";
  j["design"] = design;
  j["status"] = status_name(status);
  j["failure"] = failure;
  j["vcycles"] = m.vcycles;
  j["vcycle_length"] = m.vcycle_length;
  j["partial_slots"] = m.partial_slots;
  j["total_cycles"] = m.total_cycles;
  j["stalled_cycles"] = m.stalled_cycles;
  j["exception_cycles"] = m.exception_cycles;
  j["boot_cycles"] = m.boot_cycles;
  j["cache_hits"] = m.cache_hits;
  j["cache_misses"] = m.cache_misses;
  j["cache_writebacks"] = m.cache_writebacks;
  j["messages"] = m.messages;
  j["dropped_messages"] = m.dropped_messages;
  j["hazards"] = m.hazards;
  ordered_json cores = ordered_json::array();
  for (const CoreCounters& c : m.cores)
    cores.push_back({{"x", c.coord.x},
                     {"y", c.coord.y},
                     {"compute", c.compute},
                     {"send", c.send},
                     {"nop", c.nop},
                     {"epilogue", c.epilogue},
                     {"sleep", c.sleep},
                     {"start_cycle", c.start_cycle}});
  j["cores"] = cores;
  ordered_json ex = ordered_json::array();
  for (const ExceptionRecord& e : m.exceptions)
    ex.push_back({{"vcycle", e.vcycle}, {"eid", e.eid}, {"stop", e.stop}});
  j["exceptions"] = ex;
  return j;
}

std::string partition_csv(const ProcessGraph& g) {
  std::ostringstream os;
  os << "kind,process,peer,value\n";
  for (size_t i = 0; i < g.cost.size(); ++i)
    os << "cost," << i << ",," << g.cost[i] << "\n";
  for (const ProcessEdge& e : g.edges)
    os << "words," << e.from << "," << e.to << "," << e.words << "\n";
  return os.str();
}

std::string render_tables(const std::vector<json>& docs, const TableOptions& opt) {
  // (design, grid, cf) -> sends per partitioner
  std::map<std::tuple<std::string, std::string, bool>, std::map<std::string, uint64_t>> sends;
  // (design, grid, partitioner) -> non-NOP count with and without custom functions
  std::map<std::tuple<std::string, std::string, std::string>, std::map<bool, uint64_t>> cf;
  Table vcpl("VCPL breakdown (percent of cores_used x vcpl)",
             {"design", "grid", "partitioner", "cf", "cores_used", "vcpl", "compute", "send", "nop", "idle"});
  Table cache("Cache", {"design", "vcycles", "hits", "misses", "hit_rate", "stalled_cycles", "stalled_pct"});
  Table timing("Compile time (ms)", {"design", "grid", "partitioner", "cf", "pass", "ms"});

  for (size_t i = 0; i < docs.size(); ++i) {
    const Doc d(docs[i], i);
    const std::string kind = d.str("kind");
    if (kind == "compile") {
      const std::string design = d.str("design"), grid = d.str("grid"), part = d.str("partitioner");
      const bool has_cf = d.flag("custom_functions");
      sends[{design, grid, has_cf}][part] = d.num("total_sends");
      cf[{design, grid, part}][has_cf] = d.num("non_nop");
      const Doc v(d.at("vcpl"), i);
      const uint64_t length = v.num("length");
      uint64_t used = 0, compute = 0, send = 0, nop = 0;
      for (const json& c : v.at("cores")) {
        const Doc core(c, i);
        const uint64_t cc = core.num("compute"), cs = core.num("send");
        if (cc + cs == 0)
          continue;
        ++used;
        compute += cc;
        send += cs;
        nop += core.num("nop");
      }
      const double total = double(used * length);
      auto pct = [&](uint64_t x) { return fixed(total == 0 ? 0 : 100.0 * double(x) / total, 1); };
      vcpl.row({design, grid, part, has_cf ? "on" : "off", std::to_string(used), std::to_string(length),
                pct(compute), pct(send), pct(nop), pct(used * length - compute - send - nop)});
      if (opt.timing)
        for (const json& p : d.at("pass_ms")) {
          const Doc pd(p, i);
          timing.row({design, grid, part, has_cf ? "on" : "off", pd.str("pass"),
                      fixed(pd.at("ms").get<double>(), 3)});
        }
    } else if (kind == "run") {
      const uint64_t hits = d.num("cache_hits"), misses = d.num("cache_misses");
      const uint64_t stalled = d.num("stalled_cycles"), total = d.num("total_cycles");
      cache.row({d.str("design"), std::to_string(d.num("vcycles")), std::to_string(hits), std::to_string(misses),
                 hits + misses == 0 ? "-" : fixed(double(hits) / double(hits + misses), 4), std::to_string(stalled),
                 fixed(total == 0 ? 0 : 100.0 * double(stalled) / double(total), 1)});
    } else {
      throw Error(ErrorKind::Validation, "input " + std::to_string(i) + ": unknown kind '" + kind + "'");
    }
  }

  Table send_table("Total SENDs, LPT (L) vs balanced (B)", {"design", "grid", "cf", "L", "B", "reduction_pct"});
  double sum = 0;
  size_t pairs = 0;
  for (const auto& [key, by] : sends) {
    if (!by.count("lpt") || !by.count("balanced"))
      continue;
    const auto& [design, grid, has_cf] = key;
    const double red = percent_reduction(double(by.at("lpt")), double(by.at("balanced")));
    sum += red;
    ++pairs;
    send_table.row({design, grid, has_cf ? "on" : "off", std::to_string(by.at("lpt")),
                    std::to_string(by.at("balanced")), fixed(red, 1)});
  }
  if (pairs)
    send_table.row({"mean", "", "", "", "", fixed(sum / double(pairs), 1)});

  Table cf_table("Custom-function ablation (non-NOP instructions)",
                 {"design", "grid", "partitioner", "without", "with", "reduction_pct"});
  for (const auto& [key, by] : cf) {
    if (by.size() != 2)
      continue;
    const auto& [design, grid, part] = key;
    cf_table.row({design, grid, part, std::to_string(by.at(false)), std::to_string(by.at(true)),
                  fixed(percent_reduction(double(by.at(false)), double(by.at(true))), 1)});
  }

  std::ostringstream os;
  for (const Table* t : {&send_table, &vcpl, &cf_table, &cache, &timing})
    if (!t->empty())
      t->render(os, opt.csv);
  return os.str();
}

} // namespace mnt

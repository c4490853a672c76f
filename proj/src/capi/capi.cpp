#include "mnt/mnt.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <optional>
#include <sstream>

#include "driver/generators.hpp"
#include "driver/pipeline.hpp"
#include "driver/report.hpp"
#include "ir/netlist_interp.hpp"
#include "machine/machine.hpp"
#include "sched/bootstream.hpp"

using namespace mnt;

struct mnt_compilation {
  CompileResult result;
  std::string report;
  std::string partition;
};

struct mnt_machine {
  std::unique_ptr<Machine> machine;
  RunStatus status = RunStatus::Completed;
  std::string view;
};

namespace {

thread_local std::string last_error;

mnt_status status_of(ErrorKind k) {
  switch (k) {
  case ErrorKind::Parse:
    return MNT_ERR_PARSE;
  case ErrorKind::Validation:
    return MNT_ERR_VALIDATION;
  case ErrorKind::Compile:
    return MNT_ERR_COMPILE;
  case ErrorKind::Load:
    return MNT_ERR_LOAD;
  case ErrorKind::ScheduleBug:
  case ErrorKind::Runtime:
  case ErrorKind::Io:
    return MNT_ERR_RUNTIME;
  }
  return MNT_ERR_INTERNAL;
}

mnt_status fail(mnt_status s, const std::string& message) {
  last_error = message;
  return s;
}

template <typename F>
mnt_status guarded(F&& f) {
  try {
    last_error.clear();
    return f();
  } catch (const Error& e) {
    return fail(status_of(e.kind()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(MNT_ERR_VALIDATION, e.what());
  } catch (const std::bad_alloc&) {
    return fail(MNT_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MNT_ERR_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p)
    throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

bool power_of_two(uint64_t v) { return v && !(v & (v - 1)); }

} // namespace

extern "C" {

const char* mnt_last_error(void) { return last_error.c_str(); }

const char* mnt_version(void) { return "0.1.0"; }

void mnt_string_free(char* s) { std::free(s); }

void mnt_compile_options_init(mnt_compile_options* opt) {
  if (!opt)
    return;
  *opt = {};
  opt->grid_x = opt->grid_y = 1;
  opt->partitioner = MNT_PARTITION_BALANCED;
  opt->custom_functions = 1;
  opt->const_fold = opt->cse = opt->dce = 1;
  opt->def_use_latency = 9;
  opt->hop_latency = 1;
  opt->seed = 1;
}

mnt_status mnt_compile(const char* source, size_t length, const mnt_compile_options* opt, mnt_compilation** out) {
  if (!source || !opt || !out)
    return fail(MNT_ERR_ARGUMENT, "null argument");
  if (opt->grid_x == 0 || opt->grid_y == 0 || opt->grid_x > 256 || opt->grid_y > 256)
    return fail(MNT_ERR_ARGUMENT, "grid dimensions must be in 1..256");
  if (opt->def_use_latency == 0 || opt->hop_latency == 0)
    return fail(MNT_ERR_ARGUMENT, "latencies must be positive");
  if (opt->partitioner != MNT_PARTITION_BALANCED && opt->partitioner != MNT_PARTITION_LPT)
    return fail(MNT_ERR_ARGUMENT, "unknown partitioner");
  *out = nullptr;
  return guarded([&] {
    CompileOptions o;
    o.grid = {opt->grid_x, opt->grid_y};
    o.privileged = {opt->privileged_x, opt->privileged_y};
    o.partitioner = opt->partitioner == MNT_PARTITION_LPT ? Partitioner::Lpt : Partitioner::Balanced;
    o.custom_functions = opt->custom_functions != 0;
    o.passes.const_fold = opt->const_fold != 0;
    o.passes.cse = opt->cse != 0;
    o.passes.dce = opt->dce != 0;
    o.def_use_latency = opt->def_use_latency;
    o.hop_latency = opt->hop_latency;
    o.placement_seed = opt->seed;
    auto c = std::make_unique<mnt_compilation>();
    c->result = compile_source(std::string(source, length), o);
    c->report = compile_report_json(c->result.report).dump(2);
    c->partition = partition_csv(c->result.report.partition);
    *out = c.release();
    return MNT_OK;
  });
}

void mnt_compilation_free(mnt_compilation* c) { delete c; }

mnt_status mnt_compilation_bootstream(const mnt_compilation* c, const uint8_t** data, size_t* size) {
  if (!c || !data || !size)
    return fail(MNT_ERR_ARGUMENT, "null argument");
  *data = c->result.bootstream.data();
  *size = c->result.bootstream.size();
  return MNT_OK;
}

const char* mnt_compilation_report_json(const mnt_compilation* c) { return c ? c->report.c_str() : ""; }

const char* mnt_compilation_partition_csv(const mnt_compilation* c) { return c ? c->partition.c_str() : ""; }

void mnt_machine_config_init(mnt_machine_config* cfg) {
  if (!cfg)
    return;
  const GridConfig d;
  *cfg = {};
  cfg->cache_bytes = d.cache_bytes;
  cfg->cache_line_words = d.cache_line_words;
  cfg->dram_latency = d.dram_latency;
  cfg->cache_hit_latency = d.cache_hit_latency;
  cfg->exception_latency = d.exception_latency;
  cfg->imem_capacity = d.imem_capacity;
  cfg->record_trace = 1;
}

mnt_status mnt_machine_load(const uint8_t* bootstream, size_t size, const mnt_machine_config* cfg,
                            mnt_machine** out) {
  if (!bootstream || !cfg || !out)
    return fail(MNT_ERR_ARGUMENT, "null argument");
  if (!power_of_two(cfg->cache_line_words) || cfg->cache_bytes < 2 * cfg->cache_line_words ||
      !power_of_two(cfg->cache_bytes))
    return fail(MNT_ERR_ARGUMENT, "cache size and line length must be powers of two");
  *out = nullptr;
  return guarded([&] {
    std::vector<uint8_t> bytes(bootstream, bootstream + size);
    GridConfig g;
    if (cfg->grid_x == 0 || cfg->grid_y == 0) {
      const Schedule s = parse_bootstream(bytes);
      g.dims = s.grid;
      g.privileged = s.privileged;
    } else {
      g.dims = {cfg->grid_x, cfg->grid_y};
      g.privileged = {cfg->privileged_x, cfg->privileged_y};
    }
    g.cache_bytes = cfg->cache_bytes;
    g.cache_line_words = cfg->cache_line_words;
    g.dram_latency = cfg->dram_latency;
    g.cache_hit_latency = cfg->cache_hit_latency;
    g.exception_latency = cfg->exception_latency;
    g.imem_capacity = cfg->imem_capacity;
    g.record_snapshots = cfg->record_trace != 0;
    auto m = std::make_unique<mnt_machine>();
    m->machine = std::make_unique<Machine>(bytes, g);
    *out = m.release();
    return MNT_OK;
  });
}

void mnt_machine_free(mnt_machine* m) { delete m; }

mnt_status mnt_machine_run(mnt_machine* m, uint64_t vcycles, mnt_run_result* result) {
  if (!m || !result)
    return fail(MNT_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    m->status = m->machine->run(vcycles);
    *result = m->status == RunStatus::Stopped       ? MNT_RUN_STOPPED
              : m->status == RunStatus::ScheduleBug ? MNT_RUN_SCHEDULE_BUG
                                                    : MNT_RUN_COMPLETED;
    return MNT_OK;
  });
}

const char* mnt_machine_metrics_json(mnt_machine* m) {
  if (!m)
    return "";
  m->view = metrics_json(m->machine->metrics(), m->machine->schedule().meta.name, m->status, m->machine->failure())
                .dump(2);
  return m->view.c_str();
}

const char* mnt_machine_trace_csv(mnt_machine* m) {
  if (!m)
    return "";
  m->view = trace_csv(m->machine->trace());
  return m->view.c_str();
}

const char* mnt_machine_displays(mnt_machine* m) {
  if (!m)
    return "";
  std::ostringstream os;
  for (const DisplayEvent& d : m->machine->trace().displays)
    os << d.value.str() << "\n";
  m->view = os.str();
  return m->view.c_str();
}

const char* mnt_machine_failure(mnt_machine* m) { return m ? m->machine->failure().c_str() : ""; }

mnt_status mnt_machine_check(mnt_machine* m, const char* source, size_t length, int* equal, const char** diff) {
  if (!m || !source || !equal || !diff)
    return fail(MNT_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    const StateTrace actual = m->machine->trace();
    const StateTrace ref = interpret_netlist(parse_netlist(std::string(source, length)), actual.vcycles + (actual.stop ? 1 : 0));
    const TraceDiff d = compare_traces(ref, actual);
    *equal = d.equal;
    m->view = d.message;
    *diff = m->view.c_str();
    return MNT_OK;
  });
}

void mnt_gen_params_init(mnt_gen_params* p) {
  if (!p)
    return;
  const RandomDagParams d;
  *p = {};
  p->kind = MNT_GEN_COUNTERS;
  p->bytes = 1024;
  p->count = 64;
  p->width = 16;
  p->seed = d.seed;
  p->instructions = d.instructions;
  p->registers = d.registers;
  p->max_width = d.max_width;
}

mnt_status mnt_generate(const mnt_gen_params* p, char** out) {
  if (!p || !out)
    return fail(MNT_ERR_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    std::string src;
    switch (p->kind) {
    case MNT_GEN_COUNTERS:
      if (p->count == 0 || p->width == 0)
        return fail(MNT_ERR_ARGUMENT, "counters need a positive count and width");
      src = gen_counters(p->count, p->width);
      break;
    case MNT_GEN_FIFO:
    case MNT_GEN_RAM:
      if (!power_of_two(p->bytes) || p->bytes < 4)
        return fail(MNT_ERR_ARGUMENT, "memory footprint must be a power of two of at least 4 bytes");
      src = p->kind == MNT_GEN_FIFO ? gen_fifo(p->bytes) : gen_ram(p->bytes);
      break;
    case MNT_GEN_RANDOM_DAG: {
      RandomDagParams r;
      r.seed = p->seed;
      r.instructions = p->instructions;
      r.registers = p->registers;
      r.max_width = p->max_width;
      r.logic_heavy = p->logic_heavy != 0;
      r.global_memory = p->global_memory != 0;
      if (r.registers == 0 || r.max_width == 0 || r.max_width > 256)
        return fail(MNT_ERR_ARGUMENT, "random-dag needs registers and a width in 1..256");
      src = gen_random_dag(r);
      break;
    }
    case MNT_GEN_LOGIC_CHAIN:
      src = gen_logic_chain();
      break;
    default:
      return fail(MNT_ERR_ARGUMENT, "unknown generator");
    }
    *out = dup_string(src);
    return MNT_OK;
  });
}

mnt_status mnt_report(const char* const* documents, size_t count, int csv, int timing, char** out) {
  if ((!documents && count) || !out)
    return fail(MNT_ERR_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    std::vector<nlohmann::json> docs;
    for (size_t i = 0; i < count; ++i) {
      try {
        docs.push_back(nlohmann::json::parse(documents[i]));
      } catch (const nlohmann::json::parse_error& e) {
        return fail(MNT_ERR_VALIDATION, "input " + std::to_string(i) + ": " + e.what());
      }
    }
    TableOptions t;
    t.csv = csv != 0;
    t.timing = timing != 0;
    *out = dup_string(render_tables(docs, t));
    return MNT_OK;
  });
}

} // extern "C"

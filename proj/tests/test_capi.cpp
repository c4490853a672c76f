#include "doctest.h"

#include <cstring>
#include <memory>
#include <string>

#include "json.hpp"
#include "mnt/mnt.h"

namespace {

using Compilation = std::unique_ptr<mnt_compilation, decltype(&mnt_compilation_free)>;
using MachineHandle = std::unique_ptr<mnt_machine, decltype(&mnt_machine_free)>;

std::string generate(mnt_gen_kind kind, uint64_t bytes = 1024, uint64_t seed = 1) {
  mnt_gen_params p;
  mnt_gen_params_init(&p);
  p.kind = kind;
  p.bytes = bytes;
  p.count = 1;
  p.seed = seed;
  char* out = nullptr;
  REQUIRE(mnt_generate(&p, &out) == MNT_OK);
  std::string s(out);
  mnt_string_free(out);
  return s;
}

Compilation compile(const std::string& src, uint32_t x = 1, uint32_t y = 1, mnt_partitioner part = MNT_PARTITION_BALANCED) {
  mnt_compile_options o;
  mnt_compile_options_init(&o);
  o.grid_x = x;
  o.grid_y = y;
  o.partitioner = part;
  mnt_compilation* c = nullptr;
  const mnt_status s = mnt_compile(src.data(), src.size(), &o, &c);
  INFO(mnt_last_error());
  REQUIRE(s == MNT_OK);
  return Compilation(c, mnt_compilation_free);
}

MachineHandle load(const mnt_compilation* c, uint32_t x = 0, uint32_t y = 0) {
  const uint8_t* data = nullptr;
  size_t size = 0;
  REQUIRE(mnt_compilation_bootstream(c, &data, &size) == MNT_OK);
  mnt_machine_config cfg;
  mnt_machine_config_init(&cfg);
  cfg.grid_x = x;
  cfg.grid_y = y;
  mnt_machine* m = nullptr;
  const mnt_status s = mnt_machine_load(data, size, &cfg, &m);
  INFO(mnt_last_error());
  REQUIRE(s == MNT_OK);
  return MachineHandle(m, mnt_machine_free);
}

} // namespace

TEST_CASE("compile and run a counter") {
  auto c = compile(generate(MNT_GEN_COUNTERS));
  auto m = load(c.get());
  mnt_run_result r;
  REQUIRE(mnt_machine_run(m.get(), 3, &r) == MNT_OK);
  CHECK(r == MNT_RUN_COMPLETED);
  CHECK(std::string(mnt_machine_trace_csv(m.get())) == "vcycle,c0\n0,0x1\n1,0x2\n2,0x3\n");
  auto metrics = nlohmann::json::parse(mnt_machine_metrics_json(m.get()));
  for (const char* field : {"vcycles", "vcycle_length", "partial_slots", "total_cycles", "stalled_cycles",
                            "exception_cycles", "boot_cycles", "cache_hits", "cache_misses", "cache_writebacks",
                            "messages", "dropped_messages", "hazards", "cores", "exceptions", "status"})
    CHECK(metrics.contains(field));
  CHECK(metrics["vcycles"] == 3);
  CHECK(metrics["stalled_cycles"] == 0);
  int equal = 0;
  const char* diff = nullptr;
  const std::string src = generate(MNT_GEN_COUNTERS);
  REQUIRE(mnt_machine_check(m.get(), src.data(), src.size(), &equal, &diff) == MNT_OK);
  CHECK(equal == 1);
}

TEST_CASE("errors are reported through status codes") {
  SUBCASE("parse error") {
    const std::string bad = "design x\nwire\n";
    mnt_compile_options o;
    mnt_compile_options_init(&o);
    mnt_compilation* c = nullptr;
    CHECK(mnt_compile(bad.data(), bad.size(), &o, &c) == MNT_ERR_PARSE);
    CHECK(c == nullptr);
    CHECK(std::strlen(mnt_last_error()) > 0);
  }
  SUBCASE("null arguments") {
    CHECK(mnt_compile(nullptr, 0, nullptr, nullptr) == MNT_ERR_ARGUMENT);
    CHECK(mnt_machine_run(nullptr, 1, nullptr) == MNT_ERR_ARGUMENT);
  }
  SUBCASE("grid mismatch is a load error") {
    auto c = compile(generate(MNT_GEN_COUNTERS));
    const uint8_t* data = nullptr;
    size_t size = 0;
    mnt_compilation_bootstream(c.get(), &data, &size);
    mnt_machine_config cfg;
    mnt_machine_config_init(&cfg);
    cfg.grid_x = cfg.grid_y = 2;
    mnt_machine* m = nullptr;
    CHECK(mnt_machine_load(data, size, &cfg, &m) == MNT_ERR_LOAD);
    CHECK(std::string(mnt_last_error()).find("1x1") != std::string::npos);
  }
  SUBCASE("truncated bootstream") {
    auto c = compile(generate(MNT_GEN_COUNTERS));
    const uint8_t* data = nullptr;
    size_t size = 0;
    mnt_compilation_bootstream(c.get(), &data, &size);
    mnt_machine_config cfg;
    mnt_machine_config_init(&cfg);
    mnt_machine* m = nullptr;
    CHECK(mnt_machine_load(data, 40, &cfg, &m) == MNT_ERR_LOAD);
    CHECK(std::string(mnt_last_error()).find("truncated") != std::string::npos);
  }
  SUBCASE("bad generator size") {
    mnt_gen_params p;
    mnt_gen_params_init(&p);
    p.kind = MNT_GEN_FIFO;
    p.bytes = 1000;
    char* out = nullptr;
    CHECK(mnt_generate(&p, &out) == MNT_ERR_ARGUMENT);
  }
  SUBCASE("report with a missing field") {
    const char* doc = R"({"kind":"run","design":"x"})";
    char* out = nullptr;
    CHECK(mnt_report(&doc, 1, 0, 0, &out) == MNT_ERR_VALIDATION);
    CHECK(std::string(mnt_last_error()).find("missing field") != std::string::npos);
  }
}

TEST_CASE("generators") {
  CHECK(generate(MNT_GEN_RANDOM_DAG, 0, 7) == generate(MNT_GEN_RANDOM_DAG, 0, 7));
  CHECK(generate(MNT_GEN_RANDOM_DAG, 0, 7) != generate(MNT_GEN_RANDOM_DAG, 0, 8));
  SUBCASE("a 1 KiB FIFO stays local and a 512 KiB RAM uses the privileged core") {
    auto fifo = compile(generate(MNT_GEN_FIFO, 1024), 2, 2);
    auto ram = compile(generate(MNT_GEN_RAM, 524288), 2, 2);
    auto run = [](const mnt_compilation* c) {
      auto m = load(c);
      mnt_run_result r;
      REQUIRE(mnt_machine_run(m.get(), 100, &r) == MNT_OK);
      return nlohmann::json::parse(mnt_machine_metrics_json(m.get()));
    };
    const auto f = run(fifo.get()), r = run(ram.get());
    CHECK(f["cache_hits"].get<uint64_t>() + f["cache_misses"].get<uint64_t>() == 0);
    // One load and one store per vcycle.
    CHECK(r["cache_hits"].get<uint64_t>() + r["cache_misses"].get<uint64_t>() == 200);
  }
}

TEST_CASE("reports compare partitioners") {
  const std::string src = generate(MNT_GEN_RANDOM_DAG, 0, 3);
  auto l = compile(src, 2, 2, MNT_PARTITION_LPT);
  auto b = compile(src, 2, 2, MNT_PARTITION_BALANCED);
  const char* docs[] = {mnt_compilation_report_json(l.get()), mnt_compilation_report_json(b.get())};
  char* out = nullptr;
  REQUIRE(mnt_report(docs, 2, 1, 0, &out) == MNT_OK);
  const std::string table(out);
  mnt_string_free(out);
  CHECK(table.find("## Total SENDs, LPT (L) vs balanced (B)") != std::string::npos);
  CHECK(table.find("design,grid,cf,L,B,reduction_pct") != std::string::npos);
  char* again = nullptr;
  REQUIRE(mnt_report(docs, 2, 1, 0, &again) == MNT_OK);
  CHECK(table == again);
  mnt_string_free(again);
  CHECK(std::string(mnt_compilation_partition_csv(b.get())).rfind("kind,process,peer,value\n", 0) == 0);
}

TEST_CASE("report percentages") {
  auto compile_doc = [](const char* part, bool cf, uint64_t sends, uint64_t non_nop) {
    nlohmann::json j = {{"kind", "compile"},  {"design", "d"},          {"grid", "2x2"},
                        {"partitioner", part}, {"custom_functions", cf}, {"total_sends", sends},
                        {"non_nop", non_nop},  {"pass_ms", nlohmann::json::array()}};
    j["vcpl"] = {{"length", 10}, {"cores", {{{"compute", 6}, {"send", 1}, {"nop", 3}}}}};
    return j.dump();
  };
  const std::string docs[] = {compile_doc("lpt", true, 200, 1000), compile_doc("balanced", true, 150, 1000),
                              compile_doc("balanced", false, 150, 1250)};
  const char* ptrs[] = {docs[0].c_str(), docs[1].c_str(), docs[2].c_str()};
  char* out = nullptr;
  REQUIRE(mnt_report(ptrs, 3, 1, 0, &out) == MNT_OK);
  const std::string t(out);
  mnt_string_free(out);
  CHECK(t.find("d,2x2,on,200,150,25.0\n") != std::string::npos);
  CHECK(t.find("d,2x2,balanced,1250,1000,20.0\n") != std::string::npos);
  CHECK(t.find("d,2x2,lpt,on,1,10,60.0,10.0,30.0,0.0\n") != std::string::npos);
}

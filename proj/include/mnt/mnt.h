#ifndef MNT_H
#define MNT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MNT_API __declspec(dllexport)
#else
#define MNT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mnt_status {
  MNT_OK = 0,
  MNT_ERR_ARGUMENT = 1,   /* null pointer or out-of-range parameter */
  MNT_ERR_PARSE = 2,      /* malformed .mntl source */
  MNT_ERR_VALIDATION = 3, /* well-formed but invalid design or report input */
  MNT_ERR_COMPILE = 4,    /* a compiler pass failed; the message starts with the pass name */
  MNT_ERR_LOAD = 5,       /* malformed bootstream or machine mismatch */
  MNT_ERR_RUNTIME = 6,
  MNT_ERR_INTERNAL = 7
} mnt_status;

typedef enum mnt_run_result {
  MNT_RUN_COMPLETED = 0,
  MNT_RUN_STOPPED = 1,      /* a stop EXPECT fired */
  MNT_RUN_SCHEDULE_BUG = 2  /* dropped message, register hazard or late message */
} mnt_run_result;

typedef enum mnt_partitioner { MNT_PARTITION_BALANCED = 0, MNT_PARTITION_LPT = 1 } mnt_partitioner;

typedef enum mnt_gen_kind {
  MNT_GEN_COUNTERS = 0,
  MNT_GEN_FIFO = 1,
  MNT_GEN_RAM = 2,
  MNT_GEN_RANDOM_DAG = 3,
  MNT_GEN_LOGIC_CHAIN = 4
} mnt_gen_kind;

/* Message for the last failed call on this thread; never null. */
MNT_API const char* mnt_last_error(void);
MNT_API const char* mnt_version(void);

/* Releases strings returned through `char**` out-parameters. */
MNT_API void mnt_string_free(char* s);

/* ---- compiler ---- */

typedef struct mnt_compile_options {
  uint32_t grid_x, grid_y;
  uint32_t privileged_x, privileged_y;
  mnt_partitioner partitioner;
  int custom_functions;
  int const_fold, cse, dce;
  uint32_t def_use_latency;
  uint32_t hop_latency;
  uint64_t seed; /* placement shuffle */
} mnt_compile_options;

MNT_API void mnt_compile_options_init(mnt_compile_options* opt);

typedef struct mnt_compilation mnt_compilation;

MNT_API mnt_status mnt_compile(const char* source, size_t length, const mnt_compile_options* opt,
                               mnt_compilation** out);
MNT_API void mnt_compilation_free(mnt_compilation* c);

/* The views below stay valid until the handle is freed. */
MNT_API mnt_status mnt_compilation_bootstream(const mnt_compilation* c, const uint8_t** data, size_t* size);
MNT_API const char* mnt_compilation_report_json(const mnt_compilation* c);
MNT_API const char* mnt_compilation_partition_csv(const mnt_compilation* c);

/* ---- machine ---- */

typedef struct mnt_machine_config {
  uint32_t grid_x, grid_y; /* 0 takes the grid from the bootstream */
  uint32_t privileged_x, privileged_y;
  uint32_t cache_bytes;
  uint32_t cache_line_words;
  uint32_t dram_latency;
  uint32_t cache_hit_latency;
  uint32_t exception_latency;
  uint32_t imem_capacity;
  int record_trace;
} mnt_machine_config;

MNT_API void mnt_machine_config_init(mnt_machine_config* cfg);

typedef struct mnt_machine mnt_machine;

MNT_API mnt_status mnt_machine_load(const uint8_t* bootstream, size_t size, const mnt_machine_config* cfg,
                                    mnt_machine** out);
MNT_API void mnt_machine_free(mnt_machine* m);

/* Runs up to `vcycles` more vcycles; may be called repeatedly. */
MNT_API mnt_status mnt_machine_run(mnt_machine* m, uint64_t vcycles, mnt_run_result* result);

/* The views below stay valid until the next call on the same handle. */
MNT_API const char* mnt_machine_metrics_json(mnt_machine* m);
MNT_API const char* mnt_machine_trace_csv(mnt_machine* m);
/* One displayed value per line, in decimal. */
MNT_API const char* mnt_machine_displays(mnt_machine* m);
MNT_API const char* mnt_machine_failure(mnt_machine* m);

/* Replays `source` in the reference interpreter for the vcycles run so far and
   compares register traces. `*equal` is 1 on a match; `*diff` describes the first mismatch. */
MNT_API mnt_status mnt_machine_check(mnt_machine* m, const char* source, size_t length, int* equal,
                                     const char** diff);

/* ---- generators and reports ---- */

typedef struct mnt_gen_params {
  mnt_gen_kind kind;
  uint64_t bytes;      /* fifo, ram: footprint, a power of two */
  uint32_t count;      /* counters */
  uint32_t width;      /* counters */
  uint64_t seed;       /* random-dag */
  uint32_t instructions;
  uint32_t registers;
  uint32_t max_width;
  int logic_heavy;
  int global_memory;
} mnt_gen_params;

MNT_API void mnt_gen_params_init(mnt_gen_params* p);
MNT_API mnt_status mnt_generate(const mnt_gen_params* p, char** out);

/* Tables from compile reports and run metrics (JSON documents). */
MNT_API mnt_status mnt_report(const char* const* documents, size_t count, int csv, int timing, char** out);

#ifdef __cplusplus
}
#endif

#endif

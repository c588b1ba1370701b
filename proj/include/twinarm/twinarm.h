#ifndef TWINARM_TWINARM_H
#define TWINARM_TWINARM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define TWA_API __declspec(dllexport)
#else
#  define TWA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

#define TWA_DOF 5
#define TWA_WIRE_SIZE 103

typedef enum twa_status {
  TWA_OK = 0,
  TWA_E_INVALID_ARGUMENT = 1,
  TWA_E_PARSE = 2,
  TWA_E_IO = 3,
  TWA_E_UNREACHABLE = 4,
  TWA_E_DEGENERATE = 5,
  TWA_E_NOT_CONVERGED = 6,
  TWA_E_NO_PATH_FOUND = 7,
  TWA_E_INVALID_ENDPOINT = 8,
  TWA_E_DECODE = 9,
  TWA_E_OVERWEIGHT = 10,
  TWA_E_OUT_OF_REACH = 11,
  TWA_E_MISMATCHED_TRACES = 12,
  TWA_E_SCENARIO = 13,
  TWA_E_INTERNAL = 14
} twa_status;

typedef struct twa_arm twa_arm;
typedef struct twa_report twa_report;
typedef struct twa_server twa_server;

/* Tool-point pose: position in m, pitch/roll in rad. */
typedef struct twa_pose {
  double x, y, z;
  double pitch;
  double roll;
} twa_pose;

typedef struct twa_ik_report {
  int iterations;
  double position_residual;
  double angular_residual;
} twa_ik_report;

typedef struct twa_joint_state {
  uint64_t seq;
  double timestamp;
  double q[TWA_DOF];
  double qdot[TWA_DOF];
} twa_joint_state;

TWA_API const char* twa_version(void);
/* "Ok", "InvalidArgument", "DecodeError", ... */
TWA_API const char* twa_status_name(twa_status status);
/* Message of the last failure on the calling thread; "" when none. */
TWA_API const char* twa_last_error(void);

/* Strings returned through char** are owned by the caller. */
TWA_API void twa_string_free(char* s);

/* Arm models */
TWA_API twa_status twa_arm_default(twa_arm** out);
TWA_API twa_status twa_arm_load(const char* path, twa_arm** out);
TWA_API void twa_arm_free(twa_arm* arm);
TWA_API twa_status twa_arm_describe(const twa_arm* arm, char** json_out);

/* Kinematics */
TWA_API twa_status twa_fk(const twa_arm* arm, const double q[TWA_DOF], twa_pose* out);
TWA_API twa_status twa_planar_ik(double x, double y, double l1, double l2, int elbow_up,
                                 double* theta1, double* theta2);
/* On TWA_E_NOT_CONVERGED q_out holds the best effort and report is filled.
   report may be NULL. */
TWA_API twa_status twa_ik_solve(const twa_arm* arm, const twa_pose* target,
                                const double seed[TWA_DOF], double q_out[TWA_DOF],
                                twa_ik_report* report);
/* Row-major 5x5; rows x, y, z, pitch, roll. */
TWA_API twa_status twa_jacobian(const twa_arm* arm, const double q[TWA_DOF],
                                double out[TWA_DOF * TWA_DOF]);

/* Wire format */
TWA_API twa_status twa_wire_encode(const twa_joint_state* msg, uint8_t out[TWA_WIRE_SIZE]);
TWA_API twa_status twa_wire_decode(const uint8_t* bytes, size_t len, twa_joint_state* out);

/* Scenario runs */
typedef struct twa_run_options {
  int cycles;         /* <= 0 keeps the file's value */
  int noise_free;     /* < 0 keeps the file's value */
  int override_seed;  /* nonzero replaces rng_seed with seed */
  uint64_t seed;
} twa_run_options;

TWA_API void twa_run_options_init(twa_run_options* opts);
/* opts may be NULL. A scenario that names an output file also gets its
   report written there. */
TWA_API twa_status twa_scenario_run(const char* path, const twa_run_options* opts,
                                    twa_report** out);
/* Planning benchmark with the default arm over every scene file in dir. */
TWA_API twa_status twa_bench_run(const char* scenes_dir, int seeds, uint64_t seed,
                                 twa_report** out);

/* Reports */
typedef struct twa_report_summary {
  int cycles;
  int successes;
  double success_rate;
} twa_report_summary;

TWA_API twa_status twa_report_load(const char* path, twa_report** out);
TWA_API twa_status twa_report_summarize(const twa_report* report, twa_report_summary* out);
/* format: "json" or "csv". deterministic drops wall-clock fields. */
TWA_API twa_status twa_report_text(const twa_report* report, const char* format,
                                   int deterministic, char** text_out);
TWA_API twa_status twa_report_write(const twa_report* report, const char* path,
                                    const char* format, int deterministic);
TWA_API void twa_report_free(twa_report* report);

/* Teleop server */
typedef struct twa_server_options {
  const char* bind_address;  /* default "127.0.0.1" */
  uint16_t port;             /* 0 picks a free port */
  const char* profile_path;  /* required */
  const char* arm_path;      /* NULL: default arm */
  const char* channel_path;  /* NULL: ideal channel */
  const char* scene_path;    /* NULL: no obstacles */
  double realtime_factor;    /* default 1 */
} twa_server_options;

TWA_API void twa_server_options_init(twa_server_options* opts);
TWA_API twa_status twa_server_start(const twa_server_options* opts, twa_server** out);
TWA_API uint16_t twa_server_port(const twa_server* server);
/* Blocks until twa_server_stop is called from another thread. */
TWA_API twa_status twa_server_wait(twa_server* server);
TWA_API twa_status twa_server_stop(twa_server* server);
TWA_API void twa_server_free(twa_server* server);

#ifdef __cplusplus
}
#endif

#endif

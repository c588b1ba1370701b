#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "kinematics/types.hpp"

namespace twinarm::sync {

using kin::JointVector;
using Bytes = std::vector<std::uint8_t>;

// The unit of twin synchronization.
struct JointStateMsg {
  std::uint64_t seq = 0;
  double timestamp = 0.0;  // s, sim clock
  JointVector q;
  JointVector qdot;

  friend bool operator==(const JointStateMsg&, const JointStateMsg&) = default;
};

// Wire layout, little-endian:
//   magic "JS" (2) | version (1) | seq u64 | timestamp f64 |
//   5 x angle f64 | 5 x velocity f64 | CRC-32 u32 over all preceding bytes
inline constexpr std::uint8_t kMagic0 = 0x4A;
inline constexpr std::uint8_t kMagic1 = 0x53;
inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::size_t kWireSize = 2 + 1 + 8 + 8 + 40 + 40 + 4;

Bytes encode(const JointStateMsg& msg);
// Throws Error(decode) on short buffers, bad magic or version, bad checksum.
JointStateMsg decode(std::span<const std::uint8_t> bytes);

struct ChannelModel {
  std::string name;
  double latency_mean = 0.0;        // s
  double latency_jitter_std = 0.0;  // s
  double drop_probability = 0.0;
  double duplicate_probability = 0.0;
  bool reorder = false;
  std::uint64_t rng_seed = 1;
};

void validate(const ChannelModel& model);
ChannelModel load_channel_file(const std::filesystem::path& path);

// Impaired link stepped by the sim-clock owner.
class Channel {
 public:
  struct Stats {
    std::uint64_t sent = 0;
    std::uint64_t dropped = 0;
    std::uint64_t duplicated = 0;
    std::uint64_t delivered = 0;
  };

  explicit Channel(ChannelModel model);

  // Sends `inbox` at time `now` and returns every frame due by `now`, in
  // delivery order. `now` must not go backwards.
  std::vector<Bytes> step(double now, std::vector<Bytes> inbox);

  const ChannelModel& model() const { return model_; }
  const Stats& stats() const { return stats_; }
  std::size_t in_flight() const { return in_flight_.size(); }

 private:
  struct Pending {
    double deliver_at;
    std::uint64_t order;
    Bytes payload;
  };

  void schedule(double now, Bytes payload);

  ChannelModel model_;
  std::mt19937_64 rng_;
  std::deque<Pending> in_flight_;
  double clock_ = -1.0;
  double last_deliver_at_ = 0.0;
  std::uint64_t order_ = 0;
  Stats stats_;
};

// Digital-twin estimate of the physical joint state.
struct TwinState {
  JointVector q_estimate;
  std::uint64_t last_seq = 0;
  double last_timestamp = 0.0;
  bool gap_flag = false;
  bool synced = false;     // at least one message applied
  JointVector base_q;      // last applied message
  JointVector base_qdot;
};

TwinState make_twin(const JointVector& q0);

inline constexpr double kExtrapolationHorizon = 0.2;  // s

// Applies the highest-seq fresh message, ignoring stale ones, then
// extrapolates from it with joint rates capped at v_cap over at most
// `horizon` seconds.
TwinState reconcile(const TwinState& twin,
                    std::span<const JointStateMsg> delivered, double now,
                    double v_cap, double horizon = kExtrapolationHorizon);

struct TraceSample {
  double t = 0.0;
  JointVector q;

  friend bool operator==(const TraceSample&, const TraceSample&) = default;
};
using Trace = std::vector<TraceSample>;

struct DriftReport {
  double max_drift = 0.0;   // rad, max-norm over joints
  double mean_drift = 0.0;  // rad
  std::vector<double> times;
  std::vector<double> drift;
  std::array<std::vector<double>, kin::kDof> per_joint;  // signed twin - physical
};

// Evaluates the physical trace (linearly interpolated) at every twin sample
// inside the shared time range. Throws MismatchedTraces without overlap.
DriftReport drift_report(const Trace& physical, const Trace& twin);

// Publisher -> channel -> twin pipeline, stepped once per sim tick.
class SyncLink {
 public:
  struct Options {
    int publish_every = 5;  // ticks between joint-state messages
    double v_cap = 1.0;     // rad/s
    double horizon = kExtrapolationHorizon;
    bool record_traces = true;
  };

  SyncLink(ChannelModel channel, const JointVector& q0, Options opts);

  // `reading` is what the physical side publishes at `now`.
  void tick(double now, const JointVector& reading, const JointVector& rate);

  const TwinState& twin() const { return twin_; }
  const Trace& physical_trace() const { return physical_; }
  const Trace& twin_trace() const { return twin_trace_; }
  const Channel& channel() const { return channel_; }
  std::uint64_t decode_errors() const { return decode_errors_; }
  std::uint64_t gaps() const { return gaps_; }
  double mean_latency() const;
  double max_latency() const { return max_latency_; }
  // Most recent frame handed to the channel, if any.
  const Bytes& last_frame() const { return last_frame_; }

 private:
  Options opts_;
  Channel channel_;
  TwinState twin_;
  std::uint64_t seq_ = 0;
  std::uint64_t ticks_ = 0;
  Trace physical_;
  Trace twin_trace_;
  Bytes last_frame_;
  std::uint64_t decode_errors_ = 0;
  std::uint64_t gaps_ = 0;
  double latency_sum_ = 0.0;
  std::uint64_t latency_count_ = 0;
  double max_latency_ = 0.0;
};

}  // namespace twinarm::sync

#include <algorithm>
#include <cmath>
#include <set>

#include "common/error.hpp"
#include "sync/sync.hpp"

namespace twinarm::sync {

TwinState make_twin(const JointVector& q0) {
  TwinState t;
  t.q_estimate = q0;
  t.base_q = q0;
  return t;
}

TwinState reconcile(const TwinState& twin,
                    std::span<const JointStateMsg> delivered, double now,
                    double v_cap, double horizon) {
  TwinState next = twin;

  const JointStateMsg* best = nullptr;
  std::set<std::uint64_t> fresh;
  for (const JointStateMsg& m : delivered) {
    if (m.seq <= twin.last_seq) continue;
    fresh.insert(m.seq);
    if (!best || m.seq > best->seq) best = &m;
  }
  if (best) {
    // Every seq between the last applied one and the newest must have arrived.
    next.gap_flag = fresh.size() != best->seq - twin.last_seq;
    next.last_seq = best->seq;
    next.last_timestamp = best->timestamp;
    next.base_q = best->q;
    next.base_qdot = best->qdot;
    next.synced = true;
  }
  if (!next.synced) return next;

  const double age = std::clamp(now - next.last_timestamp, 0.0, horizon);
  for (std::size_t j = 0; j < kin::kDof; ++j) {
    const double rate = std::clamp(next.base_qdot[j], -v_cap, v_cap);
    next.q_estimate[j] = next.base_q[j] + rate * age;
  }
  return next;
}

namespace {

JointVector sample_at(const Trace& trace, double t) {
  auto it = std::lower_bound(trace.begin(), trace.end(), t,
                             [](const TraceSample& s, double v) { return s.t < v; });
  if (it == trace.end()) return trace.back().q;
  if (it->t == t || it == trace.begin()) return it->q;
  const TraceSample& b = *it;
  const TraceSample& a = *std::prev(it);
  return kin::lerp(a.q, b.q, (t - a.t) / (b.t - a.t));
}

}  // namespace

DriftReport drift_report(const Trace& physical, const Trace& twin) {
  if (physical.empty() || twin.empty()) {
    throw Error(ErrorCode::mismatched_traces, "drift: empty trace");
  }
  const double lo = physical.front().t;
  const double hi = physical.back().t;
  DriftReport r;
  double sum = 0.0;
  for (const TraceSample& s : twin) {
    if (s.t < lo || s.t > hi) continue;
    const JointVector p = sample_at(physical, s.t);
    double d = 0.0;
    for (std::size_t j = 0; j < kin::kDof; ++j) {
      const double diff = s.q[j] - p[j];
      r.per_joint[j].push_back(diff);
      d = std::max(d, std::abs(diff));
    }
    r.times.push_back(s.t);
    r.drift.push_back(d);
    r.max_drift = std::max(r.max_drift, d);
    sum += d;
  }
  if (r.times.empty()) {
    throw Error(ErrorCode::mismatched_traces, "drift: traces do not overlap in time");
  }
  r.mean_drift = sum / static_cast<double>(r.times.size());
  return r;
}

SyncLink::SyncLink(ChannelModel channel, const JointVector& q0, Options opts)
    : opts_(opts), channel_(std::move(channel)), twin_(make_twin(q0)) {
  if (opts_.publish_every < 1) {
    throw Error(ErrorCode::invalid_argument, "sync: publish_every must be >= 1");
  }
}

void SyncLink::tick(double now, const JointVector& reading, const JointVector& rate) {
  std::vector<Bytes> outbox;
  if (ticks_ % static_cast<std::uint64_t>(opts_.publish_every) == 0) {
    JointStateMsg msg{++seq_, now, reading, rate};
    last_frame_ = encode(msg);
    outbox.push_back(last_frame_);
  }
  ++ticks_;

  std::vector<JointStateMsg> delivered;
  for (const Bytes& frame : channel_.step(now, std::move(outbox))) {
    try {
      delivered.push_back(decode(frame));
    } catch (const Error&) {
      ++decode_errors_;
    }
  }
  for (const JointStateMsg& m : delivered) {
    if (m.seq <= twin_.last_seq) continue;
    const double age = now - m.timestamp;
    latency_sum_ += age;
    ++latency_count_;
    max_latency_ = std::max(max_latency_, age);
  }
  const std::uint64_t prev_seq = twin_.last_seq;
  twin_ = reconcile(twin_, delivered, now, opts_.v_cap, opts_.horizon);
  if (twin_.last_seq != prev_seq && twin_.gap_flag) ++gaps_;

  if (opts_.record_traces) {
    physical_.push_back({now, reading});
    twin_trace_.push_back({now, twin_.q_estimate});
  }
}

double SyncLink::mean_latency() const {
  return latency_count_ ? latency_sum_ / static_cast<double>(latency_count_) : 0.0;
}

}  // namespace twinarm::sync

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "common/json_file.hpp"
#include "sync/sync.hpp"

namespace twinarm::sync {

namespace {
// Float slack when comparing accumulated tick times with delivery times.
constexpr double kClockEps = 1e-9;
}  // namespace

void validate(const ChannelModel& m) {
  if (!(m.latency_mean >= 0.0) || !(m.latency_jitter_std >= 0.0)) {
    throw Error(ErrorCode::invalid_argument, "channel: latency must be >= 0");
  }
  if (!(m.drop_probability >= 0.0 && m.drop_probability < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "channel: drop_probability must be in [0, 1)");
  }
  if (!(m.duplicate_probability >= 0.0 && m.duplicate_probability < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "channel: duplicate_probability must be in [0, 1)");
  }
}

ChannelModel load_channel_file(const std::filesystem::path& path) {
  const nlohmann::json j = read_json_file(path, "twinarm-channel", 1);
  ChannelModel m;
  m.name = json_get_or<std::string>(j, "name", path.stem().string());
  m.latency_mean = json_get<double>(j, "latency_mean_s");
  m.latency_jitter_std = json_get_or<double>(j, "latency_jitter_std_s", 0.0);
  m.drop_probability = json_get_or<double>(j, "drop_probability", 0.0);
  m.duplicate_probability = json_get_or<double>(j, "duplicate_probability", 0.0);
  m.reorder = json_get_or<bool>(j, "reorder", false);
  m.rng_seed = json_get_or<std::uint64_t>(j, "rng_seed", 1);
  try {
    validate(m);
  } catch (const Error& e) {
    throw Error(ErrorCode::parse, path.string() + ": " + e.what());
  }
  return m;
}

Channel::Channel(ChannelModel model) : model_(std::move(model)), rng_(model_.rng_seed) {
  validate(model_);
}

void Channel::schedule(double now, Bytes payload) {
  double latency = model_.latency_mean;
  if (model_.latency_jitter_std > 0.0) {
    latency += std::normal_distribution<double>(0.0, model_.latency_jitter_std)(rng_);
  }
  double at = now + std::max(0.0, latency);
  if (!model_.reorder) at = std::max(at, last_deliver_at_);
  last_deliver_at_ = std::max(last_deliver_at_, at);

  Pending p{at, order_++, std::move(payload)};
  auto pos = std::upper_bound(in_flight_.begin(), in_flight_.end(), p,
                              [](const Pending& a, const Pending& b) {
                                return a.deliver_at < b.deliver_at ||
                                       (a.deliver_at == b.deliver_at && a.order < b.order);
                              });
  in_flight_.insert(pos, std::move(p));
}

std::vector<Bytes> Channel::step(double now, std::vector<Bytes> inbox) {
  if (now < clock_) {
    throw Error(ErrorCode::invalid_argument, "channel: sim clock went backwards");
  }
  clock_ = now;

  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Bytes& frame : inbox) {
    ++stats_.sent;
    if (u(rng_) < model_.drop_probability) {
      ++stats_.dropped;
      continue;
    }
    if (model_.duplicate_probability > 0.0 && u(rng_) < model_.duplicate_probability) {
      ++stats_.duplicated;
      schedule(now, frame);
    }
    schedule(now, std::move(frame));
  }

  std::vector<Bytes> out;
  while (!in_flight_.empty() && in_flight_.front().deliver_at <= now + kClockEps) {
    out.push_back(std::move(in_flight_.front().payload));
    in_flight_.pop_front();
    ++stats_.delivered;
  }
  return out;
}

}  // namespace twinarm::sync

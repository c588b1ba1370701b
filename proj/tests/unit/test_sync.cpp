#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include <json.hpp>

#include "sync/sync.hpp"
#include "test_support.hpp"

using namespace twinarm;
using namespace twinarm::sync;

namespace {

Bytes from_hex(const std::string& hex) {
  Bytes out;
  for (std::size_t i = 0; i + 1 < hex.size(); i += 2) {
    out.push_back(static_cast<std::uint8_t>(std::stoul(hex.substr(i, 2), nullptr, 16)));
  }
  return out;
}

struct Golden {
  JointStateMsg msg;
  Bytes bytes;
};

std::vector<Golden> golden() {
  std::ifstream in(test::fixture_path("wire_golden.json"));
  const auto j = nlohmann::json::parse(in);
  std::vector<Golden> out;
  for (const auto& m : j.at("messages")) {
    Golden g;
    g.msg.seq = std::stoull(m.at("seq").get<std::string>());
    g.msg.timestamp = m.at("timestamp").get<double>();
    for (std::size_t i = 0; i < kin::kDof; ++i) {
      g.msg.q[i] = m.at("q")[i].get<double>();
      g.msg.qdot[i] = m.at("qdot")[i].get<double>();
    }
    g.bytes = from_hex(m.at("hex").get<std::string>());
    out.push_back(g);
  }
  return out;
}

JointStateMsg sample_msg() {
  return {42, 3.5, {{0.1, -0.2, 0.3, -0.4, 0.5}}, {{1, 2, 3, 4, 5}}};
}

Bytes frame(std::uint64_t seq) {
  return encode({seq, 0.0, {}, {}});
}

}  // namespace

TEST_SUITE("sync") {

TEST_CASE("wire encoding matches the golden bytes") {
  const auto g = golden();
  REQUIRE(g.size() >= 2);
  for (const auto& item : g) {
    CHECK(encode(item.msg) == item.bytes);
    CHECK(decode(item.bytes) == item.msg);
  }
}

TEST_CASE("wire round trip is exact") {
  const JointStateMsg m = sample_msg();
  const Bytes b = encode(m);
  CHECK(b.size() == kWireSize);
  CHECK(kWireSize == 103);
  CHECK(decode(b) == m);
}

TEST_CASE("malformed frames fail to decode") {
  const Bytes good = encode(sample_msg());
  for (std::size_t n : {std::size_t{0}, std::size_t{1}, std::size_t{50}, kWireSize - 1}) {
    test::check_throws_code([&] { decode(std::span(good.data(), n)); }, ErrorCode::decode);
  }
  Bytes longer = good;
  longer.push_back(0);
  test::check_throws_code([&] { decode(longer); }, ErrorCode::decode);

  for (std::size_t i = 0; i < kWireSize; ++i) {
    Bytes bad = good;
    bad[i] ^= 0x10;
    test::check_throws_code([&] { decode(bad); }, ErrorCode::decode);
  }
  Bytes magic = good;
  magic[0] = 'X';
  test::check_throws_code([&] { decode(magic); }, ErrorCode::decode);
  Bytes version = good;
  version[2] = 2;
  test::check_throws_code([&] { decode(version); }, ErrorCode::decode);
}

TEST_CASE("zero-latency channel delivers in the same tick") {
  Channel ch({});
  const auto out = ch.step(0.0, {frame(1)});
  REQUIRE(out.size() == 1);
  CHECK(decode(out[0]).seq == 1);
}

TEST_CASE("fixed latency delays delivery by whole ticks") {
  ChannelModel m;
  m.latency_mean = 0.05;
  Channel ch(m);
  int delivered_at = -1;
  for (int n = 0; n < 20 && delivered_at < 0; ++n) {
    const auto out = ch.step(n * 0.01, n == 0 ? std::vector<Bytes>{frame(1)} : std::vector<Bytes>{});
    if (!out.empty()) delivered_at = n;
  }
  CHECK(delivered_at == 5);
}

TEST_CASE("drop rate and stats") {
  ChannelModel m;
  m.drop_probability = 0.2;
  m.rng_seed = 17;
  Channel ch(m);
  std::size_t got = 0;
  for (int i = 0; i < 20000; ++i) got += ch.step(i * 0.01, {frame(i + 1)}).size();
  const double rate = static_cast<double>(got) / 20000;
  CHECK(rate == doctest::Approx(0.80).epsilon(0.025));
  CHECK(std::abs(rate - 0.80) <= 0.02);
  CHECK(ch.stats().sent == 20000);
  CHECK(ch.stats().dropped + ch.stats().delivered == 20000);
}

TEST_CASE("without reordering delivery is FIFO") {
  ChannelModel m;
  m.latency_mean = 0.03;
  m.latency_jitter_std = 0.02;
  m.rng_seed = 5;
  Channel ch(m);
  std::uint64_t last = 0;
  int n = 0;
  for (int i = 0; i < 2000; ++i) {
    for (const Bytes& b : ch.step(i * 0.01, {frame(i + 1)})) {
      const auto seq = decode(b).seq;
      REQUIRE(seq > last);
      last = seq;
      ++n;
    }
  }
  CHECK(n > 1900);
}

TEST_CASE("channel is deterministic per seed and rejects a backwards clock") {
  auto run = [] {
    ChannelModel m;
    m.latency_mean = 0.02;
    m.latency_jitter_std = 0.01;
    m.drop_probability = 0.1;
    m.duplicate_probability = 0.05;
    m.reorder = true;
    m.rng_seed = 99;
    Channel ch(m);
    std::vector<std::uint64_t> seqs;
    for (int i = 0; i < 500; ++i) {
      for (const Bytes& b : ch.step(i * 0.01, {frame(i + 1)})) seqs.push_back(decode(b).seq);
    }
    return seqs;
  };
  CHECK(run() == run());
  Channel ch({});
  ch.step(1.0, {});
  test::check_throws_code([&] { ch.step(0.5, {}); }, ErrorCode::invalid_argument);
  ChannelModel bad;
  bad.drop_probability = 1.0;
  test::check_throws_code([&] { Channel c(bad); }, ErrorCode::invalid_argument);
}

TEST_CASE("reconcile tracks a static stream exactly") {
  const JointVector q{{0.3, -0.1, 0.2, 0.0, 1.0}};
  TwinState t = make_twin({});
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const JointStateMsg m{s, s * 0.05, q, {}};
    t = reconcile(t, std::span(&m, 1), s * 0.05 + 0.02, 1.0);
    CHECK(t.q_estimate == q);
    CHECK_FALSE(t.gap_flag);
  }
}

TEST_CASE("reconcile flags gaps, ignores stale messages and caps rates") {
  TwinState t = make_twin({});
  const JointStateMsg m1{1, 0.0, {{0.1, 0, 0, 0, 0}}, {}};
  t = reconcile(t, std::span(&m1, 1), 0.0, 1.0);
  const JointStateMsg m3{3, 0.1, {{0.3, 0, 0, 0, 0}}, {{5.0, -5.0, 0.5, 0, 0}}};
  t = reconcile(t, std::span(&m3, 1), 0.15, 1.0);
  CHECK(t.gap_flag);
  CHECK(t.last_seq == 3);
  CHECK(t.q_estimate[0] == doctest::Approx(0.3 + 1.0 * 0.05));
  CHECK(t.q_estimate[1] == doctest::Approx(-1.0 * 0.05));
  CHECK(t.q_estimate[2] == doctest::Approx(0.5 * 0.05));

  const TwinState before = t;
  const JointStateMsg stale{2, 0.05, {{9, 9, 9, 9, 9}}, {}};
  const TwinState after = reconcile(t, std::span(&stale, 1), 0.15, 1.0);
  CHECK(after.q_estimate == before.q_estimate);
  CHECK(after.last_seq == 3);

  // Extrapolation stops at the horizon.
  const TwinState late = reconcile(t, {}, 10.0, 1.0, 0.2);
  CHECK(late.q_estimate[0] == doctest::Approx(0.3 + 0.2));
}

TEST_CASE("drift of identical traces is zero") {
  Trace a;
  for (int i = 0; i < 100; ++i) a.push_back({i * 0.01, {{std::sin(i * 0.1), 0, 0, 0, 0}}});
  const DriftReport r = drift_report(a, a);
  CHECK(r.max_drift == 0.0);
  CHECK(r.mean_drift == 0.0);
  CHECK(r.times.size() == a.size());
  Trace later{{5.0, {}}, {6.0, {}}};
  test::check_throws_code([&] { drift_report(a, later); }, ErrorCode::mismatched_traces);
  test::check_throws_code([&] { drift_report({}, a); }, ErrorCode::mismatched_traces);
}

TEST_CASE("drift interpolates the physical trace") {
  const Trace phys{{0.0, {}}, {1.0, {{1, 0, 0, 0, 0}}}};
  const Trace twin{{0.5, {{0.75, 0, 0, 0, 0}}}};
  const DriftReport r = drift_report(phys, twin);
  CHECK(r.max_drift == doctest::Approx(0.25));
  CHECK(r.per_joint[0][0] == doctest::Approx(0.25));
}

TEST_CASE("perfect channel gives zero drift") {
  SyncLink::Options o;
  o.publish_every = 1;
  SyncLink link({}, {}, o);
  for (int i = 0; i < 500; ++i) {
    const double t = i * 0.01;
    link.tick(t, {{std::sin(t), std::cos(t), 0.1 * t, 0, 0}}, {});
  }
  const DriftReport r = drift_report(link.physical_trace(), link.twin_trace());
  CHECK(r.max_drift == 0.0);
  CHECK(link.physical_trace() == link.twin_trace());
  CHECK(link.gaps() == 0);
  CHECK(link.decode_errors() == 0);
}

TEST_CASE("fixed latency on a ramp shows as constant drift") {
  ChannelModel m;
  m.latency_mean = 0.05;
  SyncLink::Options o;
  o.publish_every = 1;
  o.v_cap = 0.0;
  SyncLink link(m, {}, o);
  for (int i = 0; i < 300; ++i) {
    const double t = i * 0.01;
    link.tick(t, {{t, 0, 0, 0, 0}}, {{1, 0, 0, 0, 0}});
  }
  const DriftReport r = drift_report(link.physical_trace(), link.twin_trace());
  CHECK(std::abs(r.max_drift - 0.05) <= 0.001);
  CHECK(link.mean_latency() == doctest::Approx(0.05));
}

TEST_CASE("sync link runs are bit-reproducible") {
  auto run = [] {
    const ChannelModel m = load_channel_file(test::data_path("channels/impaired.json"));
    SyncLink link(m, {}, {});
    for (int i = 0; i < 1000; ++i) {
      const double t = i * 0.01;
      link.tick(t, {{std::sin(t), 0.5 * t, 0, 0, 0}}, {{std::cos(t), 0.5, 0, 0, 0}});
    }
    return std::make_pair(link.twin_trace(), link.channel().stats().dropped);
  };
  const auto a = run(), b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
  CHECK(a.second > 0);
}

TEST_CASE("channel files") {
  const ChannelModel lan = load_channel_file(test::data_path("channels/lan.json"));
  CHECK(lan.name == "lan");
  CHECK(lan.latency_mean == doctest::Approx(0.005));
  const auto bad = test::write_temp("bad-channel.json",
      R"({"format": "twinarm-channel", "version": 1, "latency_mean_s": 0.0, "drop_probability": 2})");
  test::check_throws_code([&] { load_channel_file(bad); }, ErrorCode::parse);
}

}  // TEST_SUITE

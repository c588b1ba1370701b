#include <bit>
#include <cstring>

#include <zlib.h>

#include "common/error.hpp"
#include "sync/sync.hpp"

namespace twinarm::sync {

namespace {

void put_u64(Bytes& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(Bytes& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n) {
  return static_cast<std::uint32_t>(
      ::crc32(::crc32(0L, Z_NULL, 0), data, static_cast<uInt>(n)));
}

}  // namespace

Bytes encode(const JointStateMsg& msg) {
  Bytes out;
  out.reserve(kWireSize);
  out.push_back(kMagic0);
  out.push_back(kMagic1);
  out.push_back(kWireVersion);
  put_u64(out, msg.seq);
  put_f64(out, msg.timestamp);
  for (double v : msg.q.q) put_f64(out, v);
  for (double v : msg.qdot.q) put_f64(out, v);
  put_u32(out, crc32_of(out.data(), out.size()));
  return out;
}

JointStateMsg decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kWireSize) {
    throw Error(ErrorCode::decode, "joint state frame too short");
  }
  if (bytes.size() > kWireSize) {
    throw Error(ErrorCode::decode, "joint state frame too long");
  }
  const std::uint8_t* p = bytes.data();
  if (p[0] != kMagic0 || p[1] != kMagic1) {
    throw Error(ErrorCode::decode, "bad magic");
  }
  if (p[2] != kWireVersion) {
    throw Error(ErrorCode::decode, "unsupported wire version " + std::to_string(p[2]));
  }
  const std::size_t body = kWireSize - 4;
  if (crc32_of(p, body) != get_u32(p + body)) {
    throw Error(ErrorCode::decode, "checksum mismatch");
  }
  JointStateMsg msg;
  std::size_t off = 3;
  msg.seq = get_u64(p + off);
  off += 8;
  msg.timestamp = std::bit_cast<double>(get_u64(p + off));
  off += 8;
  for (double& v : msg.q.q) {
    v = std::bit_cast<double>(get_u64(p + off));
    off += 8;
  }
  for (double& v : msg.qdot.q) {
    v = std::bit_cast<double>(get_u64(p + off));
    off += 8;
  }
  return msg;
}

}  // namespace twinarm::sync

#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "harness/cell.hpp"
#include "harness/scenario.hpp"

namespace twinarm::harness {

// Teleop protocol, one WebSocket per client:
//   server -> client, binary: twin JointStateMsg in the wire layout, at the
//     publish rate of the cell.
//   client -> server, text: {"cmd": ..., "id": <optional>} commands
//     target {"pose": {"position": [x,y,z], "pitch": p, "roll": r}}
//     jog {"joint": 0..4, "delta": rad}
//     start {"task": "placement"|"pipetting"|"repeatability", "cycles": n}
//     stop, metrics, describe
//   server -> client, text: {"type": "ack", "cmd", "id", ...} or
//     {"type": "error", "cmd", "id", "code", "message"}.
inline constexpr int kProtocolVersion = 1;

struct ServerConfig {
  std::string bind_address = "127.0.0.1";
  std::uint16_t port = 8765;  // 0 picks a free port
  CellConfig cell;
  Layout layout;
  double realtime_factor = 1.0;  // sim seconds per wall second
};

class TeleopServer {
 public:
  explicit TeleopServer(ServerConfig cfg);
  ~TeleopServer();
  TeleopServer(const TeleopServer&) = delete;
  TeleopServer& operator=(const TeleopServer&) = delete;

  // Binds and starts the network and sim threads. Throws IoError if the
  // address cannot be bound.
  void start();
  std::uint16_t port() const;
  void stop();
  // Blocks until stop() is called from another thread.
  void wait();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace twinarm::harness

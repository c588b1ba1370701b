#include "harness/server.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <json.hpp>

#include "common/error.hpp"
#include "common/json_file.hpp"

namespace twinarm::harness {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;

namespace {

// Stream frames beyond this backlog are skipped for a slow client.
constexpr std::size_t kMaxBacklog = 256;
constexpr std::size_t kMaxMessage = 64 * 1024;

class Session : public std::enable_shared_from_this<Session> {
 public:
  using Inbox = std::function<void(const std::shared_ptr<Session>&, bool text, std::string)>;

  Session(tcp::socket socket, Inbox inbox) : ws_(std::move(socket)), inbox_(std::move(inbox)) {}

  void run() {
    net::dispatch(ws_.get_executor(), [self = shared_from_this()] { self->on_run(); });
  }

  // Thread-safe.
  void send(std::string data, bool binary) {
    net::post(ws_.get_executor(), [self = shared_from_this(), d = std::move(data), binary]() mutable {
      self->enqueue(std::move(d), binary);
    });
  }

  bool open() const { return open_.load(); }

 private:
  struct Frame {
    std::string data;
    bool binary;
  };

  void on_run() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.read_message_max(kMaxMessage);
    ws_.async_accept(beast::bind_front_handler(&Session::on_accept, shared_from_this()));
  }

  void on_accept(beast::error_code ec) {
    if (ec) return;
    open_ = true;
    do_read();
  }

  void do_read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&Session::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      open_ = false;
      return;
    }
    std::string msg = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    inbox_(shared_from_this(), ws_.got_text(), std::move(msg));
    do_read();
  }

  void enqueue(std::string data, bool binary) {
    if (!open_) return;
    if (binary && queue_.size() > kMaxBacklog) return;
    queue_.push_back({std::move(data), binary});
    if (queue_.size() == 1) do_write();
  }

  void do_write() {
    ws_.binary(queue_.front().binary);
    ws_.async_write(net::buffer(queue_.front().data),
                    beast::bind_front_handler(&Session::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) {
      open_ = false;
      queue_.clear();
      return;
    }
    queue_.pop_front();
    if (!queue_.empty()) do_write();
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<Frame> queue_;
  std::atomic<bool> open_{false};
  Inbox inbox_;
};

json pose_json(const Pose& p) {
  return {{"position", {p.position.x, p.position.y, p.position.z}}, {"pitch", p.pitch}, {"roll", p.roll}};
}

Pose pose_from(const json& j) {
  const auto pos = json_get<std::vector<double>>(j, "position");
  if (pos.size() != 3) throw Error(ErrorCode::invalid_argument, "pose.position needs 3 values");
  return {{pos[0], pos[1], pos[2]}, json_get_or<double>(j, "pitch", 0.0), json_get_or<double>(j, "roll", 0.0)};
}

json error_frame(const json& id, const std::string& cmd, std::string_view code, const std::string& message) {
  json e = {{"type", "error"}, {"code", code}, {"message", message}};
  if (!id.is_null()) e["id"] = id;
  if (!cmd.empty()) e["cmd"] = cmd;
  return e;
}

}  // namespace

struct TeleopServer::Impl {
  struct Pending {
    std::weak_ptr<Session> from;
    json command;
  };

  explicit Impl(ServerConfig c) : cfg(std::move(c)), cell(cfg.cell) {
    if (!(cfg.realtime_factor > 0.0)) {
      throw Error(ErrorCode::invalid_argument, "server: realtime_factor must be > 0");
    }
  }

  ServerConfig cfg;
  Cell cell;  // touched only by the sim thread once started
  net::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  std::thread io_thread;
  std::thread sim_thread;
  std::atomic<bool> stopping{false};
  bool started = false;

  std::mutex state_mu;
  std::condition_variable state_cv;
  bool stopped = false;

  std::mutex sessions_mu;
  std::vector<std::weak_ptr<Session>> sessions;

  std::mutex cmd_mu;
  std::deque<Pending> commands;
  std::uint64_t out_seq = 0;

  void bind() {
    beast::error_code ec;
    const auto addr = net::ip::make_address(cfg.bind_address, ec);
    if (ec) throw Error(ErrorCode::invalid_argument, "bad bind address '" + cfg.bind_address + "'");
    const tcp::endpoint ep(addr, cfg.port);
    acceptor.open(ep.protocol(), ec);
    if (!ec) acceptor.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) acceptor.bind(ep, ec);
    if (!ec) acceptor.listen(net::socket_base::max_listen_connections, ec);
    if (ec) {
      throw Error(ErrorCode::io, "cannot listen on " + cfg.bind_address + ":" +
                                     std::to_string(cfg.port) + ": " + ec.message());
    }
  }

  void do_accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (!acceptor.is_open()) return;
      } else {
        auto s = std::make_shared<Session>(
            std::move(socket),
            [this](const std::shared_ptr<Session>& from, bool text, std::string msg) {
              on_message(from, text, std::move(msg));
            });
        {
          std::lock_guard lk(sessions_mu);
          std::erase_if(sessions, [](const std::weak_ptr<Session>& w) { return w.expired(); });
          sessions.push_back(s);
        }
        s->run();
      }
      do_accept();
    });
  }

  // Network thread: malformed input is answered here, valid commands queue
  // for the sim thread.
  void on_message(const std::shared_ptr<Session>& from, bool text, std::string msg) {
    if (!text) {
      from->send(error_frame(nullptr, "", "ParseError", "binary frames are not accepted").dump(), false);
      return;
    }
    json j = json::parse(msg, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("cmd") || !j["cmd"].is_string()) {
      from->send(error_frame(nullptr, "", "ParseError", "expected a JSON object with a string 'cmd'").dump(), false);
      return;
    }
    std::lock_guard lk(cmd_mu);
    commands.push_back({from, std::move(j)});
  }

  json handle(const json& c) {
    const std::string cmd = c["cmd"].get<std::string>();
    json ack = {{"type", "ack"}, {"cmd", cmd}};
    if (c.contains("id")) ack["id"] = c["id"];

    if (cmd == "target") {
      if (!c.contains("pose") || !c["pose"].is_object()) {
        throw Error(ErrorCode::invalid_argument, "target needs a 'pose' object");
      }
      const Pose target = pose_from(c["pose"]);
      const MotionPlan mp = cell.begin_move(target, 0.0);
      cell.clear_queue();
      ack["goal"] = mp.goal.q;
      ack["ik"] = {{"iterations", mp.ik.iterations},
                   {"position_residual", mp.ik.position_residual},
                   {"angular_residual", mp.ik.angular_residual}};
      ack["duration_s"] = mp.trajectory.duration();
      ack["waypoints"] = mp.path.waypoints.size();
    } else if (cmd == "jog") {
      const int joint = json_get<int>(c, "joint");
      const double delta = json_get<double>(c, "delta");
      if (joint < 0 || joint >= static_cast<int>(kin::kDof) || !std::isfinite(delta)) {
        throw Error(ErrorCode::invalid_argument, "jog needs joint in 0..4 and a finite delta");
      }
      JointVector goal = cell.command_now();
      goal[static_cast<std::size_t>(joint)] += delta;
      const MotionPlan mp = cell.begin_joint_move(goal, 0.0);
      cell.clear_queue();
      ack["goal"] = mp.goal.q;
      ack["duration_s"] = mp.trajectory.duration();
    } else if (cmd == "start") {
      const Task task = parse_task(json_get<std::string>(c, "task"));
      const int cycles = json_get_or<int>(c, "cycles", 1);
      if (cycles < 1 || cycles > 10000) throw Error(ErrorCode::invalid_argument, "cycles must be in 1..10000");
      if (task == Task::planning_benchmark) {
        throw Error(ErrorCode::invalid_argument, "the planning benchmark is an offline task");
      }
      cell.halt();
      const Layout& l = cfg.layout;
      std::size_t n = 0;
      cell.set_tool(task == Task::pipetting ? emu::Tool::pipette : emu::Tool::gripper);
      for (int i = 0; i < cycles; ++i) {
        const auto k = task == Task::repeatability ? 0 : static_cast<std::size_t>(i);
        const std::vector<Action> script =
            task == Task::pipetting
                ? pipette_cycle(l, l.wells[k % l.wells.size()])
                : pick_place_cycle(l, l.sources[k % l.sources.size()],
                                   l.targets[k % l.targets.size()], "vial-" + std::to_string(i));
        for (const Action& a : script) cell.enqueue(a);
        n += script.size();
      }
      cell.clear_error();
      ack["task"] = task_name(task);
      ack["queued_actions"] = n;
    } else if (cmd == "stop") {
      cell.halt();
    } else if (cmd == "metrics") {
      const sync::TwinState& twin = cell.link().twin();
      double drift = 0.0;
      for (std::size_t j = 0; j < kin::kDof; ++j) {
        drift = std::max(drift, std::abs(twin.q_estimate[j] - cell.state().q_measured[j]));
      }
      const auto& st = cell.link().channel().stats();
      ack["t"] = cell.now();
      ack["busy"] = cell.busy();
      ack["twin"] = {{"q", twin.q_estimate.q}, {"last_seq", twin.last_seq}, {"gap_flag", twin.gap_flag}};
      ack["physical_tool"] = pose_json(cell.physical_pose());
      ack["twin_tool"] = pose_json(cell.twin_pose());
      ack["drift_rad"] = drift;
      ack["sync"] = {{"sent", st.sent}, {"delivered", st.delivered}, {"dropped", st.dropped},
                     {"gaps", cell.link().gaps()}, {"mean_latency_s", cell.link().mean_latency()}};
      ack["energy"] = {{"mean_current_a", cell.energy().mean_current()},
                       {"mean_power_w", cell.energy().mean_power()},
                       {"energy_j", cell.energy().energy}};
      if (cell.last_error()) {
        ack["last_error"] = {{"code", error_code_name(cell.last_error()->code())},
                             {"message", cell.last_error()->what()}};
      }
    } else if (cmd == "describe") {
      ack["protocol"] = kProtocolVersion;
      ack["arm"] = json::parse(kin::arm_json_text(cell.config().arm));
      ack["tick_s"] = cell.config().tick;
      ack["publish_hz"] = 1.0 / (cell.config().tick * cell.config().publish_every);
      ack["wire"] = {{"size", sync::kWireSize}, {"version", sync::kWireVersion}};
      ack["profile"] = cell.config().profile.label;
      ack["channel"] = cell.config().channel.name;
    } else {
      throw Error(ErrorCode::invalid_argument, "unknown command '" + cmd + "'");
    }
    return ack;
  }

  void drain_commands() {
    std::deque<Pending> batch;
    {
      std::lock_guard lk(cmd_mu);
      batch.swap(commands);
    }
    for (Pending& p : batch) {
      json reply;
      const json id = p.command.contains("id") ? p.command["id"] : json();
      const std::string cmd = p.command["cmd"].get<std::string>();
      try {
        reply = handle(p.command);
      } catch (const Error& e) {
        reply = error_frame(id, cmd, error_code_name(e.code()), e.what());
      } catch (const std::exception& e) {
        reply = error_frame(id, cmd, "InternalError", e.what());
      }
      if (auto s = p.from.lock()) s->send(reply.dump(), false);
    }
  }

  void broadcast_twin() {
    const sync::TwinState& twin = cell.link().twin();
    const sync::Bytes frame =
        sync::encode({++out_seq, cell.now(), twin.q_estimate, twin.base_qdot});
    const std::string data(frame.begin(), frame.end());
    std::lock_guard lk(sessions_mu);
    for (const auto& w : sessions) {
      if (auto s = w.lock(); s && s->open()) s->send(data, true);
    }
  }

  void sim_loop() {
    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration_cast<clock::duration>(
        std::chrono::duration<double>(cfg.cell.tick / cfg.realtime_factor));
    auto next = clock::now();
    while (!stopping) {
      drain_commands();
      cell.tick();
      if (cell.ticks() % static_cast<std::uint64_t>(cell.config().publish_every) == 0) broadcast_twin();
      next += period;
      const auto now = clock::now();
      if (now > next + std::chrono::seconds(1)) next = now;  // fell far behind
      std::this_thread::sleep_until(next);
    }
  }
};

TeleopServer::TeleopServer(ServerConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}

TeleopServer::~TeleopServer() { stop(); }

void TeleopServer::start() {
  Impl& s = *impl_;
  if (s.started) throw Error(ErrorCode::invalid_argument, "server already started");
  s.bind();
  s.started = true;
  s.do_accept();
  s.io_thread = std::thread([&s] { s.ioc.run(); });
  s.sim_thread = std::thread([&s] { s.sim_loop(); });
}

std::uint16_t TeleopServer::port() const {
  beast::error_code ec;
  const auto ep = impl_->acceptor.local_endpoint(ec);
  return ec ? 0 : ep.port();
}

void TeleopServer::stop() {
  Impl& s = *impl_;
  if (s.stopping.exchange(true)) return;
  if (s.sim_thread.joinable()) s.sim_thread.join();
  net::post(s.ioc, [&s] {
    beast::error_code ec;
    s.acceptor.close(ec);
  });
  s.ioc.stop();
  if (s.io_thread.joinable()) s.io_thread.join();
  {
    std::lock_guard lk(s.state_mu);
    s.stopped = true;
  }
  s.state_cv.notify_all();
}

void TeleopServer::wait() {
  Impl& s = *impl_;
  std::unique_lock lk(s.state_mu);
  s.state_cv.wait(lk, [&s] { return s.stopped; });
}

}  // namespace twinarm::harness

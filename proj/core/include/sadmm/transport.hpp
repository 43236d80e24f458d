#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "sadmm/wire.hpp"

namespace sadmm {

// One duplex frame pipe between the master and a single worker.
class Channel {
 public:
  virtual ~Channel() = default;
  virtual void send(const std::vector<std::uint8_t>& frame) = 0;
  // blocks for a complete frame; throws ProtocolError when the peer is gone
  virtual std::vector<std::uint8_t> recv() = 0;
};

struct SeqEvent {
  enum Kind : std::uint8_t { send_assign, send_params, recv_result, send_shutdown };
  Kind kind;
  int worker_id;
  std::uint32_t k;
};

// Master's view of the worker pool. Enforces the lockstep protocol: round
// k+1 parameters can only go out after every round-k result was gathered,
// which the sequence log makes checkable.
class MasterEndpoints {
 public:
  explicit MasterEndpoints(std::vector<std::unique_ptr<Channel>> channels);

  int size() const { return static_cast<int>(channels_.size()); }

  void assign(const std::vector<AssignShardMsg>& msgs);

  // params[i] goes to worker i; all entries must carry the same round index
  void broadcast_round(const std::vector<RoundParamsMsg>& params);

  // Collects one result per worker, returned ordered by worker_id. Throws
  // ProtocolError on a stale round index, an unexpected message type, or a
  // disconnect (naming the worker).
  std::vector<RoundResultMsg> gather_round(std::uint32_t k);

  void shutdown();

  const std::vector<SeqEvent>& sequence_log() const { return log_; }

 private:
  std::vector<std::unique_ptr<Channel>> channels_;
  std::vector<SeqEvent> log_;
  bool round_open_ = false;
  std::uint32_t open_k_ = 0;
};

// Runs one worker: waits for AssignShard, answers RoundParams with
// RoundResult until Shutdown. Solver failures are reported through a
// RoundResult with ok = false rather than tearing the channel down.
void run_worker(Channel& channel);

namespace detail {

class FrameQueue {
 public:
  void push(std::vector<std::uint8_t> frame);
  std::vector<std::uint8_t> pop();  // blocks; throws ProtocolError when closed and drained
  void close();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::vector<std::uint8_t>> q_;
  bool closed_ = false;
};

}  // namespace detail

// In-process transport: N worker threads over in-memory frame queues. The
// byte stream is identical to what the TCP carrier would move.
class LoopbackCluster {
 public:
  explicit LoopbackCluster(int n_workers);
  ~LoopbackCluster();

  LoopbackCluster(const LoopbackCluster&) = delete;
  LoopbackCluster& operator=(const LoopbackCluster&) = delete;

  MasterEndpoints& endpoints() { return *endpoints_; }

  struct Pipe;  // in-memory frame queues, defined with the implementation

 private:
  std::vector<std::shared_ptr<Pipe>> pipes_;
  std::vector<std::thread> threads_;
  std::unique_ptr<MasterEndpoints> endpoints_;
};

// --- TCP carrier ---

std::pair<std::string, std::uint16_t> parse_hostport(const std::string& s);

class TcpListener {
 public:
  // binds and listens; port 0 picks an ephemeral port (see port())
  explicit TcpListener(const std::string& hostport);
  ~TcpListener();

  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const { return port_; }
  std::unique_ptr<Channel> accept_one();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

// connects with retries (the master may still be coming up)
std::unique_ptr<Channel> tcp_connect(const std::string& hostport, int timeout_ms = 10000);

// accepts n workers and wraps them; worker ids follow accept order
MasterEndpoints accept_workers(TcpListener& listener, int n_workers);

}  // namespace sadmm

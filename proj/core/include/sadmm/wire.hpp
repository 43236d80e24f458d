#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "sadmm/config.hpp"
#include "sadmm/model.hpp"
#include "sadmm/trace.hpp"

namespace sadmm {

// Frame layout, all multi-byte integers little-endian:
//   magic "SADM" | version u8 = 1 | msg_type u8 | payload_len u32 | payload
// f64 arrays inside payloads are IEEE-754 little-endian with a u32 length prefix.
inline constexpr char kFrameMagic[4] = {'S', 'A', 'D', 'M'};
inline constexpr std::uint8_t kProtocolVersion = 1;
inline constexpr std::size_t kFrameHeaderSize = 10;

enum class MsgType : std::uint8_t {
  assign_shard = 1,
  round_params = 2,
  round_result = 3,
  shutdown = 4,
};

enum class Directive : std::uint8_t { exact = 0, sensitivity = 1, ladmm = 2 };

// solver settings a worker needs locally, shipped once with the shard
struct SolveContext {
  double rho = 1.0;
  double newton_tol = 1e-8;
  double opt_tol = 0.01;
  double ladmm_mu = 10000.0;
  std::uint32_t max_correctors = 20;
  bool exact_solve_uses_stale_params = false;
  bool deterministic_timing = false;
};

struct AssignShardMsg {
  std::uint32_t worker_id = 0;
  ModelSpec spec;
  SolveContext ctx;
  Vector x_init;
  Shard shard;
};

struct RoundParamsMsg {
  std::uint32_t k = 0;
  Directive directive = Directive::exact;
  Vector x0;
  Vector lambda;
};

struct RoundResultMsg {
  std::uint32_t k = 0;
  std::uint32_t worker_id = 0;
  bool ok = true;
  std::string error;  // only when !ok
  Vector x;
  double eps_norm = 0.0;
  WorkerStats stats;
};

struct ShutdownMsg {};

using Message = std::variant<AssignShardMsg, RoundParamsMsg, RoundResultMsg, ShutdownMsg>;

// one complete frame (header + payload)
std::vector<std::uint8_t> encode(const Message& msg);

// decodes a complete frame; throws ProtocolError on bad magic/version/type,
// truncated or over-long payloads
Message decode(const std::vector<std::uint8_t>& frame);

struct FrameHeader {
  MsgType type;
  std::uint32_t payload_len;
};

// validates magic/version and extracts the length (first kFrameHeaderSize bytes)
FrameHeader parse_frame_header(const std::uint8_t* bytes, std::size_t len);

}  // namespace sadmm

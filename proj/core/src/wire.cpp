#include "sadmm/wire.hpp"

#include <bit>
#include <cstring>

namespace sadmm {

namespace {

// writers append little-endian regardless of host order
void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 24));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

void put_vec(std::vector<std::uint8_t>& out, const Vector& v) {
  put_u32(out, static_cast<std::uint32_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) put_f64(out, v[i]);
}

void put_string(std::vector<std::uint8_t>& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

struct Reader {
  const std::uint8_t* p;
  std::size_t left;

  void need(std::size_t n) const {
    if (n > left) throw ProtocolError("wire: truncated payload");
  }
  std::uint8_t u8() {
    need(1);
    std::uint8_t v = *p;
    ++p;
    --left;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                      (static_cast<std::uint32_t>(p[2]) << 16) |
                      (static_cast<std::uint32_t>(p[3]) << 24);
    p += 4;
    left -= 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    p += 8;
    left -= 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  Vector vec() {
    const std::uint32_t n = u32();
    need(std::size_t{8} * n);
    Vector v(n);
    for (std::uint32_t i = 0; i < n; ++i) v[i] = f64();
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(p), n);
    p += n;
    left -= n;
    return s;
  }
};

void encode_assign(std::vector<std::uint8_t>& out, const AssignShardMsg& m) {
  put_u32(out, m.worker_id);
  put_u8(out, static_cast<std::uint8_t>(m.spec.kind));
  put_u32(out, static_cast<std::uint32_t>(m.spec.input_dim));
  put_u32(out, static_cast<std::uint32_t>(m.spec.hidden));
  put_u32(out, static_cast<std::uint32_t>(m.spec.outputs));
  put_u8(out, static_cast<std::uint8_t>(m.spec.basis));
  put_f64(out, m.ctx.rho);
  put_f64(out, m.ctx.newton_tol);
  put_f64(out, m.ctx.opt_tol);
  put_f64(out, m.ctx.ladmm_mu);
  put_u32(out, m.ctx.max_correctors);
  std::uint8_t flags = 0;
  if (m.ctx.exact_solve_uses_stale_params) flags |= 1;
  if (m.ctx.deterministic_timing) flags |= 2;
  put_u8(out, flags);
  put_vec(out, m.x_init);
  const bool classed = m.spec.kind == ModelKind::softmax_classifier;
  put_u8(out, classed ? 1 : 0);
  put_u32(out, static_cast<std::uint32_t>(m.shard.features.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.shard.features.cols()));
  for (Eigen::Index r = 0; r < m.shard.features.rows(); ++r)
    for (Eigen::Index c = 0; c < m.shard.features.cols(); ++c) put_f64(out, m.shard.features(r, c));
  if (classed) {
    for (Eigen::Index r = 0; r < m.shard.classes.size(); ++r)
      put_u32(out, static_cast<std::uint32_t>(m.shard.classes[r]));
  } else {
    put_u32(out, static_cast<std::uint32_t>(m.shard.labels.cols()));
    for (Eigen::Index r = 0; r < m.shard.labels.rows(); ++r)
      for (Eigen::Index c = 0; c < m.shard.labels.cols(); ++c) put_f64(out, m.shard.labels(r, c));
  }
}

AssignShardMsg decode_assign(Reader& in) {
  AssignShardMsg m;
  m.worker_id = in.u32();
  m.spec.kind = static_cast<ModelKind>(in.u8());
  m.spec.input_dim = static_cast<int>(in.u32());
  m.spec.hidden = static_cast<int>(in.u32());
  m.spec.outputs = static_cast<int>(in.u32());
  m.spec.basis = static_cast<Basis>(in.u8());
  m.ctx.rho = in.f64();
  m.ctx.newton_tol = in.f64();
  m.ctx.opt_tol = in.f64();
  m.ctx.ladmm_mu = in.f64();
  m.ctx.max_correctors = in.u32();
  const std::uint8_t flags = in.u8();
  m.ctx.exact_solve_uses_stale_params = flags & 1;
  m.ctx.deterministic_timing = flags & 2;
  m.x_init = in.vec();
  const bool classed = in.u8() != 0;
  const std::uint32_t rows = in.u32();
  const std::uint32_t cols = in.u32();
  in.need(std::size_t{8} * rows * cols);
  m.shard.features.resize(rows, cols);
  for (std::uint32_t r = 0; r < rows; ++r)
    for (std::uint32_t c = 0; c < cols; ++c) m.shard.features(r, c) = in.f64();
  if (classed) {
    m.shard.classes.resize(rows);
    for (std::uint32_t r = 0; r < rows; ++r) m.shard.classes[r] = static_cast<int>(in.u32());
  } else {
    const std::uint32_t lcols = in.u32();
    in.need(std::size_t{8} * rows * lcols);
    m.shard.labels.resize(rows, lcols);
    for (std::uint32_t r = 0; r < rows; ++r)
      for (std::uint32_t c = 0; c < lcols; ++c) m.shard.labels(r, c) = in.f64();
  }
  return m;
}

void encode_params(std::vector<std::uint8_t>& out, const RoundParamsMsg& m) {
  put_u32(out, m.k);
  put_u8(out, static_cast<std::uint8_t>(m.directive));
  put_vec(out, m.x0);
  put_vec(out, m.lambda);
}

RoundParamsMsg decode_params(Reader& in) {
  RoundParamsMsg m;
  m.k = in.u32();
  const std::uint8_t d = in.u8();
  if (d > 2) throw ProtocolError("wire: bad directive byte");
  m.directive = static_cast<Directive>(d);
  m.x0 = in.vec();
  m.lambda = in.vec();
  return m;
}

void encode_result(std::vector<std::uint8_t>& out, const RoundResultMsg& m) {
  put_u32(out, m.k);
  put_u32(out, m.worker_id);
  put_u8(out, m.ok ? 0 : 1);
  if (!m.ok) {
    put_string(out, m.error);
    return;
  }
  put_vec(out, m.x);
  put_f64(out, m.eps_norm);
  put_f64(out, m.stats.local_loss);
  put_u8(out, static_cast<std::uint8_t>(m.stats.mode));
  put_u8(out, m.stats.fell_back ? 1 : 0);
  put_u32(out, static_cast<std::uint32_t>(m.stats.newton_iters));
  put_u32(out, static_cast<std::uint32_t>(m.stats.corrector_iters));
  put_u32(out, static_cast<std::uint32_t>(m.stats.linear_solves));
  put_f64(out, m.stats.wall_time_s);
}

RoundResultMsg decode_result(Reader& in) {
  RoundResultMsg m;
  m.k = in.u32();
  m.worker_id = in.u32();
  m.ok = in.u8() == 0;
  if (!m.ok) {
    m.error = in.str();
    return m;
  }
  m.x = in.vec();
  m.eps_norm = in.f64();
  m.stats.worker_id = static_cast<int>(m.worker_id);
  m.stats.local_loss = in.f64();
  m.stats.mode = static_cast<SolveMode>(in.u8());
  m.stats.fell_back = in.u8() != 0;
  m.stats.newton_iters = static_cast<int>(in.u32());
  m.stats.corrector_iters = static_cast<int>(in.u32());
  m.stats.linear_solves = static_cast<int>(in.u32());
  m.stats.wall_time_s = in.f64();
  m.stats.eps_norm = m.eps_norm;
  return m;
}

}  // namespace

std::vector<std::uint8_t> encode(const Message& msg) {
  std::vector<std::uint8_t> out;
  out.reserve(64);
  out.insert(out.end(), kFrameMagic, kFrameMagic + 4);
  put_u8(out, kProtocolVersion);
  MsgType type;
  std::vector<std::uint8_t> payload;
  if (const auto* a = std::get_if<AssignShardMsg>(&msg)) {
    type = MsgType::assign_shard;
    encode_assign(payload, *a);
  } else if (const auto* p = std::get_if<RoundParamsMsg>(&msg)) {
    type = MsgType::round_params;
    encode_params(payload, *p);
  } else if (const auto* r = std::get_if<RoundResultMsg>(&msg)) {
    type = MsgType::round_result;
    encode_result(payload, *r);
  } else {
    type = MsgType::shutdown;
  }
  put_u8(out, static_cast<std::uint8_t>(type));
  put_u32(out, static_cast<std::uint32_t>(payload.size()));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

FrameHeader parse_frame_header(const std::uint8_t* bytes, std::size_t len) {
  if (len < kFrameHeaderSize) throw ProtocolError("wire: short frame header");
  if (std::memcmp(bytes, kFrameMagic, 4) != 0) throw ProtocolError("wire: bad magic");
  if (bytes[4] != kProtocolVersion)
    throw ProtocolError("wire: protocol version " + std::to_string(bytes[4]) + ", expected " +
                        std::to_string(kProtocolVersion));
  const std::uint8_t t = bytes[5];
  if (t < 1 || t > 4) throw ProtocolError("wire: unknown message type " + std::to_string(t));
  FrameHeader h;
  h.type = static_cast<MsgType>(t);
  h.payload_len = static_cast<std::uint32_t>(bytes[6]) | (static_cast<std::uint32_t>(bytes[7]) << 8) |
                  (static_cast<std::uint32_t>(bytes[8]) << 16) |
                  (static_cast<std::uint32_t>(bytes[9]) << 24);
  return h;
}

Message decode(const std::vector<std::uint8_t>& frame) {
  const FrameHeader h = parse_frame_header(frame.data(), frame.size());
  if (frame.size() != kFrameHeaderSize + h.payload_len)
    throw ProtocolError("wire: frame length mismatch");
  Reader in{frame.data() + kFrameHeaderSize, h.payload_len};
  Message m;
  switch (h.type) {
    case MsgType::assign_shard:
      m = decode_assign(in);
      break;
    case MsgType::round_params:
      m = decode_params(in);
      break;
    case MsgType::round_result:
      m = decode_result(in);
      break;
    case MsgType::shutdown:
      m = ShutdownMsg{};
      break;
  }
  if (in.left != 0) throw ProtocolError("wire: trailing bytes in payload");
  return m;
}

}  // namespace sadmm

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <random>
#include <thread>
#include <vector>

#include "sadmm/errors.hpp"
#include "sadmm/transport.hpp"
#include "sadmm/wire.hpp"

using namespace sadmm;

namespace {

// y = 2u - 1 on a handful of points; workers fit a 2-parameter affine model
AssignShardMsg make_assignment(std::uint32_t worker_id, int rows) {
  AssignShardMsg m;
  m.worker_id = worker_id;
  m.spec.kind = ModelKind::linear_features;
  m.spec.input_dim = 1;
  m.spec.outputs = 1;
  m.spec.basis = Basis::affine;
  m.ctx.rho = 1.0;
  m.ctx.deterministic_timing = true;
  m.x_init = Vector::Zero(2);
  m.shard.features.resize(rows, 1);
  m.shard.labels.resize(rows, 1);
  std::mt19937_64 rng(17 + worker_id);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int r = 0; r < rows; ++r) {
    const double u = unif(rng);
    m.shard.features(r, 0) = u;
    m.shard.labels(r, 0) = 2.0 * u - 1.0;
  }
  return m;
}

std::vector<RoundParamsMsg> same_round(int n_workers, std::uint32_t k, Directive d,
                                       const Vector& x0, const Vector& lambda) {
  std::vector<RoundParamsMsg> out(n_workers);
  for (auto& p : out) {
    p.k = k;
    p.directive = d;
    p.x0 = x0;
    p.lambda = lambda;
  }
  return out;
}

}  // namespace

TEST_CASE("frame queue preserves order and reports closed peers") {
  detail::FrameQueue q;
  q.push({1});
  q.push({2, 3});
  CHECK(q.pop() == std::vector<std::uint8_t>{1});
  CHECK(q.pop() == std::vector<std::uint8_t>{2, 3});

  // blocked pop wakes when a frame arrives from another thread
  std::atomic<bool> got{false};
  std::thread consumer([&] {
    CHECK(q.pop() == std::vector<std::uint8_t>{7});
    got = true;
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  CHECK_FALSE(got.load());
  q.push({7});
  consumer.join();
  CHECK(got.load());

  q.push({9});
  q.close();
  CHECK(q.pop() == std::vector<std::uint8_t>{9});  // drained before the error
  CHECK_THROWS_AS(q.pop(), ProtocolError);
  CHECK_THROWS_AS(q.push({1}), ProtocolError);
}

TEST_CASE("loopback workers answer rounds in lockstep") {
  const int n_workers = 3;
  LoopbackCluster cluster(n_workers);
  MasterEndpoints& ep = cluster.endpoints();
  CHECK(ep.size() == n_workers);

  std::vector<AssignShardMsg> assigns;
  for (int i = 0; i < n_workers; ++i) assigns.push_back(make_assignment(i, 30));
  ep.assign(assigns);

  const Vector x0 = Vector::Zero(2);
  Vector lambda = Vector::Zero(2);
  ep.broadcast_round(same_round(n_workers, 0, Directive::exact, x0, lambda));
  auto results = ep.gather_round(0);
  REQUIRE(static_cast<int>(results.size()) == n_workers);
  for (int i = 0; i < n_workers; ++i) {
    CHECK(results[i].ok);
    CHECK(results[i].worker_id == static_cast<std::uint32_t>(i));
    CHECK(results[i].x.size() == 2);
    CHECK(results[i].stats.mode == SolveMode::exact_nlp);
    CHECK(results[i].stats.wall_time_s == 0.0);  // deterministic_timing
  }

  // second round in sensitivity mode reuses the committed state
  ep.broadcast_round(same_round(n_workers, 1, Directive::sensitivity, results[0].x, lambda));
  results = ep.gather_round(1);
  for (const auto& r : results) {
    CHECK(r.ok);
    CHECK((r.stats.mode == SolveMode::predictor ||
           r.stats.mode == SolveMode::predictor_corrected || r.stats.fell_back));
  }
  ep.shutdown();

  // every round's sends all precede its receives, per worker and per round
  const auto& log = ep.sequence_log();
  for (std::uint32_t k = 0; k < 2; ++k) {
    std::size_t last_send = 0, first_recv = log.size();
    for (std::size_t i = 0; i < log.size(); ++i) {
      if (log[i].k != k) continue;
      if (log[i].kind == SeqEvent::send_params) last_send = std::max(last_send, i);
      if (log[i].kind == SeqEvent::recv_result) first_recv = std::min(first_recv, i);
    }
    CHECK(last_send < first_recv);
  }
}

TEST_CASE("master endpoints enforce the round protocol") {
  LoopbackCluster cluster(2);
  MasterEndpoints& ep = cluster.endpoints();
  std::vector<AssignShardMsg> assigns{make_assignment(0, 10), make_assignment(1, 10)};
  ep.assign(assigns);

  // gather with no round outstanding
  CHECK_THROWS_AS(ep.gather_round(0), ProtocolError);

  const Vector z = Vector::Zero(2);
  auto params = same_round(2, 0, Directive::exact, z, z);

  // inconsistent round indices within one broadcast
  auto bad = params;
  bad[1].k = 1;
  CHECK_THROWS_AS(ep.broadcast_round(bad), ProtocolError);

  // param count mismatch
  CHECK_THROWS_AS(ep.broadcast_round({params[0]}), ConfigError);

  ep.broadcast_round(params);
  // a second broadcast while round 0 is outstanding
  CHECK_THROWS_AS(ep.broadcast_round(same_round(2, 1, Directive::exact, z, z)), ProtocolError);
  // gathering a round that was never sent
  CHECK_THROWS_AS(ep.gather_round(3), ProtocolError);
  (void)ep.gather_round(0);
  ep.shutdown();
}

TEST_CASE("worker failures come back as error results, not dead channels") {
  LoopbackCluster cluster(2);
  MasterEndpoints& ep = cluster.endpoints();
  ep.assign({make_assignment(0, 10), make_assignment(1, 10)});

  Vector poisoned = Vector::Zero(2);
  poisoned[0] = std::nan("");
  auto params = same_round(2, 0, Directive::exact, Vector::Zero(2), Vector::Zero(2));
  params[1].x0 = poisoned;
  ep.broadcast_round(params);
  const auto results = ep.gather_round(0);
  CHECK(results[0].ok);
  CHECK_FALSE(results[1].ok);
  CHECK_FALSE(results[1].error.empty());

  // the failed worker is still alive for the next round
  ep.broadcast_round(same_round(2, 1, Directive::exact, Vector::Zero(2), Vector::Zero(2)));
  const auto retry = ep.gather_round(1);
  CHECK(retry[0].ok);
  CHECK(retry[1].ok);
  ep.shutdown();
}

TEST_CASE("hostport strings parse strictly") {
  auto [h1, p1] = parse_hostport("127.0.0.1:8080");
  CHECK(h1 == "127.0.0.1");
  CHECK(p1 == 8080);
  auto [h2, p2] = parse_hostport(":0");
  CHECK(h2 == "127.0.0.1");  // empty host defaults to loopback
  CHECK(p2 == 0);
  CHECK_THROWS_AS(parse_hostport("localhost"), ConfigError);
  CHECK_THROWS_AS(parse_hostport("127.0.0.1:notaport"), ConfigError);
  CHECK_THROWS_AS(parse_hostport("127.0.0.1:70000"), ConfigError);
  CHECK_THROWS_AS(parse_hostport("127.0.0.1:"), ConfigError);
}

TEST_CASE("tcp channels move frames of any size intact") {
  TcpListener listener("127.0.0.1:0");
  REQUIRE(listener.port() != 0);
  const std::string addr = "127.0.0.1:" + std::to_string(listener.port());

  // client echoes decoded-and-reencoded frames until shutdown
  std::thread client([addr] {
    auto ch = tcp_connect(addr, 5000);
    for (;;) {
      const Message m = decode(ch->recv());
      if (std::holds_alternative<ShutdownMsg>(m)) return;
      ch->send(encode(m));
    }
  });

  auto server = listener.accept_one();

  RoundParamsMsg big;
  big.k = 12;
  big.directive = Directive::exact;
  big.x0 = Vector::LinSpaced(20000, -1.0, 1.0);  // 160 KB payload forces partial reads
  big.lambda = Vector::Zero(20000);
  const auto frame = encode(big);
  server->send(frame);
  CHECK(server->recv() == frame);

  RoundParamsMsg small;
  small.k = 13;
  small.x0 = Vector::Zero(1);
  small.lambda = Vector::Zero(1);
  const auto frame2 = encode(small);
  server->send(frame2);
  CHECK(server->recv() == frame2);

  server->send(encode(ShutdownMsg{}));
  client.join();

  // a vanished peer surfaces as ProtocolError on the next read
  CHECK_THROWS_AS(server->recv(), ProtocolError);
}

TEST_CASE("tcp workers behave identically to loopback workers") {
  TcpListener listener("127.0.0.1:0");
  const std::string addr = "127.0.0.1:" + std::to_string(listener.port());

  std::vector<std::thread> workers;
  for (int i = 0; i < 2; ++i)
    workers.emplace_back([addr] {
      auto ch = tcp_connect(addr, 5000);
      run_worker(*ch);
    });

  MasterEndpoints ep = accept_workers(listener, 2);
  ep.assign({make_assignment(0, 20), make_assignment(1, 20)});
  ep.broadcast_round(same_round(2, 0, Directive::exact, Vector::Zero(2), Vector::Zero(2)));
  const auto results = ep.gather_round(0);
  CHECK(results[0].ok);
  CHECK(results[1].ok);
  CHECK(results[0].worker_id == 0);
  CHECK(results[1].worker_id == 1);
  ep.shutdown();
  for (auto& w : workers) w.join();
}

TEST_CASE("tcp_connect times out against a dead port") {
  // bind-then-close leaves a port that refuses connections
  std::uint16_t dead_port;
  {
    TcpListener probe("127.0.0.1:0");
    dead_port = probe.port();
  }
  const auto t0 = std::chrono::steady_clock::now();
  CHECK_THROWS_AS(tcp_connect("127.0.0.1:" + std::to_string(dead_port), 200), ProtocolError);
  const double waited = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(waited < 5.0);
}

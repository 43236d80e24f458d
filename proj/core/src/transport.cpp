#include "sadmm/transport.hpp"

#include <chrono>
#include <utility>

#include "sadmm/consensus.hpp"
#include "sadmm/subproblem.hpp"

namespace sadmm {

MasterEndpoints::MasterEndpoints(std::vector<std::unique_ptr<Channel>> channels)
    : channels_(std::move(channels)) {
  if (channels_.empty()) throw ConfigError("MasterEndpoints: no workers");
}

void MasterEndpoints::assign(const std::vector<AssignShardMsg>& msgs) {
  if (static_cast<int>(msgs.size()) != size())
    throw ConfigError("assign: message count mismatches worker count");
  for (int i = 0; i < size(); ++i) {
    channels_[i]->send(encode(msgs[i]));
    log_.push_back({SeqEvent::send_assign, i, 0});
  }
}

void MasterEndpoints::broadcast_round(const std::vector<RoundParamsMsg>& params) {
  if (static_cast<int>(params.size()) != size())
    throw ConfigError("broadcast_round: param count mismatches worker count");
  if (round_open_)
    throw ProtocolError("broadcast_round: round " + std::to_string(open_k_) +
                        " still outstanding");
  for (std::size_t i = 1; i < params.size(); ++i)
    if (params[i].k != params[0].k)
      throw ProtocolError("broadcast_round: inconsistent round indices");
  for (int i = 0; i < size(); ++i) {
    channels_[i]->send(encode(params[i]));
    log_.push_back({SeqEvent::send_params, i, params[i].k});
  }
  round_open_ = true;
  open_k_ = params[0].k;
}

std::vector<RoundResultMsg> MasterEndpoints::gather_round(std::uint32_t k) {
  if (!round_open_ || open_k_ != k)
    throw ProtocolError("gather_round: round " + std::to_string(k) + " was not broadcast");
  std::vector<RoundResultMsg> out(size());
  std::vector<bool> seen(size(), false);
  for (int i = 0; i < size(); ++i) {
    Message msg;
    try {
      msg = decode(channels_[i]->recv());
    } catch (const ProtocolError& e) {
      throw ProtocolError("worker " + std::to_string(i) + ": " + e.what());
    }
    auto* res = std::get_if<RoundResultMsg>(&msg);
    if (!res)
      throw ProtocolError("worker " + std::to_string(i) + ": expected RoundResult");
    if (res->k != k)
      throw ProtocolError("worker " + std::to_string(i) + ": stale round " +
                          std::to_string(res->k) + ", expected " + std::to_string(k));
    if (res->worker_id >= static_cast<std::uint32_t>(size()) || seen[res->worker_id])
      throw ProtocolError("worker " + std::to_string(i) + ": bad or duplicate worker_id " +
                          std::to_string(res->worker_id));
    seen[res->worker_id] = true;
    log_.push_back({SeqEvent::recv_result, static_cast<int>(res->worker_id), k});
    out[res->worker_id] = std::move(*res);  // reorder by id no matter the arrival order
  }
  round_open_ = false;
  return out;
}

void MasterEndpoints::shutdown() {
  for (int i = 0; i < size(); ++i) {
    try {
      channels_[i]->send(encode(ShutdownMsg{}));
    } catch (const ProtocolError&) {
      // worker already gone; shutdown stays best-effort
    }
    log_.push_back({SeqEvent::send_shutdown, i, 0});
  }
}

namespace {

ParamBlock round_block(const RoundParamsMsg& rp) { return ParamBlock{rp.x0, rp.lambda}; }

}  // namespace

void run_worker(Channel& channel) {
  Message first = decode(channel.recv());
  auto* assign = std::get_if<AssignShardMsg>(&first);
  if (!assign) throw ProtocolError("worker: expected AssignShard first");

  const SolveContext ctx = assign->ctx;
  auto objective = std::make_shared<ModelObjective>(assign->spec, std::move(assign->shard));
  NewtonOptions opts;
  opts.tol = ctx.newton_tol;
  SubproblemEngine engine(objective, ctx.rho, opts);
  engine.set_initial(assign->x_init);
  Vector x_prev = assign->x_init;
  const std::uint32_t id = assign->worker_id;

  for (;;) {
    Message msg = decode(channel.recv());
    if (std::holds_alternative<ShutdownMsg>(msg)) return;
    auto* rp = std::get_if<RoundParamsMsg>(&msg);
    if (!rp) throw ProtocolError("worker: unexpected message type");

    RoundResultMsg res;
    res.k = rp->k;
    res.worker_id = id;
    res.stats.worker_id = static_cast<int>(id);

    const auto t0 = std::chrono::steady_clock::now();
    try {
      const ParamBlock p_new = round_block(*rp);
      SolveReport rep;
      switch (rp->directive) {
        case Directive::exact: {
          const ParamBlock& p = (ctx.exact_solve_uses_stale_params && engine.has_last_params())
                                    ? engine.last_params()
                                    : p_new;
          rep = engine.solve_exact(p);
          break;
        }
        case Directive::sensitivity: {
          try {
            rep = engine.approximate_solve(p_new, ctx.opt_tol,
                                           static_cast<int>(ctx.max_correctors));
          } catch (const ToleranceUnreachable& e) {
            rep = engine.solve_exact(p_new, e.report.x);
            rep.corrector_iters = e.report.corrector_iters;
            rep.linear_solves += e.report.linear_solves;
            res.stats.fell_back = true;
          }
          break;
        }
        case Directive::ladmm: {
          rep.x = ladmm_step(objective->gradient(x_prev), x_prev, p_new.x0, p_new.lambda,
                             ctx.rho, ctx.ladmm_mu);
          rep.mode = SolveMode::ladmm;
          rep.eps_norm = aug_grad(*objective, rep.x, p_new, ctx.rho).norm();
          break;
        }
      }
      x_prev = rep.x;
      res.x = std::move(rep.x);
      res.eps_norm = rep.eps_norm;
      res.stats.mode = rep.mode;
      res.stats.eps_norm = res.eps_norm;
      res.stats.local_loss = objective->value(res.x);
      res.stats.newton_iters = rep.newton_iters;
      res.stats.corrector_iters = rep.corrector_iters;
      res.stats.linear_solves = rep.linear_solves;
      if (!ctx.deterministic_timing) {
        res.stats.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      }
    } catch (const Error& e) {
      res.ok = false;
      res.error = e.what();
    }
    channel.send(encode(res));
    // assemble the next predictor system while the master aggregates, so the
    // in-round cost of a sensitivity solve stays one solve plus one gradient
    if (res.ok && rp->directive == Directive::sensitivity) engine.prepare();
  }
}

namespace detail {

void FrameQueue::push(std::vector<std::uint8_t> frame) {
  {
    std::lock_guard lk(mu_);
    if (closed_) throw ProtocolError("loopback: peer closed");
    q_.push_back(std::move(frame));
  }
  cv_.notify_one();
}

std::vector<std::uint8_t> FrameQueue::pop() {
  std::unique_lock lk(mu_);
  cv_.wait(lk, [&] { return !q_.empty() || closed_; });
  if (q_.empty()) throw ProtocolError("loopback: peer closed");
  auto f = std::move(q_.front());
  q_.pop_front();
  return f;
}

void FrameQueue::close() {
  {
    std::lock_guard lk(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

}  // namespace detail

struct LoopbackCluster::Pipe {
  detail::FrameQueue to_worker;
  detail::FrameQueue to_master;
};

namespace {

class LoopbackChannel final : public Channel {
 public:
  LoopbackChannel(std::shared_ptr<LoopbackCluster::Pipe> pipe, bool master_side)
      : pipe_(std::move(pipe)), master_(master_side) {}

  void send(const std::vector<std::uint8_t>& frame) override {
    (master_ ? pipe_->to_worker : pipe_->to_master).push(frame);
  }
  std::vector<std::uint8_t> recv() override {
    return (master_ ? pipe_->to_master : pipe_->to_worker).pop();
  }

 private:
  std::shared_ptr<LoopbackCluster::Pipe> pipe_;
  bool master_;
};

}  // namespace

LoopbackCluster::LoopbackCluster(int n_workers) {
  if (n_workers < 1) throw ConfigError("LoopbackCluster: need at least one worker");
  std::vector<std::unique_ptr<Channel>> master_side;
  for (int i = 0; i < n_workers; ++i) {
    auto pipe = std::make_shared<Pipe>();
    pipes_.push_back(pipe);
    master_side.push_back(std::make_unique<LoopbackChannel>(pipe, true));
    threads_.emplace_back([pipe] {
      LoopbackChannel ch(pipe, false);
      try {
        run_worker(ch);
      } catch (const Error&) {
        // queue closed underneath us or master went away: just exit the thread
      }
      pipe->to_master.close();
    });
  }
  endpoints_ = std::make_unique<MasterEndpoints>(std::move(master_side));
}

LoopbackCluster::~LoopbackCluster() {
  for (auto& p : pipes_) {
    p->to_worker.close();
    p->to_master.close();
  }
  for (auto& t : threads_)
    if (t.joinable()) t.join();
}

MasterEndpoints accept_workers(TcpListener& listener, int n_workers) {
  std::vector<std::unique_ptr<Channel>> chans;
  chans.reserve(n_workers);
  for (int i = 0; i < n_workers; ++i) chans.push_back(listener.accept_one());
  return MasterEndpoints(std::move(chans));
}

}  // namespace sadmm

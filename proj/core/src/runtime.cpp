#include "ras/runtime.hpp"

#include <algorithm>
#include <charconv>
#include <ostream>
#include <thread>

#include "ras/error.hpp"

namespace ras {

namespace {

Tick parse_tick(std::string_view s, const std::string &whole) {
  Tick v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError("invalid delay model '" + whole + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

} // namespace

// ---------------------------------------------------------------------------
// DelayModel

DelayModel DelayModel::parse(const std::string &text) {
  const auto parts = split(text, ':');
  if (parts[0] == "immediate" && parts.size() == 1) return immediate();
  if (parts[0] == "fixed" && parts.size() == 2) {
    return fixed(parse_tick(parts[1], text));
  }
  if (parts[0] == "uniform" && parts.size() == 3) {
    auto m = uniform(parse_tick(parts[1], text), parse_tick(parts[2], text));
    m.validate();
    return m;
  }
  throw ConfigError("invalid delay model '" + text +
                    "' (expected immediate, fixed:T or uniform:LO:HI)");
}

void DelayModel::validate() const {
  if (kind == Kind::uniform && lo > hi) {
    throw ConfigError("uniform delay needs lo <= hi");
  }
}

std::string DelayModel::to_string() const {
  switch (kind) {
  case Kind::immediate:
    return "immediate";
  case Kind::fixed:
    return "fixed:" + std::to_string(lo);
  case Kind::uniform:
    return "uniform:" + std::to_string(lo) + ":" + std::to_string(hi);
  }
  return {};
}

// ---------------------------------------------------------------------------
// Runtime: lifecycle and stepping

void Runtime::StepCompletion::operator()() noexcept {
  rt->tick_.fetch_add(1, std::memory_order_acq_rel);
}

Runtime::Runtime(int p, RuntimeOptions options)
    : p_(p), world_(p + (options.dedicated_root ? 1 : 0)),
      options_(std::move(options)) {
  if (p < 1) throw ConfigError("runtime needs at least one rank");
  options_.delay.validate();
  if (options_.coarse_delay_scale < 1) {
    throw ConfigError("coarse delay scale must be >= 1");
  }
  ranks_.resize(static_cast<std::size_t>(world_));
  retired_.assign(static_cast<std::size_t>(world_), 0);
  for (int r = 0; r < world_; ++r) {
    std::seed_seq seq{static_cast<std::uint64_t>(options_.seed),
                      static_cast<std::uint64_t>(r)};
    ranks_[r].rng.seed(seq);
  }
  active_compute_ = p_;
  if (options_.schedule == Schedule::lockstep) {
    barrier_ = std::make_unique<std::barrier<StepCompletion>>(
        world_, StepCompletion{this});
  }
}

Runtime::~Runtime() = default;

void Runtime::run(const std::function<void(int rank)> &worker) {
  {
    std::lock_guard lock(mutex_);
    if (ran_) throw ContractViolation("Runtime::run: a runtime runs once");
    ran_ = true;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> threads;
    threads.reserve(static_cast<std::size_t>(world_));
    for (int r = 0; r < world_; ++r) {
      threads.emplace_back([&, r] {
        try {
          worker(r);
        } catch (...) {
          {
            std::lock_guard g(error_mutex);
            if (!first_error) first_error = std::current_exception();
          }
          aborted_ = true;
          blocking_cv_.notify_all();
        }
        retire(r);
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

void Runtime::end_step(int rank) {
  check_rank(rank);
  if (options_.schedule == Schedule::lockstep) {
    barrier_->arrive_and_wait();
  } else {
    const auto steps = total_steps_.fetch_add(1, std::memory_order_acq_rel) + 1;
    tick_.store(steps / static_cast<std::uint64_t>(world_),
                std::memory_order_release);
    std::this_thread::yield();
  }
}

void Runtime::retire(int rank) {
  check_rank(rank);
  // Only the rank's own thread touches its flag.
  if (retired_[rank]) return;
  retired_[rank] = 1;
  if (rank < p_) active_compute_.fetch_sub(1);
  if (options_.schedule == Schedule::lockstep) barrier_->arrive_and_drop();
}

void Runtime::check_rank(int rank, bool allow_dedicated) const {
  const int limit = allow_dedicated ? world_ : p_;
  if (rank < 0 || rank >= limit) {
    throw ContractViolation("rank " + std::to_string(rank) + " out of range");
  }
}

void Runtime::check_root(int root) const {
  if (root < 0 || root >= world_) {
    throw ContractViolation("root " + std::to_string(root) + " out of range");
  }
}

[[noreturn]] void Runtime::throw_aborted() const {
  throw std::runtime_error("runtime aborted: another worker failed");
}

Tick Runtime::draw_delay(int rank, Tick scale) {
  const auto &m = options_.delay;
  Tick d = 0;
  switch (m.kind) {
  case DelayModel::Kind::immediate:
    break;
  case DelayModel::Kind::fixed:
    d = m.lo;
    break;
  case DelayModel::Kind::uniform:
    d = std::uniform_int_distribution<Tick>(m.lo, m.hi)(ranks_[rank].rng);
    break;
  }
  return d * scale;
}

Tick Runtime::visible_after(Tick sent, Tick delay) const {
  return sent + std::max<Tick>(delay, 1);
}

void Runtime::record(Tick tick, int src, int dst, Tag tag, std::uint64_t seq) {
  if (options_.trace) trace_.push_back({tick, src, dst, tag, seq});
}

int Runtime::participants(int root) const {
  return p_ + (root >= p_ ? 1 : 0);
}

// ---------------------------------------------------------------------------
// Requests

Request Runtime::make_request(int rank, Request::Kind kind, Slot slot) {
  auto &rd = ranks_[rank];
  std::uint32_t index;
  if (!rd.free_slots.empty()) {
    index = rd.free_slots.back();
    rd.free_slots.pop_back();
  } else {
    index = static_cast<std::uint32_t>(rd.slots.size());
    rd.slots.emplace_back();
  }
  auto &s = rd.slots[index];
  const auto generation = s.generation + 1;
  s = slot;
  s.kind = kind;
  s.in_use = true;
  s.generation = generation;

  Request req;
  req.kind_ = kind;
  req.state_ = Request::State::pending;
  req.rank_ = rank;
  req.slot_ = index;
  req.generation_ = generation;
  return req;
}

Runtime::Slot &Runtime::slot_of(const Request &req) {
  if (req.freed_) {
    throw ContractViolation("request handle was freed");
  }
  check_rank(req.rank_);
  auto &rd = ranks_[req.rank_];
  if (req.slot_ >= rd.slots.size() || !rd.slots[req.slot_].in_use ||
      rd.slots[req.slot_].generation != req.generation_) {
    throw ContractViolation("stale or foreign request handle");
  }
  return rd.slots[req.slot_];
}

bool Runtime::is_complete(const Slot &s, int rank) {
  const Tick t = now();
  switch (s.kind) {
  case Request::Kind::send:
    return t >= s.visible_at;
  case Request::Kind::recv: {
    const auto it = channels_.find({s.peer, rank, s.tag});
    if (it == channels_.end()) return false;
    const auto &ch = it->second;
    if (ch.consumed > s.round) return true;
    const auto pos = s.round - ch.consumed;
    return pos < ch.queue.size() && ch.queue[pos].visible_at <= t;
  }
  case Request::Kind::allreduce: {
    const auto &rec = allreduce_.at(s.round);
    return rec.count == p_ && t >= rec.complete_at;
  }
  case Request::Kind::reduce: {
    const auto &rec = reduce_.at(s.round);
    if (rank == rec.root) {
      if (rec.count != p_) return false;
      return std::all_of(rec.visible_at.begin(), rec.visible_at.end(),
                         [t](Tick v) { return v <= t; });
    }
    return t >= rec.visible_at[rank];
  }
  case Request::Kind::bcast: {
    const auto &rec = bcast_.at(s.round);
    if (rank == rec.root) return true;
    return rec.posted && t >= rec.visible_at[rank];
  }
  case Request::Kind::null:
    return true;
  }
  return false;
}

void Runtime::release(Request &req, bool completed) {
  auto &rd = ranks_[req.rank_];
  auto &s = rd.slots[req.slot_];
  const int rank = req.rank_;
  switch (s.kind) {
  case Request::Kind::allreduce: {
    auto it = allreduce_.find(s.round);
    if (completed) {
      double sum = 0.0;
      for (double v : it->second.values) sum += v;
      req.result_ = {sum};
    }
    rd.allreduce_pending = false;
    if (++it->second.released == p_) allreduce_.erase(it);
    break;
  }
  case Request::Kind::reduce: {
    auto it = reduce_.find(s.round);
    if (completed && rank == it->second.root) req.result_ = it->second.values;
    rd.reduce_pending = false;
    if (++it->second.released == participants(it->second.root)) reduce_.erase(it);
    break;
  }
  case Request::Kind::bcast: {
    auto it = bcast_.find(s.round);
    if (completed) req.result_ = it->second.payload;
    rd.bcast_pending = false;
    if (++it->second.released == participants(it->second.root)) bcast_.erase(it);
    break;
  }
  default:
    break;
  }
  s.in_use = false;
  rd.free_slots.push_back(req.slot_);
}

bool Runtime::test(Request &req) {
  if (req.is_null()) return true;
  if (req.freed_) throw ContractViolation("test on a freed request");
  if (req.state_ == Request::State::complete) return true;
  std::lock_guard lock(mutex_);
  const auto &s = slot_of(req);
  if (!is_complete(s, req.rank_)) return false;
  release(req, true);
  req.state_ = Request::State::complete;
  return true;
}

bool Runtime::test_all(std::span<Request> reqs) {
  bool all = true;
  for (auto &r : reqs) all = test(r) && all;
  return all;
}

void Runtime::free_on_complete(Request &req) {
  if (req.freed_) throw ContractViolation("request freed twice");
  if (req.is_null()) {
    req.freed_ = true;
    return;
  }
  std::lock_guard lock(mutex_);
  if (req.state_ == Request::State::pending) {
    slot_of(req);
    // Messages and contributions already live in the runtime, so the slot
    // can go immediately.
    release(req, false);
  }
  req.freed_ = true;
}

void Runtime::free_on_complete(std::span<Request> reqs) {
  for (auto &r : reqs) free_on_complete(r);
}

std::size_t Runtime::live_requests(int rank) const {
  check_rank(rank);
  std::lock_guard lock(mutex_);
  const auto &rd = ranks_[rank];
  return rd.slots.size() - rd.free_slots.size();
}

// ---------------------------------------------------------------------------
// Point-to-point halo exchange

void Runtime::register_halo(Tag tag, std::vector<std::vector<HaloSlots>> layouts) {
  if (static_cast<int>(layouts.size()) != p_) {
    throw ContractViolation("register_halo: need one layout per compute rank");
  }
  for (int i = 0; i < p_; ++i) {
    for (const auto &link : layouts[i]) {
      if (link.neighbor < 0 || link.neighbor >= p_ || link.neighbor == i) {
        throw ContractViolation("register_halo: bad neighbor id");
      }
      const auto &other = layouts[link.neighbor];
      const auto back = std::find_if(other.begin(), other.end(),
                                     [i](const HaloSlots &s) { return s.neighbor == i; });
      if (back == other.end() || back->recv_slots.size() != link.send_slots.size()) {
        throw ContractViolation("register_halo: layouts of ranks " +
                                std::to_string(i) + " and " +
                                std::to_string(link.neighbor) + " disagree");
      }
    }
  }
  std::lock_guard lock(mutex_);
  layouts_[tag] = std::move(layouts);
}

std::vector<Request> Runtime::post_halo_exchange(int rank, Tag tag,
                                                 std::span<const double> local) {
  check_rank(rank, false);
  std::lock_guard lock(mutex_);
  const auto lit = layouts_.find(tag);
  if (lit == layouts_.end()) {
    throw ContractViolation("post_halo_exchange: unknown tag " + std::to_string(tag));
  }
  const auto &layout = lit->second[rank];
  const Tick t = now();
  const auto round = ranks_[rank].halo_posts[tag]++;

  std::vector<Request> reqs;
  reqs.reserve(2 * layout.size());
  for (const auto &link : layout) {
    Message msg;
    msg.payload.reserve(link.send_slots.size());
    for (Index s : link.send_slots) {
      if (s < 0 || static_cast<std::size_t>(s) >= local.size()) {
        throw ContractViolation("post_halo_exchange: send slot out of range");
      }
      msg.payload.push_back(local[s]);
    }
    auto &ch = channels_[{rank, link.neighbor, tag}];
    msg.seq = ch.next_seq++;
    // FIFO per channel: never overtake an earlier message.
    msg.visible_at = std::max(visible_after(t, draw_delay(rank, 1)), ch.last_visible);
    ch.last_visible = msg.visible_at;
    record(msg.visible_at, rank, link.neighbor, tag, msg.seq);

    Slot send;
    send.visible_at = msg.visible_at;
    ch.queue.push_back(std::move(msg));
    reqs.push_back(make_request(rank, Request::Kind::send, send));

    Slot recv;
    recv.peer = link.neighbor;
    recv.tag = tag;
    recv.round = round;
    reqs.push_back(make_request(rank, Request::Kind::recv, recv));
  }
  return reqs;
}

HaloReceipt Runtime::receive_halo(int rank, Tag tag, std::span<double> extended) {
  check_rank(rank, false);
  std::lock_guard lock(mutex_);
  const auto lit = layouts_.find(tag);
  if (lit == layouts_.end()) {
    throw ContractViolation("receive_halo: unknown tag " + std::to_string(tag));
  }
  const auto &layout = lit->second[rank];
  const Tick t = now();
  HaloReceipt receipt;
  receipt.last_seq.assign(layout.size(), -1);
  for (std::size_t n = 0; n < layout.size(); ++n) {
    const auto &link = layout[n];
    const auto it = channels_.find({link.neighbor, rank, tag});
    if (it == channels_.end()) continue;
    auto &ch = it->second;
    std::size_t taken = 0;
    for (; taken < ch.queue.size() && ch.queue[taken].visible_at <= t; ++taken) {
      const auto &msg = ch.queue[taken];
      for (std::size_t k = 0; k < link.recv_slots.size(); ++k) {
        const auto slot = link.recv_slots[k];
        if (slot < 0 || static_cast<std::size_t>(slot) >= extended.size()) {
          throw ContractViolation("receive_halo: receive slot out of range");
        }
        extended[slot] = msg.payload[k];
      }
      receipt.last_seq[n] = static_cast<std::int64_t>(msg.seq);
    }
    ch.queue.erase(ch.queue.begin(), ch.queue.begin() + static_cast<std::ptrdiff_t>(taken));
    ch.consumed += taken;
    receipt.applied += taken;
  }
  return receipt;
}

// ---------------------------------------------------------------------------
// Non-blocking collectives

Request Runtime::i_allreduce_sum(int rank, double contribution) {
  check_rank(rank, false);
  std::lock_guard lock(mutex_);
  auto &rd = ranks_[rank];
  if (rd.allreduce_pending) {
    throw ContractViolation("i_allreduce_sum: rank " + std::to_string(rank) +
                            " already has an outstanding all-reduce");
  }
  const auto round = rd.allreduce_round++;
  auto &rec = allreduce_[round];
  if (rec.values.empty()) {
    rec.values.assign(static_cast<std::size_t>(p_), 0.0);
    rec.arrived.assign(static_cast<std::size_t>(p_), 0);
  }
  const Tick t = now();
  const Tick arrive = p_ == 1 ? t : visible_after(t, draw_delay(rank, 1));
  rec.values[rank] = contribution;
  rec.arrived[rank] = 1;
  ++rec.count;
  rec.complete_at = std::max(rec.complete_at, arrive);
  record(arrive, rank, -1, kTagAllreduce, round);
  rd.allreduce_pending = true;

  Slot s;
  s.round = round;
  return make_request(rank, Request::Kind::allreduce, s);
}

Request Runtime::i_reduce_to_root(int rank, double contribution, int root) {
  check_rank(rank);
  check_root(root);
  std::lock_guard lock(mutex_);
  auto &rd = ranks_[rank];
  if (rank >= p_ && rank != root) {
    throw ContractViolation("i_reduce_to_root: dedicated rank is not the root");
  }
  if (rd.reduce_pending) {
    throw ContractViolation("i_reduce_to_root: rank " + std::to_string(rank) +
                            " already has an outstanding reduction");
  }
  const auto round = rd.reduce_round++;
  auto &rec = reduce_[round];
  if (rec.root < 0) {
    rec.root = root;
    rec.values.assign(static_cast<std::size_t>(p_), 0.0);
    rec.visible_at.assign(static_cast<std::size_t>(p_), 0);
    rec.arrived.assign(static_cast<std::size_t>(p_), 0);
  } else if (rec.root != root) {
    throw ContractViolation("i_reduce_to_root: ranks disagree on the root");
  }
  const Tick t = now();
  if (rank < p_) {
    const Tick arrive = rank == root ? t
                                     : visible_after(t, draw_delay(rank, options_.coarse_delay_scale));
    rec.values[rank] = contribution;
    rec.visible_at[rank] = arrive;
    rec.arrived[rank] = 1;
    ++rec.count;
    if (rank != root) record(arrive, rank, root, kTagReduce, round);
  }
  if (rank == root) rec.root_posted = true;
  rd.reduce_pending = true;

  Slot s;
  s.round = round;
  return make_request(rank, Request::Kind::reduce, s);
}

Request Runtime::i_bcast(int rank, std::span<const double> buffer, int root) {
  check_rank(rank);
  check_root(root);
  std::lock_guard lock(mutex_);
  auto &rd = ranks_[rank];
  if (rank >= p_ && rank != root) {
    throw ContractViolation("i_bcast: dedicated rank is not the root");
  }
  if (rd.bcast_pending) {
    throw ContractViolation("i_bcast: rank " + std::to_string(rank) +
                            " already has an outstanding broadcast");
  }
  const auto round = rd.bcast_round++;
  auto &rec = bcast_[round];
  if (rec.root < 0) {
    rec.root = root;
    rec.visible_at.assign(static_cast<std::size_t>(world_), 0);
  } else if (rec.root != root) {
    throw ContractViolation("i_bcast: ranks disagree on the root");
  }
  if (rank == root) {
    const Tick t = now();
    rec.payload.assign(buffer.begin(), buffer.end());
    rec.posted = true;
    for (int j = 0; j < p_; ++j) {
      if (j == root) continue;
      rec.visible_at[j] = visible_after(t, draw_delay(rank, options_.coarse_delay_scale));
      record(rec.visible_at[j], root, j, kTagBcast, round);
    }
  }
  rd.bcast_pending = true;

  Slot s;
  s.round = round;
  return make_request(rank, Request::Kind::bcast, s);
}

// ---------------------------------------------------------------------------
// Blocking collectives

void Runtime::wait_blocking(std::unique_lock<std::mutex> &lock,
                            const std::function<bool()> &ready) {
  blocking_cv_.wait(lock, [&] { return ready() || aborted_.load(); });
  if (!ready()) throw_aborted();
}

double Runtime::allreduce_sum(int rank, double contribution) {
  check_rank(rank, false);
  std::unique_lock lock(mutex_);
  const auto key = std::make_pair(0, ranks_[rank].blocking_round[0]++);
  auto &rec = blocking_[key];
  if (rec.values.empty()) rec.values.assign(static_cast<std::size_t>(p_), 0.0);
  rec.values[rank] = contribution;
  if (++rec.count == p_) blocking_cv_.notify_all();
  wait_blocking(lock, [&] { return rec.count == p_; });
  double sum = 0.0;
  for (double v : rec.values) sum += v;
  if (++rec.readers == p_) blocking_.erase(key);
  return sum;
}

std::vector<double> Runtime::gather_to_root(int rank, double contribution, int root) {
  check_rank(rank);
  check_root(root);
  std::unique_lock lock(mutex_);
  const auto key = std::make_pair(1, ranks_[rank].blocking_round[1]++);
  auto &rec = blocking_[key];
  if (rec.values.empty()) rec.values.assign(static_cast<std::size_t>(p_), 0.0);
  if (rank < p_) {
    rec.values[rank] = contribution;
    if (++rec.count == p_) blocking_cv_.notify_all();
  }
  if (rank != root) {
    // Non-roots return once their contribution is handed over; the root
    // erases the record.
    return {};
  }
  wait_blocking(lock, [&] { return rec.count == p_; });
  auto out = rec.values;
  blocking_.erase(key);
  return out;
}

std::vector<double> Runtime::bcast(int rank, std::span<const double> buffer, int root) {
  check_rank(rank);
  check_root(root);
  std::unique_lock lock(mutex_);
  const auto key = std::make_pair(2, ranks_[rank].blocking_round[2]++);
  auto &rec = blocking_[key];
  const int receivers = participants(root) - 1;
  if (rank == root) {
    rec.payload.assign(buffer.begin(), buffer.end());
    rec.payload_ready = true;
    blocking_cv_.notify_all();
    auto out = rec.payload;
    if (receivers == 0) blocking_.erase(key);
    return out;
  }
  wait_blocking(lock, [&] { return rec.payload_ready; });
  auto out = rec.payload;
  if (++rec.readers == receivers) blocking_.erase(key);
  return out;
}

// ---------------------------------------------------------------------------
// Trace

std::vector<TraceEvent> Runtime::trace() const {
  std::lock_guard lock(mutex_);
  auto events = trace_;
  std::sort(events.begin(), events.end());
  return events;
}

void Runtime::write_trace(std::ostream &os) const {
  for (const auto &e : trace()) {
    os << e.tick << ',' << e.src << ',' << e.dst << ',' << e.tag << ',' << e.seq
       << '\n';
  }
}

} // namespace ras

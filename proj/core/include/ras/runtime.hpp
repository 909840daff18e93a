#pragma once

#include <array>
#include <atomic>
#include <barrier>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "ras/problem.hpp"

namespace ras {

using Tick = std::uint64_t;
using Tag = int;

/// Tags reserved for collectives in trace output.
inline constexpr Tag kTagAllreduce = 1001;
inline constexpr Tag kTagReduce = 1002;
inline constexpr Tag kTagBcast = 1003;

/// Per-message delay in scheduler ticks, drawn by the sender at send time.
struct DelayModel {
  enum class Kind { immediate, fixed, uniform };

  Kind kind = Kind::immediate;
  Tick lo = 0;
  Tick hi = 0;

  static DelayModel immediate() { return {}; }
  static DelayModel fixed(Tick d) { return {Kind::fixed, d, d}; }
  static DelayModel uniform(Tick lo, Tick hi) { return {Kind::uniform, lo, hi}; }

  /// Parses "immediate", "fixed:T" or "uniform:LO:HI".
  static DelayModel parse(const std::string &text);

  Tick max_delay() const { return kind == Kind::immediate ? 0 : hi; }
  void validate() const;
  std::string to_string() const;
};

enum class Schedule { free_running, lockstep };

struct RuntimeOptions {
  DelayModel delay;
  std::uint64_t seed = 1;
  /// Multiplier applied to delays of coarse-path messages (reduce, bcast).
  Tick coarse_delay_scale = 1;
  Schedule schedule = Schedule::lockstep;
  /// Adds rank p, outside the compute group, to host the coarse solve.
  bool dedicated_root = false;
  bool trace = false;
};

/// Handle of a non-blocking operation. A default-constructed request is the
/// null request, for which test() returns true. Requests belong to the rank
/// that posted them. A successful test() releases the underlying slot and
/// moves any collective result into the handle.
class Request {
public:
  enum class Kind { null, send, recv, allreduce, reduce, bcast };
  enum class State { null, pending, complete };

  Request() = default;

  Kind kind() const noexcept { return kind_; }
  State state() const noexcept { return state_; }
  bool is_null() const noexcept { return kind_ == Kind::null; }
  bool freed() const noexcept { return freed_; }

  /// Collective result, valid once complete: the all-reduce sum (size 1),
  /// the gathered vector at the reduce root, or the broadcast payload.
  const std::vector<double> &result() const noexcept { return result_; }

private:
  friend class Runtime;

  Kind kind_ = Kind::null;
  State state_ = State::null;
  bool freed_ = false;
  int rank_ = -1;
  std::uint32_t slot_ = 0;
  std::uint32_t generation_ = 0;
  std::vector<double> result_;
};

struct TraceEvent {
  Tick tick;
  int src;
  int dst;
  Tag tag;
  std::uint64_t seq;

  auto operator<=>(const TraceEvent &) const = default;
};

/// Outcome of applying delivered halo messages.
struct HaloReceipt {
  std::size_t applied = 0;
  /// Sequence number of the last message applied from each neighbor of the
  /// registered layout (same order), -1 if none.
  std::vector<std::int64_t> last_seq;
};

/// Simulated two-sided message-passing fabric.
///
/// Ranks 0..p-1 form the compute group; with RuntimeOptions::dedicated_root
/// an extra rank p exists for the coarse solve. Every rank runs on its own
/// thread (see run()). All cross-rank state lives here behind one mutex.
///
/// Time is counted in ticks. In lockstep mode a tick is one global barrier
/// step; in free-running mode it is the mean number of steps taken per rank.
/// A message sent at tick t with drawn delay d becomes visible at tick
/// t + max(d, 1), and per-channel delivery is FIFO. Collectives over a
/// single participant complete at post time.
class Runtime {
public:
  Runtime(int p, RuntimeOptions options);
  ~Runtime();

  Runtime(const Runtime &) = delete;
  Runtime &operator=(const Runtime &) = delete;

  int size() const noexcept { return p_; }
  int world_size() const noexcept { return world_; }
  /// Rank hosting the coarse solve in dedicated mode, -1 otherwise.
  int dedicated_rank() const noexcept { return options_.dedicated_root ? p_ : -1; }
  const RuntimeOptions &options() const noexcept { return options_; }
  Tick now() const noexcept { return tick_.load(std::memory_order_acquire); }

  /// Runs `worker(rank)` on world_size() threads and joins them. The first
  /// exception thrown by any worker is rethrown. A runtime runs once.
  void run(const std::function<void(int rank)> &worker);

  /// Iteration boundary of a worker: a barrier step in lockstep mode.
  void end_step(int rank);
  /// A worker leaving its loop; it no longer takes part in step barriers.
  /// Idempotent, and called automatically when a worker returns.
  void retire(int rank);
  int active_compute_ranks() const noexcept { return active_compute_.load(); }
  bool aborted() const noexcept { return aborted_.load(); }

  /// Registers per-rank exchange layouts for a tag; send/recv slot counts
  /// must match pairwise.
  void register_halo(Tag tag, std::vector<std::vector<HaloSlots>> layouts);

  /// Sends this rank's values at the layout's send slots to every neighbor.
  /// Returns one send request and one receive request per neighbor; the
  /// receive request of the m-th post completes once the neighbor's m-th
  /// message on this tag is visible.
  std::vector<Request> post_halo_exchange(int rank, Tag tag,
                                          std::span<const double> local);

  /// Writes every visible, unconsumed message on `tag` into `extended`
  /// (local slots followed by ghost slots), oldest first, so the latest
  /// message wins.
  HaloReceipt receive_halo(int rank, Tag tag, std::span<double> extended);

  bool test(Request &req);
  bool test_all(std::span<Request> reqs);
  /// Relinquishes handles; the underlying transfers still complete.
  void free_on_complete(Request &req);
  void free_on_complete(std::span<Request> reqs);

  Request i_allreduce_sum(int rank, double contribution);
  /// Gathers one scalar per compute rank at `root`. A dedicated root
  /// contributes nothing.
  Request i_reduce_to_root(int rank, double contribution, int root);
  /// Delivers the root's buffer (captured at post) to every compute rank.
  Request i_bcast(int rank, std::span<const double> buffer, int root);

  /// Blocking, delay-free collectives over the compute group (plus a
  /// dedicated root where one is involved).
  double allreduce_sum(int rank, double contribution);
  std::vector<double> gather_to_root(int rank, double contribution, int root);
  std::vector<double> bcast(int rank, std::span<const double> buffer, int root);

  std::size_t live_requests(int rank) const;

  /// Delivery events sorted by (tick, src, dst, tag, seq); empty unless
  /// tracing is enabled. Collectives use dst = -1 for "all ranks".
  std::vector<TraceEvent> trace() const;
  void write_trace(std::ostream &os) const;

private:
  struct Message {
    std::uint64_t seq;
    Tick visible_at;
    std::vector<double> payload;
  };
  struct Channel {
    std::uint64_t next_seq = 0;
    std::uint64_t consumed = 0;
    Tick last_visible = 0;
    std::vector<Message> queue; // unconsumed, FIFO
  };
  struct Slot {
    Request::Kind kind = Request::Kind::null;
    bool in_use = false;
    std::uint32_t generation = 0;
    Tick visible_at = 0;      // send
    int peer = -1;            // recv source
    Tag tag = 0;              // recv tag
    std::uint64_t round = 0;  // recv seq / collective round
  };
  struct RankData {
    std::vector<Slot> slots;
    std::vector<std::uint32_t> free_slots;
    std::mt19937_64 rng;
    std::map<Tag, std::uint64_t> halo_posts;
    std::uint64_t allreduce_round = 0;
    std::uint64_t reduce_round = 0;
    std::uint64_t bcast_round = 0;
    bool allreduce_pending = false;
    bool reduce_pending = false;
    bool bcast_pending = false;
    std::array<std::uint64_t, 3> blocking_round{};
  };
  struct AllreduceRound {
    std::vector<double> values;
    std::vector<std::uint8_t> arrived;
    int count = 0;
    Tick complete_at = 0;
    int released = 0;
  };
  struct ReduceRound {
    int root = -1;
    std::vector<double> values;
    std::vector<Tick> visible_at;
    std::vector<std::uint8_t> arrived;
    int count = 0;
    bool root_posted = false;
    int released = 0;
  };
  struct BcastRound {
    int root = -1;
    bool posted = false;
    std::vector<double> payload;
    std::vector<Tick> visible_at;
    int released = 0;
  };
  struct BlockingRound {
    std::vector<double> values;
    int count = 0;
    bool payload_ready = false;
    std::vector<double> payload;
    int readers = 0;
  };
  struct StepCompletion {
    Runtime *rt;
    void operator()() noexcept;
  };
  using ChannelKey = std::tuple<int, int, Tag>;

  void check_rank(int rank, bool allow_dedicated = true) const;
  void check_root(int root) const;
  Tick draw_delay(int rank, Tick scale);
  Tick visible_after(Tick sent, Tick delay) const;
  Request make_request(int rank, Request::Kind kind, Slot slot);
  Slot &slot_of(const Request &req);
  bool is_complete(const Slot &slot, int rank);
  void release(Request &req, bool completed);
  void record(Tick tick, int src, int dst, Tag tag, std::uint64_t seq);
  int participants(int root) const;
  void wait_blocking(std::unique_lock<std::mutex> &lock,
                     const std::function<bool()> &ready);
  [[noreturn]] void throw_aborted() const;

  const int p_;
  const int world_;
  const RuntimeOptions options_;

  mutable std::mutex mutex_;
  std::condition_variable blocking_cv_;
  std::atomic<Tick> tick_{0};
  std::atomic<std::uint64_t> total_steps_{0};
  std::atomic<int> active_compute_{0};
  std::atomic<bool> aborted_{false};
  bool ran_ = false;
  std::unique_ptr<std::barrier<StepCompletion>> barrier_;

  std::vector<RankData> ranks_;
  std::vector<std::uint8_t> retired_;
  std::map<Tag, std::vector<std::vector<HaloSlots>>> layouts_;
  std::map<ChannelKey, Channel> channels_;
  std::map<std::uint64_t, AllreduceRound> allreduce_;
  std::map<std::uint64_t, ReduceRound> reduce_;
  std::map<std::uint64_t, BcastRound> bcast_;
  // keyed by (operation kind, round)
  std::map<std::pair<int, std::uint64_t>, BlockingRound> blocking_;
  std::vector<TraceEvent> trace_;
};

} // namespace ras

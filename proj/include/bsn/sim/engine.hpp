#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bsn/sim/time.hpp"

namespace bsn {

/// Identifies the node an event acts on; kGlobalTarget for engine-wide events.
inline constexpr int kGlobalTarget = -1;

struct EventRecord {
  SimTime fire_at;
  std::uint64_t seq = 0;
  std::string_view kind;  // must refer to static storage
  int target = kGlobalTarget;
};

struct EventHandle {
  std::uint64_t seq = 0;
  bool valid() const { return seq != 0; }
};

/// Single-threaded discrete-event scheduler.
///
/// Events dispatch in (fire_at, seq) order, where seq is the insertion
/// sequence number starting at 1. An optional trace sink receives one
/// `tick,seq,kind,target` line per dispatched event.
class Engine {
 public:
  using Action = std::function<void()>;

  Engine() = default;
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  SimTime now() const { return now_; }

  /// Throws std::invalid_argument("past event") when at < now().
  EventHandle schedule(SimTime at, std::string_view kind, int target, Action action);
  EventHandle schedule_in(SimTime delay, std::string_view kind, int target, Action action) {
    return schedule(now_ + delay, kind, target, std::move(action));
  }

  /// True iff the event was still pending and is now removed.
  bool cancel(EventHandle handle);
  bool pending(EventHandle handle) const { return actions_.contains(handle.seq); }

  /// Dispatches every event with fire_at <= until, then sets now() = until.
  std::uint64_t run(SimTime until);

  std::size_t queued() const { return actions_.size(); }
  std::uint64_t dispatched() const { return dispatched_; }

  void set_trace(std::ostream* sink) { trace_ = sink; }

 private:
  struct Later {
    bool operator()(const EventRecord& a, const EventRecord& b) const {
      if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
      return a.seq > b.seq;
    }
  };

  SimTime now_{};
  std::uint64_t next_seq_ = 1;
  std::uint64_t dispatched_ = 0;
  void compact();

  std::vector<EventRecord> heap_;  // binary heap ordered by Later
  std::size_t stale_ = 0;          // cancelled records still in the heap
  std::unordered_map<std::uint64_t, Action> actions_;
  std::ostream* trace_ = nullptr;
};

}  // namespace bsn

#include "bsn/sim/engine.hpp"

#include <algorithm>
#include <stdexcept>

namespace bsn {

EventHandle Engine::schedule(SimTime at, std::string_view kind, int target, Action action) {
  if (at < now_) throw std::invalid_argument("past event");
  const std::uint64_t seq = next_seq_++;
  heap_.push_back(EventRecord{at, seq, kind, target});
  std::push_heap(heap_.begin(), heap_.end(), Later{});
  actions_.emplace(seq, std::move(action));
  return EventHandle{seq};
}

bool Engine::cancel(EventHandle handle) {
  // The heap record stays behind and is skipped when popped; the heap is
  // rebuilt once stale records dominate it.
  if (actions_.erase(handle.seq) == 0) return false;
  if (++stale_ > 4096 && stale_ > 2 * actions_.size()) compact();
  return true;
}

void Engine::compact() {
  std::erase_if(heap_, [this](const EventRecord& r) { return !actions_.contains(r.seq); });
  std::make_heap(heap_.begin(), heap_.end(), Later{});
  stale_ = 0;
}

std::uint64_t Engine::run(SimTime until) {
  std::uint64_t count = 0;
  while (!heap_.empty() && heap_.front().fire_at <= until) {
    std::pop_heap(heap_.begin(), heap_.end(), Later{});
    const EventRecord rec = heap_.back();
    heap_.pop_back();
    auto it = actions_.find(rec.seq);
    if (it == actions_.end()) {
      if (stale_ > 0) --stale_;
      continue;
    }
    Action action = std::move(it->second);
    actions_.erase(it);
    now_ = rec.fire_at;
    ++count;
    ++dispatched_;
    if (trace_ != nullptr) {
      *trace_ << rec.fire_at.ticks() << ',' << rec.seq << ',' << rec.kind << ',' << rec.target << '\n';
    }
    action();
  }
  if (until > now_) now_ = until;
  return count;
}

}  // namespace bsn

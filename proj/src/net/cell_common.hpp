#pragma once

#include <functional>
#include <memory>

#include "net.hpp"

namespace bsn::net::detail {

/// Cell whose data frames are acknowledged by the receiver.
class AckedCell : public Cell {
 public:
  using Cell::Cell;

 protected:
  /// Transmits the head of `p` now and waits for the acknowledgement.
  /// `done(acked)` runs after the ack or the ack timeout, unless the sender
  /// died meanwhile. The head is still queued when `done` runs.
  void send_acked(int p, std::function<void(bool)> done);
  bool cca_idle(int p) const;
};

}  // namespace bsn::net::detail

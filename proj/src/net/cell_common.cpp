#include "cell_common.hpp"

namespace bsn::net::detail {

namespace {

struct Exchange {
  EventHandle timeout;
  bool finished = false;
};

}  // namespace

bool AckedCell::cca_idle(int p) const {
  const Port& pt = net_.ports[static_cast<std::size_t>(p)];
  return medium_->cca_at(pt.mport, net_.cca_threshold(), net_.now()) == CcaResult::Idle;
}

void AckedCell::send_acked(int p, std::function<void(bool)> done) {
  QueuedFrame& f = *net_.head(p);
  ++f.attempts;
  f.last_tx_start = net_.now();
  const int rx = f.next_port;
  const QueuedFrame copy = f;
  auto ex = std::make_shared<Exchange>();
  auto finish = [this, p, ex, done](bool acked) {
    if (ex->finished) return;
    ex->finished = true;
    if (!net_.port_alive(p) || net_.head(p) == nullptr) return;
    done(acked);
  };

  net_.begin_tx(p, net_.data_airtime(p, copy), true, "data_tx", [this, p, rx, copy, ex, finish](TxId tx) {
    net_.set_listen(p, true);
    ex->timeout = net_.engine.schedule(net_.now() + net_.sc.mac.ack_wait, "ack_timeout", net_.port(p).node,
                                       [finish] { finish(false); });
    if (net_.resolve(rx, tx) != DeliveryOutcome::Delivered) return;
    net_.receive_data(rx, copy);
    net_.engine.schedule(net_.now() + net_.sc.mac.turnaround, "ack", net_.port(rx).node, [this, p, rx, ex, finish] {
      if (!net_.port_alive(rx) || net_.port(rx).transmitting) return;
      net_.begin_tx(rx, net_.ack_airtime(index_), false, "ack_tx", [this, p, ex, finish](TxId ack) {
        if (ex->finished || net_.resolve(p, ack) != DeliveryOutcome::Delivered) return;
        net_.engine.cancel(ex->timeout);
        finish(true);
      });
    });
  });
}

}  // namespace bsn::net::detail

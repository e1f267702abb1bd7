#include "cell_common.hpp"

namespace bsn::net::detail {

namespace {

// Synchronised fixed duty cycle. Every radio listens during the listen
// window of each cycle; senders pick a random contention slot, sense the
// channel and exchange data and ack before the window closes.
class SmacCell final : public AckedCell {
 public:
  using AckedCell::AckedCell;

  void start() override {
    mac::validate(cfg().duty);
    busy_.assign(net_.ports.size(), false);
    net_.engine.schedule(SimTime::zero(), "smac_listen", net_.bnc, [this] { open_window(SimTime::zero()); });
  }

  void frame_queued(int p) override {
    if (open_ && !busy_[static_cast<std::size_t>(p)]) contend(p);
  }

 private:
  const scenario::SmacProtocolConfig& cfg() const { return net_.sc.protocols.smac; }

  void open_window(SimTime at) {
    open_ = true;
    window_end_ = at + cfg().duty.listen_window();
    for (int p : ports) net_.set_listen(p, true);
    for (int p : ports) {
      if (!busy_[static_cast<std::size_t>(p)]) contend(p);
    }
    net_.engine.schedule(window_end_, "smac_sleep", net_.bnc, [this] {
      open_ = false;
      for (int p : ports) net_.set_listen(p, false);
    });
    const SimTime next = at + cfg().duty.cycle;
    net_.engine.schedule(next, "smac_listen", net_.bnc, [this, next] { open_window(next); });
  }

  void contend(int p) {
    if (!net_.port_alive(p) || net_.head(p) == nullptr) return;
    busy_[static_cast<std::size_t>(p)] = true;
    const std::int64_t slot = net_.port(p).rng->uniform_int(0, cfg().contention_slots - 1);
    const SimTime sense_end = net_.now() + mac::kUnitBackoff * slot + net_.sc.mac.cca_duration;
    net_.engine.schedule(sense_end, "cca_done", net_.port(p).node, [this, p] { sensed(p); });
  }

  void sensed(int p) {
    busy_[static_cast<std::size_t>(p)] = false;
    if (!open_ || !net_.port_alive(p)) return;
    QueuedFrame* h = net_.head(p);
    if (h == nullptr) return;
    if (net_.port(p).transmitting || !cca_idle(p)) {
      contend(p);
      return;
    }
    if (net_.now() + net_.data_airtime(p, *h) + net_.sc.mac.ack_wait > window_end_) return;
    busy_[static_cast<std::size_t>(p)] = true;
    send_acked(p, [this, p](bool acked) {
      busy_[static_cast<std::size_t>(p)] = false;
      if (acked) {
        net_.pop_success(p);
      } else if (net_.head(p)->attempts > cfg().max_retries) {
        net_.pop_drop(p, DropReason::RetryLimit);
      }
      net_.set_listen(p, open_);
      if (open_) contend(p);
    });
  }

  std::vector<bool> busy_;
  bool open_ = false;
  SimTime window_end_{};
};

}  // namespace

std::unique_ptr<Cell> make_smac_cell(Net& net, int index, const scenario::ChannelConfig& ch, std::unique_ptr<Medium> m) {
  return std::make_unique<SmacCell>(net, index, ch, std::move(m));
}

}  // namespace bsn::net::detail

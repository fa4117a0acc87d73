#include "advgen/sim.hpp"

#include <array>
#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

#include "advgen/random.hpp"

namespace advgen {

const char* event_name(EventKind k) {
    switch (k) {
        case EventKind::Send: return "send";
        case EventKind::Enqueue: return "enqueue";
        case EventKind::Drop: return "drop";
        case EventKind::Dequeue: return "dequeue";
        case EventKind::Deliver: return "deliver";
        case EventKind::Ack: return "ack";
        case EventKind::Rto: return "rto";
        case EventKind::Dupack: return "dupack";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Congestion-control models
// ---------------------------------------------------------------------------

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class Reno final : public CongestionControl {
public:
    Reno(double initial, double cap) : cwnd_(initial), cap_(cap) {}
    std::string name() const override { return "reno"; }
    double cwnd() const override { return cwnd_; }

    void on_ack(const AckSample& s) override {
        const auto acked = static_cast<double>(s.newly_acked);
        // Slow start grows by at most two packets per ack, so a cumulative jump
        // after loss repair does not release a burst.
        if (cwnd_ < ssthresh_)
            cwnd_ += std::min(acked, 2.0);
        else
            cwnd_ += acked / cwnd_;
        cwnd_ = std::min(cwnd_, cap_);
    }
    void on_fast_retransmit(std::int64_t) override {
        ssthresh_ = std::max(cwnd_ / 2.0, 2.0);
        cwnd_ = ssthresh_;
    }
    void on_rto(std::int64_t) override {
        ssthresh_ = std::max(cwnd_ / 2.0, 2.0);
        cwnd_ = 1.0;
    }
    std::unique_ptr<CongestionControl> clone() const override { return std::make_unique<Reno>(*this); }

private:
    double cwnd_;
    double cap_;
    double ssthresh_ = kInf;
};

// Delay-based: once per RTT estimates how many packets sit in the bottleneck
// queue from the round's minimum RTT and nudges cwnd to keep between alpha and
// beta there.
class Vegas final : public CongestionControl {
public:
    Vegas(double alpha, double beta) : alpha_(alpha), beta_(beta) {}
    std::string name() const override { return "vegas"; }
    double cwnd() const override { return cwnd_; }

    void on_ack(const AckSample& s) override {
        if (s.rtt_ms) {
            base_rtt_ = std::min(base_rtt_, *s.rtt_ms);
            round_min_rtt_ = std::min(round_min_rtt_, *s.rtt_ms);
        }
        // Slow start doubles on alternate rounds; the rounds in between hold and measure.
        if (slow_start_ && grow_round_) cwnd_ += std::min(static_cast<double>(s.newly_acked), 2.0);
        if (s.cum_ack < round_end_) return;

        round_end_ = s.next_seq;
        const double rtt = round_min_rtt_;
        round_min_rtt_ = kInf;
        // This round's acks are for packets sent during the previous round, under
        // the window that round started with.
        const double window = previous_round_cwnd_;
        previous_round_cwnd_ = round_cwnd_;
        round_cwnd_ = cwnd_;
        if (!std::isfinite(rtt) || !std::isfinite(base_rtt_)) {
            if (slow_start_)
                grow_round_ = !grow_round_;
            else
                cwnd_ += 1.0;  // only retransmissions acked: Reno-style increase
            return;
        }
        const double bdp = window * base_rtt_ / rtt;  // actual rate times base RTT
        const double queued = window - bdp;
        if (slow_start_) {
            if (queued > gamma_) {
                slow_start_ = false;
                cwnd_ = std::max(2.0, std::min(cwnd_, bdp + 1.0));
            } else if (cwnd_ >= ssthresh_) {
                slow_start_ = false;
            } else {
                grow_round_ = !grow_round_;
            }
        } else if (queued < alpha_) {
            cwnd_ += 1.0;
        } else if (queued > beta_) {
            cwnd_ = std::max(2.0, std::min(cwnd_ - 1.0, bdp + (alpha_ + beta_) / 2.0));
        }
        round_cwnd_ = cwnd_;
    }
    void on_fast_retransmit(std::int64_t) override {
        slow_start_ = false;
        cwnd_ = std::max(cwnd_ / 2.0, 2.0);
        ssthresh_ = cwnd_;
    }
    void on_rto(std::int64_t) override {
        ssthresh_ = std::max(cwnd_ / 2.0, 2.0);
        slow_start_ = true;
        grow_round_ = true;
        cwnd_ = 1.0;
    }
    std::unique_ptr<CongestionControl> clone() const override { return std::make_unique<Vegas>(*this); }

private:
    double alpha_;
    double beta_;
    double gamma_ = 1.0;
    double cwnd_ = 10.0;
    bool slow_start_ = true;
    bool grow_round_ = true;
    double ssthresh_ = kInf;
    double base_rtt_ = kInf;
    double round_min_rtt_ = kInf;
    double round_cwnd_ = 10.0;
    double previous_round_cwnd_ = 10.0;
    std::int64_t round_end_ = 0;
};

// Model-based: paces at gain * (windowed max delivery rate) and caps inflight
// at cwnd_gain * BDP. Startup -> Drain -> ProbeBW with an 8-phase gain cycle.
class BbrLike final : public CongestionControl {
public:
    std::string name() const override { return "bbr"; }

    double cwnd() const override {
        if (!has_model()) return 10.0;
        const double gain = state_ == State::ProbeBw ? 2.0 : kHighGain;
        return std::max(4.0, gain * bdp());
    }

    std::optional<double> pacing_rate() const override {
        if (!has_model()) return std::nullopt;
        return pacing_gain() * max_bw();
    }

    void on_ack(const AckSample& s) override {
        const std::int64_t now = s.now_ms;
        if (s.rtt_ms) {
            rtt_samples_.push_back({now, *s.rtt_ms});
            while (!rtt_samples_.empty() && rtt_samples_.front().time < now - kMinRttWindowMs) rtt_samples_.pop_front();
        }
        // Round trips are counted in delivered data, so a stalled flow keeps its estimate.
        if (s.cum_ack >= round_end_) {
            ++rounds_;
            round_end_ = s.next_seq;
        }
        if (s.delivery_rate && *s.delivery_rate > 0.0) bw_samples_.push_back({rounds_, *s.delivery_rate});
        while (!bw_samples_.empty() && bw_samples_.front().time + kBwWindowRounds < rounds_) bw_samples_.pop_front();
        if (!has_model()) return;
        const double round = std::max(1.0, min_rtt());

        switch (state_) {
            case State::Startup:
                if (static_cast<double>(now - last_round_check_) >= round) {
                    last_round_check_ = now;
                    if (max_bw() >= full_bw_ * 1.25) {
                        full_bw_ = max_bw();
                        stalled_rounds_ = 0;
                    } else if (++stalled_rounds_ >= 3) {
                        state_ = State::Drain;
                    }
                }
                break;
            case State::Drain:
                if (static_cast<double>(s.inflight) <= bdp()) {
                    state_ = State::ProbeBw;
                    phase_ = 2;
                    phase_start_ = now;
                }
                break;
            case State::ProbeBw:
                if (static_cast<double>(now - phase_start_) >= round) {
                    phase_ = (phase_ + 1) % kCycle.size();
                    phase_start_ = now;
                }
                break;
        }
    }

    void on_fast_retransmit(std::int64_t) override {}
    void on_rto(std::int64_t) override {}
    std::unique_ptr<CongestionControl> clone() const override { return std::make_unique<BbrLike>(*this); }

private:
    enum class State { Startup, Drain, ProbeBw };
    struct Sample {
        std::int64_t time;
        double value;
    };
    static constexpr double kHighGain = 2.885;
    static constexpr std::int64_t kMinRttWindowMs = 10000;
    static constexpr std::int64_t kBwWindowRounds = 10;
    static constexpr std::array<double, 8> kCycle = {1.25, 0.75, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0};

    bool has_model() const { return !rtt_samples_.empty() && !bw_samples_.empty(); }

    double min_rtt() const {
        double m = kInf;
        for (const auto& s : rtt_samples_) m = std::min(m, s.value);
        return m;
    }
    double max_bw() const {
        double m = 0.0;
        for (const auto& s : bw_samples_) m = std::max(m, s.value);
        return m;
    }
    double bdp() const { return max_bw() * min_rtt(); }
    double pacing_gain() const {
        switch (state_) {
            case State::Startup: return kHighGain;
            case State::Drain: return 1.0 / kHighGain;
            case State::ProbeBw: return kCycle[phase_];
        }
        return 1.0;
    }

    State state_ = State::Startup;
    std::deque<Sample> rtt_samples_;
    std::deque<Sample> bw_samples_;
    std::int64_t rounds_ = 0;
    std::int64_t round_end_ = 0;
    double full_bw_ = 0.0;
    int stalled_rounds_ = 0;
    std::int64_t last_round_check_ = 0;
    std::size_t phase_ = 2;
    std::int64_t phase_start_ = 0;
};

}  // namespace

std::unique_ptr<CongestionControl> reno(double initial_cwnd, double max_cwnd) {
    return std::make_unique<Reno>(initial_cwnd, max_cwnd);
}
std::unique_ptr<CongestionControl> vegas(double alpha, double beta) { return std::make_unique<Vegas>(alpha, beta); }
std::unique_ptr<CongestionControl> bbr_like() { return std::make_unique<BbrLike>(); }

bool is_cc_name(std::string_view name) { return name == "reno" || name == "vegas" || name == "bbr"; }

std::unique_ptr<CongestionControl> make_cc(std::string_view name) {
    if (name == "reno") return reno();
    if (name == "vegas") return vegas();
    if (name == "bbr") return bbr_like();
    throw std::invalid_argument("unknown congestion-control model '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Simulator
// ---------------------------------------------------------------------------

namespace {

struct Packet {
    std::uint64_t id;
    int flow;
    std::int64_t seq;
    std::int64_t send_ms;
};

struct Ack {
    int flow;
    std::int64_t cum_ack;
    std::int64_t echo_seq;
    std::uint64_t echo_id;
};

template <typename T>
struct Timed {
    std::int64_t time;
    std::uint64_t order;
    T item;
    bool operator>(const Timed& o) const { return time != o.time ? time > o.time : order > o.order; }
};

template <typename T>
using TimedQueue = std::priority_queue<Timed<T>, std::vector<Timed<T>>, std::greater<>>;

struct SeqInfo {
    std::int64_t send_ms = 0;
    bool retransmitted = false;
    bool sacked = false;  // the receiver reported holding it out of order
    std::int64_t delivered_at_send = 0;
    std::int64_t delivered_time_at_send = 0;
};

struct Sender {
    std::unique_ptr<CongestionControl> cc;
    std::int64_t total_packets = std::numeric_limits<std::int64_t>::max();
    std::int64_t snd_una = 0;
    std::int64_t snd_nxt = 0;
    std::int64_t highest_sent = 0;  // one past the largest sequence ever sent
    std::vector<SeqInfo> seqs;
    int dupacks = 0;
    bool in_recovery = false;
    bool partial_ack_seen = false;
    std::int64_t recover = 0;
    std::int64_t rto_recover = 0;     // no fast retransmit until the data outstanding at the last RTO is acked
    std::int64_t highest_sacked = 0;  // one past the largest sacked sequence
    std::int64_t rexmit_next = 0;     // next hole to repair during recovery
    std::deque<std::int64_t> retransmit_now;
    std::optional<double> srtt;
    double rttvar = 0.0;
    std::int64_t rto = 1000;
    std::optional<std::int64_t> rto_deadline;
    std::int64_t delivered = 0;
    std::int64_t delivered_time = 0;
    double pacing_credit = 0.0;
};

struct Receiver {
    std::int64_t rcv_nxt = 0;
    std::set<std::int64_t> out_of_order;
    double delay_sum = 0.0;
    std::optional<std::int64_t> completed_ms;
};

class Simulation {
public:
    Simulation(const Trace& trace, const std::vector<const CongestionControl*>& models, const SimOptions& opt)
        : trace_(trace), opt_(opt), rng_(make_rng(opt.seed)) {
        if (models.empty() || models.size() > 2) throw std::invalid_argument("simulate supports one or two flows");
        if (trace.intervals.empty()) throw std::invalid_argument("simulate needs a nonempty trace");
        if (opt.jitter_sigma_ms < 0.0) throw std::invalid_argument("jitter sigma must be nonnegative");
        for (const auto* m : models) {
            Sender s;
            s.cc = m->clone();
            s.rto = opt.initial_rto_ms;
            if (trace.data_kb) s.total_packets = (*trace.data_kb * 1000 + kMtuBytes - 1) / kMtuBytes;
            senders_.push_back(std::move(s));
        }
        receivers_.resize(models.size());
        result_.flows.resize(models.size());
        for (std::size_t f = 0; f < models.size(); ++f) result_.flows[f].model = senders_[f].cc->name();
        // Precompute per-ms interval lookup bounds.
        std::int64_t end = 0;
        for (const auto& iv : trace.intervals) {
            end += iv.duration_ms;
            interval_ends_.push_back(end);
        }
    }

    SimResult run() {
        const std::int64_t duration = trace_.total_duration_ms();
        const std::int64_t hard_end = trace_.data_kb ? duration + opt_.completion_grace_ms : duration;
        std::int64_t t = 0;
        for (; t < hard_end; ++t) {
            advance_interval(t);
            deliver_due(t);
            acks_due(t);
            for (std::size_t f = 0; f < senders_.size(); ++f) check_rto(static_cast<int>(f), t);
            // Alternate which flow reaches the queue first so two flows share it fairly.
            const std::size_t first = static_cast<std::size_t>(t) % senders_.size();
            for (std::size_t k = 0; k < senders_.size(); ++k)
                send_allowed(static_cast<int>((first + k) % senders_.size()), t);
            serve_link(t);
            if (opt_.record_cwnd)
                for (std::size_t f = 0; f < senders_.size(); ++f)
                    result_.flows[f].cwnd_per_ms.push_back(senders_[f].cc->cwnd());
            if (trace_.data_kb && all_complete()) {
                ++t;
                break;
            }
        }
        result_.end_ms = t;
        finish(t);
        return std::move(result_);
    }

private:
    bool all_complete() const {
        return std::all_of(receivers_.begin(), receivers_.end(), [](const Receiver& r) { return r.completed_ms.has_value(); });
    }

    void advance_interval(std::int64_t t) {
        while (current_ + 1 < interval_ends_.size() && t >= interval_ends_[current_]) ++current_;
    }
    const Interval& interval() const { return trace_.intervals[current_]; }

    void log(std::int64_t t, EventKind kind, std::uint64_t id, int flow) {
        if (opt_.record_events) result_.events.push_back({t, kind, id, flow});
    }

    void deliver_due(std::int64_t t) {
        while (!in_flight_.empty() && in_flight_.top().time <= t) {
            const Packet p = in_flight_.top().item;
            in_flight_.pop();
            auto& rx = receivers_[static_cast<std::size_t>(p.flow)];
            auto& counters = result_.flows[static_cast<std::size_t>(p.flow)].counters;
            log(t, EventKind::Deliver, p.id, p.flow);
            ++result_.link.delivered;
            ++counters.delivered;
            bool fresh = false;
            if (p.seq == rx.rcv_nxt) {
                fresh = true;
                ++rx.rcv_nxt;
                while (!rx.out_of_order.empty() && *rx.out_of_order.begin() == rx.rcv_nxt) {
                    rx.out_of_order.erase(rx.out_of_order.begin());
                    ++rx.rcv_nxt;
                }
            } else if (p.seq > rx.rcv_nxt) {
                fresh = rx.out_of_order.insert(p.seq).second;
            }
            if (fresh) {
                ++counters.unique_delivered;
                rx.delay_sum += static_cast<double>(t - p.send_ms);
            }
            const auto& sender = senders_[static_cast<std::size_t>(p.flow)];
            if (!rx.completed_ms && rx.rcv_nxt >= sender.total_packets) rx.completed_ms = t;
            acks_.push({t + interval().latency_ms, order_++, Ack{p.flow, rx.rcv_nxt, p.seq, p.id}});
        }
    }

    void acks_due(std::int64_t t) {
        while (!acks_.empty() && acks_.top().time <= t) {
            const Ack a = acks_.top().item;
            acks_.pop();
            on_ack(a, t);
        }
    }

    void on_ack(const Ack& a, std::int64_t t) {
        auto& s = senders_[static_cast<std::size_t>(a.flow)];
        log(t, EventKind::Ack, a.echo_id, a.flow);
        auto& info = s.seqs[static_cast<std::size_t>(a.echo_seq)];
        // A first arrival, as opposed to a copy of data the receiver already held.
        const bool fresh = a.echo_seq >= s.snd_una && !info.sacked;
        // Each ack echoes the sequence that triggered it, which acts as a one-block SACK.
        if (a.echo_seq >= a.cum_ack) {
            info.sacked = true;
            s.highest_sacked = std::max(s.highest_sacked, a.echo_seq + 1);
        }

        AckSample sample;
        sample.now_ms = t;
        if (fresh) {
            ++s.delivered;
            s.delivered_time = t;
            if (!info.retransmitted) {
                const double rtt = static_cast<double>(t - info.send_ms);
                sample.rtt_ms = rtt;
                update_rto(s, rtt);
            }
            const std::int64_t elapsed = t - info.delivered_time_at_send;
            if (elapsed > 0)
                sample.delivery_rate =
                    static_cast<double>(s.delivered - info.delivered_at_send) / static_cast<double>(elapsed);
        }

        if (a.cum_ack > s.snd_una) {
            sample.newly_acked = a.cum_ack - s.snd_una;
            s.snd_una = a.cum_ack;
            s.snd_nxt = std::max(s.snd_nxt, s.snd_una);
            s.dupacks = 0;

            // Only the first partial ack re-arms the timer, so a window with many
            // holes falls back to a timeout instead of repairing one hole per RTT.
            bool rearm = true;
            if (s.in_recovery) {
                if (s.snd_una >= s.recover) {
                    s.in_recovery = false;
                } else {
                    s.retransmit_now.push_back(s.snd_una);
                    s.rexmit_next = std::max(s.rexmit_next, s.snd_una + 1);
                    queue_next_hole(s);
                    rearm = !s.partial_ack_seen;
                    s.partial_ack_seen = true;
                }
            }
            if (s.snd_una >= s.snd_nxt)
                s.rto_deadline.reset();
            else if (rearm)
                s.rto_deadline = t + s.rto;
        } else if (a.cum_ack == s.snd_una && s.snd_nxt > s.snd_una && fresh) {
            ++s.dupacks;
            log(t, EventKind::Dupack, a.echo_id, a.flow);
            if (s.dupacks == 3 && !s.in_recovery && s.snd_una >= s.rto_recover) {
                s.in_recovery = true;
                s.partial_ack_seen = false;
                s.recover = s.snd_nxt;
                s.rexmit_next = s.snd_una + 1;
                ++result_.flows[static_cast<std::size_t>(a.flow)].counters.fast_retransmits;
                s.cc->on_fast_retransmit(t);
                s.retransmit_now.push_back(s.snd_una);
            } else if (s.in_recovery) {
                queue_next_hole(s);
            }
        } else {
            return;  // stale or duplicate: nothing for the controller
        }
        sample.inflight = s.snd_nxt - s.snd_una;
        sample.cum_ack = s.snd_una;
        sample.next_seq = s.snd_nxt;
        s.cc->on_ack(sample);
    }

    /// During recovery every returning ack releases one retransmission of the
    /// next unsacked sequence below the highest sacked one.
    void queue_next_hole(Sender& s) {
        std::int64_t seq = std::max(s.rexmit_next, s.snd_una);
        const std::int64_t limit = std::min(s.highest_sacked, s.snd_nxt);
        while (seq < limit && s.seqs[static_cast<std::size_t>(seq)].sacked) ++seq;
        if (seq >= limit) return;
        s.retransmit_now.push_back(seq);
        s.rexmit_next = seq + 1;
    }

    void update_rto(Sender& s, double rtt) {
        if (!s.srtt) {
            s.srtt = rtt;
            s.rttvar = rtt / 2.0;
        } else {
            s.rttvar = 0.75 * s.rttvar + 0.25 * std::abs(*s.srtt - rtt);
            s.srtt = 0.875 * *s.srtt + 0.125 * rtt;
        }
        s.rto = std::max<std::int64_t>(opt_.min_rto_ms, static_cast<std::int64_t>(std::ceil(*s.srtt + 4.0 * s.rttvar)));
    }

    void check_rto(int flow, std::int64_t t) {
        auto& s = senders_[static_cast<std::size_t>(flow)];
        if (!s.rto_deadline || t < *s.rto_deadline || s.snd_una >= s.snd_nxt) return;
        log(t, EventKind::Rto, 0, flow);
        ++result_.flows[static_cast<std::size_t>(flow)].counters.rtos;
        s.cc->on_rto(t);
        s.rto_recover = s.highest_sent;
        s.snd_nxt = s.snd_una;  // go-back-N
        s.in_recovery = false;
        s.dupacks = 0;
        s.retransmit_now.clear();
        s.rto = std::min<std::int64_t>(s.rto * 2, 60000);
        s.rto_deadline = t + s.rto;
    }

    void transmit(int flow, std::int64_t seq, std::int64_t t) {
        auto& s = senders_[static_cast<std::size_t>(flow)];
        auto& counters = result_.flows[static_cast<std::size_t>(flow)].counters;
        if (static_cast<std::size_t>(seq) >= s.seqs.size()) s.seqs.resize(static_cast<std::size_t>(seq) + 1);
        auto& info = s.seqs[static_cast<std::size_t>(seq)];
        const bool again = seq < s.highest_sent;
        info.retransmitted = info.retransmitted || again;
        info.send_ms = t;
        if (s.snd_nxt == s.snd_una) s.delivered_time = t;  // restarting from idle
        info.delivered_at_send = s.delivered;
        info.delivered_time_at_send = s.delivered_time;
        s.highest_sent = std::max(s.highest_sent, seq + 1);
        ++counters.sent;
        if (again) ++counters.retransmits;
        if (!s.rto_deadline) s.rto_deadline = t + s.rto;

        const Packet p{next_packet_id_++, flow, seq, t};
        log(t, EventKind::Send, p.id, flow);
        ++result_.link.enqueue_attempts;
        if (static_cast<std::int64_t>(queue_.size()) >= trace_.buffer_packets) {
            ++result_.link.dropped;
            log(t, EventKind::Drop, p.id, flow);
            return;
        }
        queue_.push_back(p);
        ++result_.link.enqueued;
        result_.link.max_queue = std::max(result_.link.max_queue, static_cast<std::int64_t>(queue_.size()));
        log(t, EventKind::Enqueue, p.id, flow);
    }

    void send_allowed(int flow, std::int64_t t) {
        auto& s = senders_[static_cast<std::size_t>(flow)];
        while (!s.retransmit_now.empty()) {
            const auto seq = s.retransmit_now.front();
            s.retransmit_now.pop_front();
            if (seq >= s.snd_una && seq < s.snd_nxt) transmit(flow, seq, t);
        }
        const auto rate = s.cc->pacing_rate();
        if (rate) s.pacing_credit = std::min(s.pacing_credit + *rate, *rate + 2.0);
        const auto window = static_cast<std::int64_t>(std::floor(s.cc->cwnd()));
        while (s.snd_nxt - s.snd_una < window && s.snd_nxt < s.total_packets) {
            if (s.snd_nxt < s.highest_sent && s.seqs[static_cast<std::size_t>(s.snd_nxt)].sacked) {
                ++s.snd_nxt;  // go-back-N skips what the receiver reported holding
                continue;
            }
            if (rate) {
                if (s.pacing_credit < 1.0) break;
                s.pacing_credit -= 1.0;
            }
            transmit(flow, s.snd_nxt, t);
            ++s.snd_nxt;
        }
    }

    void serve_link(std::int64_t t) {
        const double grant = static_cast<double>(interval().bandwidth_mbps) * 1000.0 / (8.0 * kMtuBytes);
        tokens_ += grant;
        result_.link.tokens_granted += grant;
        while (tokens_ >= 1.0 && !queue_.empty()) {
            tokens_ -= 1.0;
            const Packet p = queue_.front();
            queue_.pop_front();
            ++result_.link.dequeued;
            log(t, EventKind::Dequeue, p.id, p.flow);
            const std::int64_t base = t + interval().latency_ms;
            std::int64_t arrive = base;
            if (opt_.jitter_sigma_ms > 0.0) {
                std::normal_distribution<double> jitter(0.0, opt_.jitter_sigma_ms);
                arrive += static_cast<std::int64_t>(std::llround(std::abs(jitter(rng_))));
                // Jitter never lets a packet overtake its predecessor; only a latency drop reorders.
                if (base >= last_base_) arrive = std::max(arrive, last_arrival_);
            }
            last_base_ = base;
            last_arrival_ = arrive;
            in_flight_.push({arrive, order_++, p});
        }
        // An idle link cannot bank more than one packet's worth of service.
        if (queue_.empty()) tokens_ = std::min(tokens_, std::max(1.0, grant));
    }

    void finish(std::int64_t end) {
        const std::int64_t duration = trace_.total_duration_ms();
        for (std::size_t f = 0; f < senders_.size(); ++f) {
            auto& flow = result_.flows[f];
            const auto& rx = receivers_[f];
            const auto& s = senders_[f];
            std::int64_t bytes = flow.counters.unique_delivered * kMtuBytes;
            if (trace_.data_kb) bytes = std::min(bytes, *trace_.data_kb * 1000);
            flow.perf.bytes_delivered = bytes;
            std::int64_t elapsed = duration;
            if (trace_.data_kb) {
                elapsed = rx.completed_ms ? *rx.completed_ms + 1 : end;
                if (rx.completed_ms) flow.perf.completion_time_ms = static_cast<double>(*rx.completed_ms + 1);
            }
            flow.perf.throughput_mbps = static_cast<double>(bytes) * 8.0 / (static_cast<double>(elapsed) * 1000.0);
            flow.perf.mean_delay_ms = flow.counters.unique_delivered
                                          ? rx.delay_sum / static_cast<double>(flow.counters.unique_delivered)
                                          : static_cast<double>(elapsed);
            (void)s;
        }
    }

    const Trace& trace_;
    SimOptions opt_;
    Rng rng_;
    std::vector<Sender> senders_;
    std::vector<Receiver> receivers_;
    std::vector<std::int64_t> interval_ends_;
    std::size_t current_ = 0;
    std::deque<Packet> queue_;
    double tokens_ = 0.0;
    std::int64_t last_base_ = 0;
    std::int64_t last_arrival_ = 0;
    TimedQueue<Packet> in_flight_;
    TimedQueue<Ack> acks_;
    std::uint64_t order_ = 0;
    std::uint64_t next_packet_id_ = 1;
    SimResult result_;
};

}  // namespace

SimResult simulate(const Trace& trace, const std::vector<const CongestionControl*>& models, const SimOptions& options) {
    return Simulation(trace, models, options).run();
}

SimResult simulate(const Trace& trace, const CongestionControl& model, const SimOptions& options) {
    return simulate(trace, std::vector<const CongestionControl*>{&model}, options);
}

PerfSummary capacity_oracle(const Trace& trace) {
    PerfSummary p;
    p.throughput_mbps = trace.mean_bandwidth_mbps();
    p.mean_delay_ms = trace.mean_latency_ms();
    std::int64_t bytes = 0;
    for (const auto& iv : trace.intervals) bytes += iv.bandwidth_mbps * iv.duration_ms * 125;  // Mbps*ms -> bytes
    p.bytes_delivered = bytes;
    return p;
}

std::string format_events_csv(const std::vector<Event>& events) {
    std::ostringstream os;
    os << "time_ms,event,packet_id,flow_id\n";
    for (const auto& e : events) os << e.time_ms << ',' << event_name(e.kind) << ',' << e.packet_id << ',' << e.flow << '\n';
    return os.str();
}

void write_events_csv(const std::string& path, const std::vector<Event>& events) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << format_events_csv(events);
}

}  // namespace advgen

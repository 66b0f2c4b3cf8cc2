#include "hlcmon/clock.hpp"

#include <algorithm>

namespace hlcmon
{
    std::ostream &operator<<(std::ostream &os, const HlcTimestamp &t)
    {
        return os << '<' << t.l << ',' << t.c << '>';
    }

    namespace
    {
        Counter checked(Counter c, const ClockConfig &cfg)
        {
            if (c > cfg.c_max)
                throw CounterOverflow(c);
            return c;
        }
    } // namespace

    HlcTimestamp hlc_local(HlcState &state, ClockValue pt, const ClockConfig &cfg)
    {
        const ClockValue prev_l = state.l;
        HlcTimestamp next{std::max(prev_l, pt), 0};
        if (next.l == prev_l)
            next.c = checked(state.c + 1, cfg);
        state = next;
        return next;
    }

    HlcTimestamp hlc_recv(HlcState &state, ClockValue pt, const HlcTimestamp &msg, const ClockConfig &cfg)
    {
        const ClockValue prev_l = state.l;
        HlcTimestamp next{std::max({prev_l, msg.l, pt}), 0};
        if (next.l == prev_l && next.l == msg.l)
            next.c = checked(std::max(state.c, msg.c) + 1, cfg);
        else if (next.l == prev_l)
            next.c = checked(state.c + 1, cfg);
        else if (next.l == msg.l)
            next.c = checked(msg.c + 1, cfg);
        state = next;
        return next;
    }

    std::vector<ClockValue> HvcTimestamp::l_entries() const
    {
        std::vector<ClockValue> out;
        out.reserve(entries_.size());
        for (const auto &e : entries_)
            out.push_back(e.l);
        return out;
    }

    bool HvcTimestamp::dominates(const HvcTimestamp &other) const
    {
        if (other.entries_.size() != entries_.size())
            return false;
        for (std::size_t k = 0; k < entries_.size(); ++k)
            if (entries_[k] < other.entries_[k])
                return false;
        return true;
    }

    HvcClock::HvcClock(ProcessId owner, std::size_t n, ClockConfig cfg) : ts_(owner, n), cfg_(cfg)
    {
        if (owner >= n)
            throw Error("hvc: owner id " + std::to_string(owner) + " out of range");
        cfg_.validate();
    }

    HvcTimestamp HvcClock::local(ClockValue pt)
    {
        hlc_local(ts_.entries_[ts_.owner_], pt, cfg_);
        return ts_;
    }

    HvcTimestamp HvcClock::recv(ClockValue pt, const HvcTimestamp &msg)
    {
        if (msg.size() != ts_.size() || msg.owner() >= ts_.size())
            throw Error("hvc: message from unknown sender " + std::to_string(msg.owner()));
        for (std::size_t k = 0; k < ts_.size(); ++k)
            if (k != ts_.owner_)
                ts_.entries_[k] = std::max(ts_.entries_[k], msg.entries_[k]);
        hlc_recv(ts_.entries_[ts_.owner_], pt, msg.own_hlc(), cfg_);
        return ts_;
    }

} // namespace hlcmon

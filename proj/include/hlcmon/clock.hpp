#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hlcmon
{
    using ClockValue = std::uint64_t;
    using Counter = std::uint64_t;
    using ProcessId = std::uint32_t;

    class Error : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    /// Raised when an HLC counter would exceed the configured c_max.
    class CounterOverflow : public Error
    {
    public:
        explicit CounterOverflow(Counter attempted)
            : Error("hlc counter overflow: c=" + std::to_string(attempted) + " exceeds c_max"),
              attempted_(attempted)
        {
        }
        Counter attempted() const noexcept { return attempted_; }

    private:
        Counter attempted_;
    };

    struct HlcTimestamp
    {
        ClockValue l = 0;
        Counter c = 0;

        friend constexpr auto operator<=>(const HlcTimestamp &, const HlcTimestamp &) = default;
    };

    std::ostream &operator<<(std::ostream &os, const HlcTimestamp &t);

    /// Current <l.i, c.i> of one process. Mutated only by its owner.
    using HlcState = HlcTimestamp;

    inline constexpr Counter kDefaultCounterMax = (Counter{1} << 31) - 1;

    struct ClockConfig
    {
        Counter c_max = kDefaultCounterMax;
        ClockValue epsilon = 0;

        void validate() const
        {
            if (c_max < 1)
                throw Error("clock config: c_max must be >= 1");
        }
    };

    HlcTimestamp hlc_local(HlcState &state, ClockValue pt, const ClockConfig &cfg);
    HlcTimestamp hlc_recv(HlcState &state, ClockValue pt, const HlcTimestamp &msg, const ClockConfig &cfg);

    inline std::strong_ordering hlc_compare(const HlcTimestamp &a, const HlcTimestamp &b) noexcept
    {
        return a <=> b;
    }

    /// <t.l + gamma, c_max>: the latest timestamp still within gamma of t.
    inline constexpr HlcTimestamp hlc_extend(const HlcTimestamp &t, ClockValue gamma, const ClockConfig &cfg) noexcept
    {
        return HlcTimestamp{t.l + gamma, cfg.c_max};
    }

    /// Full hybrid vector timestamp: for every process, the HLC timestamp of the
    /// latest event of that process known to the owner. The l part of each entry
    /// is the owner's l-value knowledge about that process.
    class HvcTimestamp
    {
    public:
        HvcTimestamp() = default;
        HvcTimestamp(ProcessId owner, std::size_t n) : owner_(owner), entries_(n) {}

        ProcessId owner() const noexcept { return owner_; }
        std::size_t size() const noexcept { return entries_.size(); }
        const HlcTimestamp &own_hlc() const { return entries_.at(owner_); }
        const HlcTimestamp &entry(ProcessId p) const { return entries_.at(p); }
        std::span<const HlcTimestamp> entries() const noexcept { return entries_; }
        std::vector<ClockValue> l_entries() const;

        /// Componentwise >= on entries.
        bool dominates(const HvcTimestamp &other) const;

        friend bool operator==(const HvcTimestamp &, const HvcTimestamp &) = default;

    private:
        friend class HvcClock;
        ProcessId owner_ = 0;
        std::vector<HlcTimestamp> entries_;
    };

    /// Per-process HVC maintenance; the own entry follows the ordinary HLC rules.
    class HvcClock
    {
    public:
        HvcClock(ProcessId owner, std::size_t n, ClockConfig cfg);

        const HvcTimestamp &current() const noexcept { return ts_; }

        HvcTimestamp local(ClockValue pt);
        HvcTimestamp recv(ClockValue pt, const HvcTimestamp &msg);

    private:
        HvcTimestamp ts_;
        ClockConfig cfg_;
    };

} // namespace hlcmon

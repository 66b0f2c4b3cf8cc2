#pragma once

#include "hlcmon/clock.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace hlcmon
{
    using MessageId = std::uint64_t;
    using Value = std::int64_t;

    enum class EventKind : std::uint8_t
    {
        Local,
        Send,
        Recv,
    };

    std::string_view to_string(EventKind k) noexcept;

    struct VarChange
    {
        std::string name;
        Value value = 0;

        friend bool operator==(const VarChange &, const VarChange &) = default;
    };

    struct Event
    {
        std::uint64_t seq = 0;
        ProcessId proc = 0;
        EventKind kind = EventKind::Local;
        ClockValue pt = 0;
        HlcTimestamp hlc;
        std::optional<VarChange> var_change;
        std::optional<MessageId> msg_id;

        friend bool operator==(const Event &, const Event &) = default;
    };

    inline constexpr int kTraceFormatVersion = 1;

    struct TraceHeader
    {
        int version = kTraceFormatVersion;
        std::uint32_t n = 0;
        ClockValue epsilon = 0;
        Counter c_max = kDefaultCounterMax;
        /// Echo of the generating configuration; opaque to the trace module.
        nlohmann::ordered_json config = nlohmann::ordered_json::object();

        friend bool operator==(const TraceHeader &, const TraceHeader &) = default;
    };

    struct Trace
    {
        TraceHeader header;
        std::vector<Event> events;

        friend bool operator==(const Trace &, const Trace &) = default;
    };

    class TraceFormatError : public Error
    {
    public:
        TraceFormatError(std::size_t line, const std::string &what)
            : Error("trace line " + std::to_string(line) + ": " + what), line_(line)
        {
        }
        std::size_t line() const noexcept { return line_; }

    private:
        std::size_t line_;
    };

    /// JSON Lines: a header object, then one event object per line with keys
    /// seq, proc, kind, pt, l, c, var, val, msg_id (absent values are null).
    void encode(const Trace &trace, std::ostream &out);
    std::string encode(const Trace &trace);

    /// Validates per-process seq order and send/recv matching while reading.
    Trace decode(std::istream &in);
    Trace decode(std::string_view text);

    Trace read_trace_file(const std::string &path);
    void write_trace_file(const Trace &trace, const std::string &path);

    /// start_event of an interval that no event opened (the initial value).
    inline constexpr std::size_t kNoEvent = static_cast<std::size_t>(-1);

    /// [start, end) during which `var` of `proc` held `value`. A missing end
    /// means the value was never changed again.
    struct Interval
    {
        ProcessId proc = 0;
        std::string var;
        Value value = 0;
        HlcTimestamp start;
        std::optional<HlcTimestamp> end;
        /// Indices into Trace::events of the events opening and closing the interval.
        std::size_t start_event = 0;
        std::optional<std::size_t> end_event;

        bool is_open() const noexcept { return !end.has_value(); }
        friend bool operator==(const Interval &, const Interval &) = default;
    };

    using IntervalList = std::vector<Interval>;

    /// Maximal constant-value intervals of `var`, one list per process.
    /// Values before the first change are not represented.
    std::vector<IntervalList> extract_intervals(const Trace &trace, std::string_view var);

    /// Keeps only intervals with a nonzero value.
    std::vector<IntervalList> true_intervals(const std::vector<IntervalList> &all);

    /// CSV: proc,var,val,start_l,start_c,end_l,end_c,open
    void write_intervals_csv(const std::vector<IntervalList> &intervals, std::ostream &out);

    /// Per-process event indices in trace order; built once, shared by checkers.
    struct TraceIndex
    {
        explicit TraceIndex(const Trace &trace);

        const Trace *trace;
        std::vector<std::vector<std::size_t>> by_proc;
        /// For each event, its position within by_proc[proc].
        std::vector<std::size_t> local_pos;
        /// For recv events, index of the matching send; for sends, index of the recv if any.
        std::vector<std::optional<std::size_t>> peer;

        std::size_t n() const noexcept { return by_proc.size(); }
        const Event &event(std::size_t i) const { return trace->events[i]; }
    };

} // namespace hlcmon

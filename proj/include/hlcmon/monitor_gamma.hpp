#pragma once

#include "hlcmon/model.hpp"
#include "hlcmon/trace.hpp"

#include <ostream>
#include <vector>

namespace hlcmon
{
    struct MonitorConfig
    {
        ClockValue gamma = 0;
        ClockValue epsilon = 0;
        Counter c_max = kDefaultCounterMax;
        /// gamma above epsilon only adds false positives; refuse it unless asked.
        bool allow_gamma_above_epsilon = false;

        void validate() const;
    };

    /// gamma = floor(fraction * epsilon).
    ClockValue gamma_from_fraction(double fraction, ClockValue epsilon);

    /// An interval whose end has been pushed out by gamma: [start, ext_end).
    struct ExtendedInterval
    {
        Interval base;
        std::optional<HlcTimestamp> ext_end;
    };

    /// Extends every end of one variable's value timeline.
    std::vector<ExtendedInterval> gamma_extend(const IntervalList &timeline, const MonitorConfig &cfg);

    /// Stretch where a variable may hold any of several values because the
    /// extension of one interval overlaps the next ones.
    struct ValueZone
    {
        Region region;
        std::vector<Value> values; // ascending, deduplicated
    };
    std::vector<ValueZone> value_zones(const std::vector<ExtendedInterval> &ext);

    /// For conjunctive predicates: one combination of extended true intervals
    /// sharing a common timestamp, found by scanning the queues in HLC order
    /// and restarting, after each detection, with the intervals that begin at
    /// or after its latest start. The region runs from that start to the
    /// earliest extended end and `contributors[v]` is the single interval
    /// used for variable v.
    /// For value predicates: a maximal region where the predicate can hold
    /// for some choice of the candidate values, with `contributors[v]` the
    /// intervals of variable v live somewhere in it.
    struct Detection
    {
        Region region;
        std::vector<std::vector<std::size_t>> contributors;
    };

    /// Timelines are parallel to referenced_vars(pred) and must start at the
    /// initial value (see value_timeline).
    std::vector<Detection> detect(const std::vector<IntervalList> &timelines, const Predicate &pred,
                                  const MonitorConfig &cfg);
    std::vector<Detection> detect(const Trace &trace, const Predicate &pred, const MonitorConfig &cfg);

    /// Maximal regions where the predicate can hold for some choice of
    /// extended intervals and candidate values. For value predicates these
    /// are the detections; for conjunctive ones they contain every
    /// detection and every combination the scan skipped, and are what
    /// window marking uses.
    std::vector<Detection> possible_regions(const std::vector<IntervalList> &timelines, const Predicate &pred,
                                            const MonitorConfig &cfg);
    std::vector<Detection> possible_regions(const std::vector<std::vector<ExtendedInterval>> &ext, const Predicate &pred);

    /// Ascending indices of windows whose closed l-span meets some detection.
    /// With first/last given, only windows in [first, last] are considered.
    std::vector<std::size_t> mark_windows(const std::vector<Detection> &dets, const WindowLayout &layout);
    std::vector<std::size_t> mark_windows(const std::vector<Detection> &dets, const WindowLayout &layout,
                                          std::size_t first, std::size_t last);

    void write_detections_jsonl(const std::vector<Detection> &dets, std::ostream &out);

} // namespace hlcmon

#pragma once

#include "hlcmon/model.hpp"
#include "hlcmon/trace.hpp"

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace hlcmon
{
    /// (t_proc >= from && t_proc < to) implies vars[var] == value. An absent
    /// `to` runs to the end of the window.
    struct Valuation
    {
        ProcessId proc = 0;
        std::size_t var = 0;
        Value value = 0;
        HlcTimestamp from;
        std::optional<HlcTimestamp> to;
    };

    /// t_later_proc >= later_ts implies t_earlier_proc >= earlier_ts.
    struct Implication
    {
        ProcessId later_proc = 0;
        HlcTimestamp later_ts;
        ProcessId earlier_proc = 0;
        HlcTimestamp earlier_ts;
    };

    /// Everything needed to decide whether a window holds a consistent cut
    /// satisfying the predicate. The unknowns are one HLC timestamp per process.
    struct ConstraintSet
    {
        std::size_t window = 0;
        std::uint32_t n = 0;
        ClockValue epsilon = 0;
        Counter c_max = kDefaultCounterMax;
        HlcTimestamp lo;
        HlcTimestamp hi;
        Predicate predicate;
        std::vector<VarRef> vars; // referenced_vars(predicate)
        std::vector<Valuation> valuations;
        /// A receive at or before t_j forces the send at or before t_i.
        std::vector<Implication> messages;
        /// Reaching f on j forces the last event e on i with pt(e) + eps < pt(f).
        std::vector<Implication> clock_order;
    };

    struct Witness
    {
        std::vector<HlcTimestamp> cut; // one timestamp per process
        std::vector<Value> values;     // one per ConstraintSet::vars entry
    };

    /// Value of vars[var] at timestamp t, or nullopt if no valuation covers t
    /// or two valuations disagree.
    std::optional<Value> value_at(const ConstraintSet &cs, std::size_t var, const HlcTimestamp &t);

    /// Direct evaluation of every constraint on a candidate cut.
    bool satisfies(const ConstraintSet &cs, const std::vector<HlcTimestamp> &cut);

    /// A satisfying cut if one exists.
    std::optional<Witness> solve(const ConstraintSet &cs);

    /// Builds constraint sets for the windows of one trace.
    class WindowBuilder
    {
    public:
        WindowBuilder(const Trace &trace, WindowLayout layout, Predicate predicate);

        /// Throws Error if k is outside the layout.
        ConstraintSet build(std::size_t k) const;

        const WindowLayout &layout() const noexcept { return layout_; }
        const std::vector<VarRef> &vars() const noexcept { return vars_; }
        /// Value intervals of vars()[v], starting with the initial value 0.
        const IntervalList &timeline(std::size_t v) const { return timelines_.at(v); }

    private:
        const Trace *trace_;
        TraceIndex index_;
        WindowLayout layout_;
        Predicate predicate_;
        std::vector<VarRef> vars_;
        std::vector<IntervalList> timelines_;
    };

    ConstraintSet build_constraints(const Trace &trace, const WindowLayout &layout, std::size_t k,
                                    const Predicate &predicate);

    /// Value intervals of one variable with the pre-trace value 0 prepended.
    IntervalList value_timeline(const Trace &trace, const VarRef &ref);

    /// SMT-LIB 2 (QF_LIA) script asserting every constraint, followed by
    /// (check-sat) and (get-model).
    std::string emit_smtlib(const ConstraintSet &cs);
    void emit_smtlib(const ConstraintSet &cs, std::ostream &out);

} // namespace hlcmon

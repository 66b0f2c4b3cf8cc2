#pragma once

#include "hlcmon/clock.hpp"
#include "hlcmon/trace.hpp"

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace hlcmon
{
    /// A variable of one process, x_i.
    struct VarRef
    {
        ProcessId proc = 0;
        std::string var;

        friend auto operator<=>(const VarRef &, const VarRef &) = default;
    };

    /// Every referenced variable is nonzero (true) at once.
    struct Conjunctive
    {
        std::vector<VarRef> vars;
    };

    /// sum(vars) > bound. With 0/1 variables and bound 1 this is a mutual
    /// exclusion violation.
    struct SumGreater
    {
        std::vector<VarRef> vars;
        Value bound = 0;
    };

    /// sum(vars) < bound.
    struct SumLess
    {
        std::vector<VarRef> vars;
        Value bound = 0;
    };

    /// lhs < rhs.
    struct LessThan
    {
        VarRef lhs;
        VarRef rhs;
    };

    using Predicate = std::variant<Conjunctive, SumGreater, SumLess, LessThan>;

    class UnsupportedPredicate : public Error
    {
    public:
        using Error::Error;
    };

    /// Variables referenced by the predicate, in declaration order, deduplicated.
    std::vector<VarRef> referenced_vars(const Predicate &p);

    /// Evaluates the predicate given one value per referenced_vars() entry.
    bool evaluate(const Predicate &p, const std::vector<Value> &values);

    /// Throws UnsupportedPredicate if a variable refers to a process outside [0, n).
    void validate(const Predicate &p, std::uint32_t n);

    /// Text forms: "conj", "conj:0,2,5", "sum>C", "sum<C", "lt:i,j".
    /// The variable name defaults to `var` for every process.
    Predicate parse_predicate(std::string_view text, std::uint32_t n, std::string_view var = "v");
    std::string describe(const Predicate &p);

    /// Half-open HLC span [start, end); an absent end is unbounded.
    struct Region
    {
        HlcTimestamp start;
        std::optional<HlcTimestamp> end;

        bool contains(const HlcTimestamp &t) const { return start <= t && (!end || t < *end); }
        bool empty() const { return end && !(start < *end); }
        friend bool operator==(const Region &, const Region &) = default;
    };

    bool overlaps(const Region &a, const Region &b);

    /// Sorts and fuses regions that overlap or touch.
    std::vector<Region> merge_regions(std::vector<Region> regions);

    /// Windows [k*w, (k+1)*w + eps] in l-units, closed at both ends.
    struct WindowLayout
    {
        ClockValue width = 0;
        ClockValue epsilon = 0;
        std::size_t count = 0;

        ClockValue lo(std::size_t k) const { return static_cast<ClockValue>(k) * width; }
        ClockValue hi(std::size_t k) const { return static_cast<ClockValue>(k + 1) * width + epsilon; }

        /// Enough windows to cover every event's l value. width 0 means width = eps.
        static WindowLayout for_trace(const Trace &trace, ClockValue width = 0);
    };

} // namespace hlcmon

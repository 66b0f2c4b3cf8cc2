#pragma once

#include "hlcmon/model.hpp"
#include "hlcmon/trace.hpp"

#include <cstdint>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

namespace hlcmon
{
    /// Transitive closure of process order, send->recv, and the rule
    /// "e before f whenever pt(e) + eps < pt(f)". Quadratic memory; meant for
    /// checking and for traces up to a few tens of thousands of events.
    class HappenedBefore
    {
    public:
        /// Throws Error if the relation has a cycle (a malformed trace).
        explicit HappenedBefore(const Trace &trace);

        bool operator()(std::size_t e, std::size_t f) const
        {
            return (rows_[f * words_ + e / 64] >> (e % 64)) & 1U;
        }
        std::size_t size() const noexcept { return n_; }
        /// Bitset of the events that happened before f; bit e of word e / 64.
        std::span<const std::uint64_t> predecessors(std::size_t f) const
        {
            return {rows_.data() + f * words_, words_};
        }

    private:
        std::size_t n_ = 0;
        std::size_t words_ = 0;
        std::vector<std::uint64_t> rows_; // rows_[f] = bitset of predecessors of f
    };

    bool happened_before(const Trace &trace, std::size_t e, std::size_t f);

    /// Constant-time happened-before for traces whose physical clocks stay
    /// within eps of each other. e -> f iff e precedes f through messages and
    /// process order, or some message-successor of e has pt + eps below the
    /// largest pt among the message-predecessors of f.
    class CausalIndex
    {
    public:
        explicit CausalIndex(const Trace &trace);

        bool operator()(std::size_t e, std::size_t f) const;

        /// Vector clock of e: how many events of each process precede or equal e
        /// through messages and process order.
        std::span<const std::uint32_t> known(std::size_t e) const
        {
            return {known_.data() + e * n_, n_};
        }
        ClockValue min_future_pt(std::size_t e) const { return fmin_[e]; }
        ClockValue max_past_pt(std::size_t e) const { return kmax_[e]; }

    private:
        const Trace *trace_;
        std::size_t n_ = 0;
        ClockValue epsilon_ = 0;
        std::vector<std::uint32_t> known_;
        std::vector<std::uint32_t> local_pos_;
        std::vector<ClockValue> fmin_;
        std::vector<ClockValue> kmax_;
    };

    /// A combination of true intervals, one per monitored process, that some
    /// consistent cut holds at once. `members` holds (process, index into that
    /// process's true intervals), `witness` is the latest start among them and
    /// `region` spans the intervals, from the earliest start to the latest end
    /// extended by epsilon.
    /// Successive snapshots use intervals beginning at or after the previous
    /// witness point.
    struct Snapshot
    {
        std::vector<std::pair<ProcessId, std::size_t>> members;
        HlcTimestamp witness;
        Region region;
    };

    /// All satisfying snapshots for a conjunctive predicate, in time order.
    /// Other predicate forms throw UnsupportedPredicate.
    std::vector<Snapshot> detect_all_valid(const Trace &trace, const Predicate &pred);
    std::vector<Snapshot> detect_all_valid(const Trace &trace, const CausalIndex &hb, const Predicate &pred);

    /// Ground-truth regions. Supports conjunctive predicates and SumGreater
    /// over 0/1 variables; the latter is the union over every set of
    /// bound + 1 processes of the conjunction of those processes. One region
    /// per snapshot, sorted by start.
    std::vector<Region> ground_truth_regions(const Trace &trace, const Predicate &pred);

    /// One JSON object per line: members, witness, region.
    void write_snapshots_jsonl(const std::vector<Snapshot> &snaps, std::ostream &out);
    void write_regions_jsonl(const std::vector<Region> &regions, std::ostream &out);

} // namespace hlcmon

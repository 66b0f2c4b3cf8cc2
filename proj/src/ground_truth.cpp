#include "hlcmon/ground_truth.hpp"

#include "garg_scan.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

namespace hlcmon
{
    HappenedBefore::HappenedBefore(const Trace &trace) : n_(trace.events.size()), words_((n_ + 63) / 64)
    {
        const auto &ev = trace.events;
        const ClockValue eps = trace.header.epsilon;
        TraceIndex idx(trace);

        // Nodes 0..n-1 are events; n+k is the union of the first k+1 events
        // in pt order together with their predecessors. Every event f then
        // needs one edge from the prefix node covering pt < pt(f) - eps.
        std::vector<std::size_t> by_pt(n_);
        std::iota(by_pt.begin(), by_pt.end(), std::size_t{0});
        std::stable_sort(by_pt.begin(), by_pt.end(), [&](auto a, auto b) { return ev[a].pt < ev[b].pt; });

        const std::size_t nodes = 2 * n_;
        std::vector<std::vector<std::size_t>> out(nodes);
        std::vector<std::size_t> indeg(nodes, 0);
        auto edge = [&](std::size_t u, std::size_t v)
        {
            out[u].push_back(v);
            ++indeg[v];
        };
        for (std::size_t k = 0; k < n_; ++k)
        {
            edge(by_pt[k], n_ + k);
            if (k > 0)
                edge(n_ + k - 1, n_ + k);
        }
        for (std::size_t f = 0; f < n_; ++f)
        {
            const Event &e = ev[f];
            if (idx.local_pos[f] > 0)
                edge(idx.by_proc[e.proc][idx.local_pos[f] - 1], f);
            if (e.kind == EventKind::Recv)
                edge(*idx.peer[f], f);
            if (e.pt > eps)
            {
                // count of events with pt + eps < pt(f)
                auto it = std::lower_bound(by_pt.begin(), by_pt.end(), e.pt - eps,
                                           [&](std::size_t a, ClockValue v) { return ev[a].pt < v; });
                const auto m = static_cast<std::size_t>(it - by_pt.begin());
                if (m > 0)
                    edge(n_ + m - 1, f);
            }
        }

        std::vector<std::uint64_t> bits(nodes * words_, 0);
        std::vector<std::size_t> ready;
        for (std::size_t u = 0; u < nodes; ++u)
            if (indeg[u] == 0)
                ready.push_back(u);
        std::size_t done = 0;
        while (!ready.empty())
        {
            const std::size_t u = ready.back();
            ready.pop_back();
            ++done;
            const std::uint64_t *src = &bits[u * words_];
            for (std::size_t v : out[u])
            {
                std::uint64_t *dst = &bits[v * words_];
                for (std::size_t w = 0; w < words_; ++w)
                    dst[w] |= src[w];
                if (u < n_)
                    dst[u / 64] |= std::uint64_t{1} << (u % 64);
                if (--indeg[v] == 0)
                    ready.push_back(v);
            }
        }
        if (done != nodes)
            throw Error("happened-before has a cycle: the trace is not a valid execution");
        bits.resize(n_ * words_);
        bits.shrink_to_fit();
        rows_ = std::move(bits);
    }

    bool happened_before(const Trace &trace, std::size_t e, std::size_t f)
    {
        return HappenedBefore(trace)(e, f);
    }

    CausalIndex::CausalIndex(const Trace &trace)
        : trace_(&trace), n_(trace.header.n), epsilon_(trace.header.epsilon)
    {
        const auto &ev = trace.events;
        const std::size_t m = ev.size();
        TraceIndex idx(trace);
        known_.assign(m * n_, 0);
        local_pos_.resize(m);
        fmin_.resize(m);
        kmax_.resize(m);
        for (std::size_t i = 0; i < m; ++i)
        {
            const Event &e = ev[i];
            local_pos_[i] = static_cast<std::uint32_t>(idx.local_pos[i]);
            std::uint32_t *row = &known_[i * n_];
            kmax_[i] = e.pt;
            if (idx.local_pos[i] > 0)
            {
                const std::size_t prev = idx.by_proc[e.proc][idx.local_pos[i] - 1];
                std::copy_n(&known_[prev * n_], n_, row);
                kmax_[i] = std::max(kmax_[i], kmax_[prev]);
            }
            if (e.kind == EventKind::Recv)
            {
                const std::size_t s = *idx.peer[i];
                const std::uint32_t *srow = &known_[s * n_];
                for (std::size_t p = 0; p < n_; ++p)
                    row[p] = std::max(row[p], srow[p]);
                kmax_[i] = std::max(kmax_[i], kmax_[s]);
            }
            row[e.proc] = local_pos_[i] + 1;
        }
        for (std::size_t i = m; i-- > 0;)
        {
            const Event &e = ev[i];
            fmin_[i] = e.pt;
            const auto &list = idx.by_proc[e.proc];
            if (idx.local_pos[i] + 1 < list.size())
                fmin_[i] = std::min(fmin_[i], fmin_[list[idx.local_pos[i] + 1]]);
            if (e.kind == EventKind::Send && idx.peer[i])
                fmin_[i] = std::min(fmin_[i], fmin_[*idx.peer[i]]);
        }
    }

    bool CausalIndex::operator()(std::size_t e, std::size_t f) const
    {
        if (e == f)
            return false;
        const ProcessId p = trace_->events[e].proc;
        if (known_[f * n_ + p] > local_pos_[e])
            return true;
        return fmin_[e] + epsilon_ < kmax_[f];
    }

    namespace
    {
        struct Timeline
        {
            ProcessId proc;
            IntervalList intervals;
            std::vector<std::optional<HlcTimestamp>> ext_end;
        };

        std::vector<Timeline> conjunctive_timelines(const Trace &trace, const std::vector<VarRef> &vars)
        {
            std::set<ProcessId> seen;
            for (const auto &v : vars)
                if (!seen.insert(v.proc).second)
                    throw UnsupportedPredicate("conjunctive ground truth needs one variable per process");
            const ClockConfig cfg{trace.header.c_max, trace.header.epsilon};
            std::map<std::string, std::vector<IntervalList>> by_var;
            std::vector<Timeline> out;
            for (const auto &v : vars)
            {
                auto it = by_var.find(v.var);
                if (it == by_var.end())
                    it = by_var.emplace(v.var, true_intervals(extract_intervals(trace, v.var))).first;
                Timeline tl{v.proc, it->second.at(v.proc), {}};
                for (const auto &iv : tl.intervals)
                    tl.ext_end.push_back(iv.end ? std::optional(hlc_extend(*iv.end, cfg.epsilon, cfg)) : std::nullopt);
                out.push_back(std::move(tl));
            }
            return out;
        }

        std::vector<Snapshot> sweep(const std::vector<Timeline> &tls, const CausalIndex &hb)
        {
            std::vector<std::vector<HlcTimestamp>> starts;
            std::vector<std::vector<std::optional<HlcTimestamp>>> ends;
            for (const auto &tl : tls)
            {
                auto &s = starts.emplace_back();
                for (const auto &iv : tl.intervals)
                    s.push_back(iv.start);
                ends.push_back(tl.ext_end);
            }
            auto before = [&](std::size_t a, std::size_t ia, std::size_t b, std::size_t ib)
            {
                const Interval &x = tls[a].intervals[ia];
                return x.end_event && hb(*x.end_event, tls[b].intervals[ib].start_event);
            };
            std::vector<Snapshot> out;
            for (auto &w : detail::garg_scan(starts, ends, before))
            {
                Snapshot s;
                for (std::size_t k = 0; k < tls.size(); ++k)
                    s.members.emplace_back(tls[k].proc, w.heads[k]);
                s.witness = w.point;
                s.region = Region{w.point, std::nullopt};
                bool open = false;
                for (std::size_t k = 0; k < tls.size(); ++k)
                {
                    s.region.start = std::min(s.region.start, tls[k].intervals[w.heads[k]].start);
                    const auto &e = tls[k].ext_end[w.heads[k]];
                    if (!e)
                        open = true;
                    else if (!s.region.end || *s.region.end < *e)
                        s.region.end = e;
                }
                if (open)
                    s.region.end.reset();
                out.push_back(std::move(s));
            }
            return out;
        }

        const Conjunctive &require_conjunctive(const Predicate &pred)
        {
            const auto *c = std::get_if<Conjunctive>(&pred);
            if (!c)
                throw UnsupportedPredicate("ground truth snapshots support conjunctive predicates only");
            return *c;
        }

        nlohmann::ordered_json ts_json(const HlcTimestamp &t)
        {
            return nlohmann::ordered_json{{"l", t.l}, {"c", t.c}};
        }

        nlohmann::ordered_json region_json(const Region &r)
        {
            nlohmann::ordered_json j;
            j["start"] = ts_json(r.start);
            j["end"] = r.end ? ts_json(*r.end) : nlohmann::ordered_json(nullptr);
            return j;
        }
    } // namespace

    std::vector<Snapshot> detect_all_valid(const Trace &trace, const CausalIndex &hb, const Predicate &pred)
    {
        const auto &conj = require_conjunctive(pred);
        validate(pred, trace.header.n);
        return sweep(conjunctive_timelines(trace, conj.vars), hb);
    }

    std::vector<Snapshot> detect_all_valid(const Trace &trace, const Predicate &pred)
    {
        require_conjunctive(pred);
        CausalIndex hb(trace);
        return detect_all_valid(trace, hb, pred);
    }

    std::vector<Region> ground_truth_regions(const Trace &trace, const Predicate &pred)
    {
        validate(pred, trace.header.n);
        CausalIndex hb(trace);
        std::vector<Region> regions;
        if (std::holds_alternative<Conjunctive>(pred))
        {
            for (auto &s : detect_all_valid(trace, hb, pred))
                regions.push_back(s.region);
            return regions;
        }
        const auto *sum = std::get_if<SumGreater>(&pred);
        if (!sum)
            throw UnsupportedPredicate("ground truth supports conjunctive and boolean sum>C predicates");

        const auto vars = referenced_vars(pred);
        for (const auto &e : trace.events)
            if (e.var_change && e.var_change->value != 0 && e.var_change->value != 1)
                for (const auto &v : vars)
                    if (v.proc == e.proc && v.var == e.var_change->name)
                        throw UnsupportedPredicate("sum>C ground truth needs 0/1 variables");

        if (sum->bound < 0)
            return {Region{HlcTimestamp{0, 0}, std::nullopt}};
        const auto k = static_cast<std::size_t>(sum->bound) + 1;
        if (k > vars.size())
            return {};

        // every subset of k variables, in lexicographic order
        std::vector<bool> pick(vars.size(), false);
        std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(k), true);
        do
        {
            Conjunctive sub;
            for (std::size_t i = 0; i < vars.size(); ++i)
                if (pick[i])
                    sub.vars.push_back(vars[i]);
            for (auto &s : detect_all_valid(trace, hb, Predicate{sub}))
                regions.push_back(s.region);
        } while (std::prev_permutation(pick.begin(), pick.end()));
        std::stable_sort(regions.begin(), regions.end(), [](const Region &x, const Region &y) { return x.start < y.start; });
        return regions;
    }

    void write_snapshots_jsonl(const std::vector<Snapshot> &snaps, std::ostream &out)
    {
        for (const auto &s : snaps)
        {
            nlohmann::ordered_json j;
            j["members"] = nlohmann::ordered_json::array();
            for (auto [p, i] : s.members)
                j["members"].push_back({p, i});
            j["witness"] = ts_json(s.witness);
            j["region"] = region_json(s.region);
            out << j.dump() << '\n';
        }
    }

    void write_regions_jsonl(const std::vector<Region> &regions, std::ostream &out)
    {
        for (const auto &r : regions)
            out << region_json(r).dump() << '\n';
    }

} // namespace hlcmon

#include "hlcmon/pipeline.hpp"

#include <algorithm>
#include <chrono>

namespace hlcmon
{
    std::string_view to_string(Mode m) noexcept
    {
        return m == Mode::TwoLayer ? "two_layer" : "single_layer";
    }

    Mode parse_mode(std::string_view text)
    {
        if (text == "two_layer" || text == "two-layer")
            return Mode::TwoLayer;
        if (text == "single_layer" || text == "single-layer")
            return Mode::SingleLayer;
        throw Error("unknown mode '" + std::string(text) + "' (expected two_layer or single_layer)");
    }

    void PipelineConfig::validate() const
    {
        if (batch_size == 0)
            throw Error("pipeline config: batch size must be positive");
    }

    namespace
    {
        using Clock = std::chrono::steady_clock;

        double ms_since(Clock::time_point t0)
        {
            return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        }

        /// Intervals that could be live somewhere in l-units [lo_l, hi_l].
        IntervalList slice(const IntervalList &tl, ClockValue lo_l, ClockValue hi_l, const MonitorConfig &mc)
        {
            const ClockConfig clock{mc.c_max, mc.epsilon};
            IntervalList out;
            const HlcTimestamp lo{lo_l, 0};
            for (const auto &iv : tl)
            {
                if (iv.start.l > hi_l)
                    break;
                if (iv.end && hlc_extend(*iv.end, mc.gamma, clock) <= lo)
                    continue;
                out.push_back(iv);
            }
            return out;
        }

        const Interval *interval_at(const IntervalList &tl, const HlcTimestamp &t)
        {
            auto it = std::upper_bound(tl.begin(), tl.end(), t, [](const HlcTimestamp &x, const Interval &iv) { return x < iv.start; });
            if (it == tl.begin())
                return nullptr;
            --it;
            return (!it->end || t < *it->end) ? &*it : nullptr;
        }
    } // namespace

    std::vector<Region> detection_regions(const std::vector<Detection> &dets)
    {
        std::vector<Region> out;
        out.reserve(dets.size());
        for (const auto &d : dets)
            out.push_back(d.region);
        return out;
    }

    Region witness_region(const ConstraintSet &cs, const Witness &w, const WindowBuilder &builder)
    {
        std::vector<bool> use(cs.vars.size(), true);
        if (std::holds_alternative<SumGreater>(cs.predicate))
        {
            // only the variables carrying the sum
            for (std::size_t v = 0; v < use.size(); ++v)
                use[v] = w.values[v] != 0;
            if (std::none_of(use.begin(), use.end(), [](bool b) { return b; }))
                use.assign(use.size(), true);
        }
        const ClockConfig clock{cs.c_max, cs.epsilon};
        std::optional<Region> r;
        bool open = false;
        for (std::size_t v = 0; v < cs.vars.size(); ++v)
        {
            if (!use[v])
                continue;
            const Interval *iv = interval_at(builder.timeline(v), w.cut[cs.vars[v].proc]);
            if (!iv)
                continue;
            if (!r)
                r = Region{iv->start, std::nullopt};
            r->start = std::min(r->start, iv->start);
            if (!iv->end)
                open = true;
            else if (const auto e = hlc_extend(*iv->end, cs.epsilon, clock); !r->end || *r->end < e)
                r->end = e;
        }
        if (!r)
            return Region{HlcTimestamp{0, 0}, std::nullopt};
        if (open)
            r->end.reset();
        return *r;
    }

    RunReport run_two_layer(const Trace &trace, const PipelineConfig &cfg)
    {
        cfg.validate();
        RunReport rep;
        rep.mode = cfg.mode;
        rep.gamma = cfg.gamma;
        rep.batch_size = cfg.batch_size;
        rep.layout = WindowLayout::for_trace(trace, cfg.window_width);
        const WindowBuilder builder(trace, rep.layout, cfg.predicate);

        MonitorConfig mc;
        mc.gamma = cfg.gamma;
        mc.epsilon = trace.header.epsilon;
        mc.c_max = trace.header.c_max;
        mc.allow_gamma_above_epsilon = cfg.allow_gamma_above_epsilon;
        mc.validate();

        const std::size_t nvars = builder.vars().size();
        std::vector<IntervalList> timelines;
        for (std::size_t v = 0; v < nvars; ++v)
            timelines.push_back(builder.timeline(v));
        rep.layer1 = detect(timelines, cfg.predicate, mc);

        const WindowLayout &layout = rep.layout;
        for (std::size_t first = 0, b = 0; first < layout.count; first += cfg.batch_size, ++b)
        {
            BatchReport br;
            br.index = b;
            br.first_window = first;
            br.last_window = std::min(layout.count, first + cfg.batch_size) - 1;

            auto t1 = Clock::now();
            std::vector<IntervalList> part;
            for (const auto &tl : timelines)
                part.push_back(slice(tl, layout.lo(br.first_window), layout.hi(br.last_window), mc));
            const auto found = possible_regions(part, cfg.predicate, mc);
            const auto marked = mark_windows(found, layout, br.first_window, br.last_window);
            br.layer1_ms = ms_since(t1);
            br.marked = marked.size();
            rep.marked.insert(rep.marked.end(), marked.begin(), marked.end());

            std::vector<std::size_t> todo;
            if (cfg.mode == Mode::TwoLayer)
                todo = marked;
            else
                for (std::size_t k = br.first_window; k <= br.last_window; ++k)
                    todo.push_back(k);

            auto t2 = Clock::now();
            for (std::size_t k : todo)
            {
                const ConstraintSet cs = builder.build(k);
                ++br.solver_calls;
                if (auto w = solve(cs))
                {
                    ++br.confirmed;
                    Region region = witness_region(cs, *w, builder);
                    rep.confirmed.push_back(Confirmed{k, std::move(*w), region});
                }
            }
            br.layer2_ms = ms_since(t2);

            rep.solver_calls += br.solver_calls;
            rep.layer1_ms += br.layer1_ms;
            rep.layer2_ms += br.layer2_ms;
            rep.batches.push_back(br);
        }

        std::vector<Region> regions;
        for (const auto &c : rep.confirmed)
            regions.push_back(c.region);
        rep.confirmed_regions = merge_regions(std::move(regions));
        return rep;
    }

    namespace
    {
        bool starts_before(const Region &a, const Region &b) { return a.start < b.start; }

        /// Regions sorted by start with a running maximum of their ends, for
        /// "does anything overlap q" queries.
        class OverlapIndex
        {
        public:
            explicit OverlapIndex(const std::vector<Region> &sorted) : regions_(sorted)
            {
                std::optional<HlcTimestamp> run{HlcTimestamp{0, 0}};
                bool unbounded = false;
                for (const auto &r : sorted)
                {
                    if (!r.end)
                        unbounded = true;
                    else if (!unbounded && *r.end > *run)
                        run = r.end;
                    max_end_.push_back(unbounded ? std::nullopt : run);
                }
            }

            bool any(const Region &q) const
            {
                if (q.empty())
                    return false;
                // regions starting before q ends
                auto it = q.end ? std::lower_bound(regions_.begin(), regions_.end(), *q.end,
                                                   [](const Region &r, const HlcTimestamp &t) { return r.start < t; })
                                : regions_.end();
                const auto n = static_cast<std::size_t>(it - regions_.begin());
                if (n == 0)
                    return false;
                const auto &e = max_end_[n - 1];
                return !e || q.start < *e;
            }

        private:
            const std::vector<Region> &regions_;
            std::vector<std::optional<HlcTimestamp>> max_end_;
        };
    } // namespace

    Score score(std::vector<Region> reported, std::vector<Region> truth)
    {
        std::erase_if(reported, [](const Region &r) { return r.empty(); });
        std::erase_if(truth, [](const Region &r) { return r.empty(); });
        std::stable_sort(reported.begin(), reported.end(), starts_before);
        std::stable_sort(truth.begin(), truth.end(), starts_before);

        Score s;
        const OverlapIndex truth_idx(truth), reported_idx(reported);
        for (const auto &r : reported)
            if (!truth_idx.any(r))
                ++s.fp;
        for (const auto &t : truth)
            if (!reported_idx.any(t))
                ++s.fn;

        std::vector<bool> taken(truth.size(), false);
        std::size_t from = 0;
        for (const auto &r : reported)
        {
            while (from < truth.size() && (taken[from] || (truth[from].end && *truth[from].end <= r.start)))
                ++from;
            for (std::size_t j = from; j < truth.size(); ++j)
            {
                if (r.end && !(truth[j].start < *r.end))
                    break;
                if (!taken[j] && overlaps(r, truth[j]))
                {
                    taken[j] = true;
                    ++s.tp;
                    break;
                }
            }
        }
        if (s.tp + s.fp > 0)
            s.precision = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp);
        if (s.tp + s.fn > 0)
            s.recall = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fn);
        return s;
    }

    namespace
    {
        nlohmann::ordered_json ts_json(const HlcTimestamp &t) { return {{"l", t.l}, {"c", t.c}}; }

        nlohmann::ordered_json region_json(const Region &r)
        {
            return {{"start", ts_json(r.start)}, {"end", r.end ? ts_json(*r.end) : nlohmann::ordered_json(nullptr)}};
        }

        nlohmann::ordered_json ms(double v, bool include)
        {
            return include ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
        }
    } // namespace

    nlohmann::ordered_json to_json(const RunReport &r, bool include_timing)
    {
        nlohmann::ordered_json j;
        j["mode"] = to_string(r.mode);
        j["gamma"] = r.gamma;
        j["epsilon"] = r.layout.epsilon;
        j["window_width"] = r.layout.width;
        j["batch_size"] = r.batch_size;
        j["total_windows"] = r.layout.count;
        j["marked_windows"] = r.marked.size();
        j["solver_calls"] = r.solver_calls;
        j["layer1_detections"] = r.layer1.size();
        j["confirmed_windows"] = r.confirmed.size();
        j["confirmed_regions"] = r.confirmed_regions.size();
        j["layer1_ms"] = ms(r.layer1_ms, include_timing);
        j["layer2_ms"] = ms(r.layer2_ms, include_timing);
        auto &batches = j["batches"] = nlohmann::ordered_json::array();
        for (const auto &b : r.batches)
            batches.push_back({{"index", b.index},
                               {"first_window", b.first_window},
                               {"last_window", b.last_window},
                               {"marked", b.marked},
                               {"solver_calls", b.solver_calls},
                               {"confirmed", b.confirmed},
                               {"layer1_ms", ms(b.layer1_ms, include_timing)},
                               {"layer2_ms", ms(b.layer2_ms, include_timing)}});
        auto &conf = j["confirmed"] = nlohmann::ordered_json::array();
        for (const auto &c : r.confirmed)
        {
            nlohmann::ordered_json cut = nlohmann::ordered_json::array();
            for (const auto &t : c.witness.cut)
                cut.push_back(ts_json(t));
            conf.push_back({{"window", c.window}, {"cut", cut}, {"values", c.witness.values}, {"region", region_json(c.region)}});
        }
        return j;
    }

} // namespace hlcmon

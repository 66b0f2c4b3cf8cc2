#include "hlcmon/monitor_gamma.hpp"

#include "hlcmon/window_checker.hpp"

#include "garg_scan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

namespace hlcmon
{
    void MonitorConfig::validate() const
    {
        if (c_max < 1)
            throw Error("monitor config: c_max must be >= 1");
        if (gamma > epsilon && !allow_gamma_above_epsilon)
            throw Error("monitor config: gamma (" + std::to_string(gamma) + ") exceeds epsilon (" +
                        std::to_string(epsilon) + ")");
    }

    ClockValue gamma_from_fraction(double fraction, ClockValue epsilon)
    {
        if (!(fraction >= 0.0))
            throw Error("gamma fraction must be non-negative");
        return static_cast<ClockValue>(std::floor(fraction * static_cast<double>(epsilon)));
    }

    std::vector<ExtendedInterval> gamma_extend(const IntervalList &timeline, const MonitorConfig &cfg)
    {
        const ClockConfig clock{cfg.c_max, cfg.epsilon};
        std::vector<ExtendedInterval> out;
        out.reserve(timeline.size());
        for (const auto &iv : timeline)
            out.push_back(ExtendedInterval{iv, iv.end ? std::optional(hlc_extend(*iv.end, cfg.gamma, clock)) : std::nullopt});
        return out;
    }

    namespace
    {
        /// Walks the segments between consecutive interval boundaries of
        /// several extended timelines, keeping per timeline the contiguous
        /// index range [lo, hi) of intervals live at the segment start.
        class Sweep
        {
        public:
            explicit Sweep(const std::vector<std::vector<ExtendedInterval>> &ext)
                : ext_(ext), lo_(ext.size(), 0), hi_(ext.size(), 0)
            {
                for (const auto &tl : ext)
                    for (const auto &x : tl)
                    {
                        points_.push_back(x.base.start);
                        if (x.ext_end)
                            points_.push_back(*x.ext_end);
                    }
                std::sort(points_.begin(), points_.end());
                points_.erase(std::unique(points_.begin(), points_.end()), points_.end());
            }

            std::size_t segments() const { return points_.size(); }

            /// Moves to segment x; segments must be visited in order.
            void seek(std::size_t x)
            {
                const HlcTimestamp t = points_[x];
                for (std::size_t k = 0; k < ext_.size(); ++k)
                {
                    const auto &tl = ext_[k];
                    while (hi_[k] < tl.size() && tl[hi_[k]].base.start <= t)
                        ++hi_[k];
                    while (lo_[k] < tl.size() && tl[lo_[k]].ext_end && *tl[lo_[k]].ext_end <= t)
                        ++lo_[k];
                }
            }

            HlcTimestamp start(std::size_t x) const { return points_[x]; }
            std::optional<HlcTimestamp> end(std::size_t x) const
            {
                return x + 1 < points_.size() ? std::optional(points_[x + 1]) : std::nullopt;
            }
            std::size_t lo(std::size_t k) const { return lo_[k]; }
            std::size_t hi(std::size_t k) const { return hi_[k]; }

        private:
            const std::vector<std::vector<ExtendedInterval>> &ext_;
            std::vector<HlcTimestamp> points_;
            std::vector<std::size_t> lo_, hi_;
        };

        struct Bounds
        {
            Value min = std::numeric_limits<Value>::max();
            Value max = std::numeric_limits<Value>::min();
            bool any_nonzero = false;
            bool empty = true;
        };
    } // namespace

    std::vector<ValueZone> value_zones(const std::vector<ExtendedInterval> &ext)
    {
        std::vector<std::vector<ExtendedInterval>> one{ext};
        Sweep sw(one);
        std::vector<ValueZone> out;
        bool open = false;
        for (std::size_t x = 0; x < sw.segments(); ++x)
        {
            sw.seek(x);
            std::vector<Value> vals;
            for (std::size_t i = sw.lo(0); i < sw.hi(0); ++i)
                vals.push_back(ext[i].base.value);
            std::sort(vals.begin(), vals.end());
            vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
            const bool multi = vals.size() > 1;
            if (multi && open && out.back().values == vals)
                out.back().region.end = sw.end(x);
            else if (multi)
                out.push_back(ValueZone{Region{sw.start(x), sw.end(x)}, vals});
            open = multi;
        }
        return out;
    }

    namespace
    {
        /// Same scan as the exact detector, with "entirely before" meaning the
        /// extended end is no later than the other interval's start.
        std::vector<Detection> detect_conjunctive(const std::vector<std::vector<ExtendedInterval>> &ext)
        {
            const std::size_t m = ext.size();
            std::vector<std::vector<std::size_t>> index(m);
            std::vector<std::vector<HlcTimestamp>> starts(m);
            std::vector<std::vector<std::optional<HlcTimestamp>>> ends(m);
            for (std::size_t k = 0; k < m; ++k)
                for (std::size_t i = 0; i < ext[k].size(); ++i)
                    if (ext[k][i].base.value != 0)
                    {
                        index[k].push_back(i);
                        starts[k].push_back(ext[k][i].base.start);
                        ends[k].push_back(ext[k][i].ext_end);
                    }
            auto before = [&](std::size_t a, std::size_t i, std::size_t b, std::size_t j)
            { return ends[a][i] && *ends[a][i] <= starts[b][j]; };

            std::vector<Detection> out;
            for (const auto &w : detail::garg_scan(starts, ends, before))
            {
                Detection d{Region{w.point, w.end}, std::vector<std::vector<std::size_t>>(m)};
                for (std::size_t k = 0; k < m; ++k)
                    d.contributors[k].push_back(index[k][w.heads[k]]);
                out.push_back(std::move(d));
            }
            return out;
        }

        std::vector<std::vector<ExtendedInterval>> extend_all(const std::vector<IntervalList> &timelines,
                                                              const Predicate &pred, const MonitorConfig &cfg)
        {
            cfg.validate();
            if (timelines.size() != referenced_vars(pred).size())
                throw Error("detect: expected one timeline per predicate variable");
            std::vector<std::vector<ExtendedInterval>> ext;
            for (const auto &tl : timelines)
                ext.push_back(gamma_extend(tl, cfg));
            return ext;
        }
    } // namespace

    std::vector<Detection> detect(const std::vector<IntervalList> &timelines, const Predicate &pred,
                                  const MonitorConfig &cfg)
    {
        auto ext = extend_all(timelines, pred, cfg);
        if (std::holds_alternative<Conjunctive>(pred))
            return detect_conjunctive(ext);
        return possible_regions(ext, pred);
    }

    std::vector<Detection> possible_regions(const std::vector<IntervalList> &timelines, const Predicate &pred,
                                            const MonitorConfig &cfg)
    {
        return possible_regions(extend_all(timelines, pred, cfg), pred);
    }

    std::vector<Detection> possible_regions(const std::vector<std::vector<ExtendedInterval>> &ext, const Predicate &pred)
    {
        const std::size_t m = ext.size();
        const bool conj = std::holds_alternative<Conjunctive>(pred);
        std::vector<Bounds> b(m);

        auto holds = [&]() -> bool
        {
            for (const auto &x : b)
                if (x.empty)
                    return false;
            return std::visit(
                [&](const auto &form) -> bool
                {
                    using T = std::decay_t<decltype(form)>;
                    if constexpr (std::is_same_v<T, Conjunctive>)
                        return std::all_of(b.begin(), b.end(), [](const Bounds &x) { return x.any_nonzero; });
                    else if constexpr (std::is_same_v<T, SumGreater>)
                    {
                        Value s = 0;
                        for (const auto &x : b)
                            s += x.max;
                        return s > form.bound;
                    }
                    else if constexpr (std::is_same_v<T, SumLess>)
                    {
                        Value s = 0;
                        for (const auto &x : b)
                            s += x.min;
                        return s < form.bound;
                    }
                    else
                        return m == 2 && b[0].min < b[1].max;
                },
                pred);
        };

        Sweep sw(ext);
        std::vector<Detection> out;
        std::vector<std::size_t> first(m), last(m);
        bool open = false;
        auto close = [&]()
        {
            auto &d = out.back();
            d.contributors.assign(m, {});
            for (std::size_t k = 0; k < m; ++k)
                for (std::size_t i = first[k]; i < last[k]; ++i)
                    if (!conj || ext[k][i].base.value != 0)
                        d.contributors[k].push_back(i);
        };
        for (std::size_t x = 0; x < sw.segments(); ++x)
        {
            sw.seek(x);
            for (std::size_t k = 0; k < m; ++k)
            {
                b[k] = Bounds{};
                for (std::size_t i = sw.lo(k); i < sw.hi(k); ++i)
                {
                    const Value v = ext[k][i].base.value;
                    b[k].min = std::min(b[k].min, v);
                    b[k].max = std::max(b[k].max, v);
                    b[k].any_nonzero = b[k].any_nonzero || v != 0;
                    b[k].empty = false;
                }
            }
            const bool now = holds();
            if (now && !open)
            {
                out.push_back(Detection{Region{sw.start(x), std::nullopt}, {}});
                for (std::size_t k = 0; k < m; ++k)
                    first[k] = sw.lo(k);
            }
            if (now)
            {
                out.back().region.end = sw.end(x);
                for (std::size_t k = 0; k < m; ++k)
                    last[k] = sw.hi(k);
            }
            if (!now && open)
                close();
            open = now;
        }
        if (open)
            close();
        return out;
    }

    std::vector<Detection> detect(const Trace &trace, const Predicate &pred, const MonitorConfig &cfg)
    {
        validate(pred, trace.header.n);
        std::vector<IntervalList> timelines;
        for (const auto &v : referenced_vars(pred))
            timelines.push_back(value_timeline(trace, v));
        return detect(timelines, pred, cfg);
    }

    std::vector<std::size_t> mark_windows(const std::vector<Detection> &dets, const WindowLayout &layout,
                                          std::size_t first, std::size_t last)
    {
        std::vector<std::size_t> out;
        if (layout.count == 0 || first > last)
            return out;
        last = std::min(last, layout.count - 1);
        const ClockValue w = layout.width;
        for (const auto &d : dets)
        {
            if (d.region.empty())
                continue;
            const ClockValue s = d.region.start.l;
            std::size_t k_hi = last;
            if (d.region.end)
            {
                const HlcTimestamp e = *d.region.end;
                if (e.c == 0 && e.l == 0)
                    continue;
                const ClockValue e_l = e.c > 0 ? e.l : e.l - 1;
                k_hi = std::min<std::size_t>(last, static_cast<std::size_t>(e_l / w));
            }
            // smallest k with (k+1)w + eps >= s
            std::size_t k_lo = 0;
            if (s > w + layout.epsilon)
                k_lo = static_cast<std::size_t>((s - layout.epsilon - w + w - 1) / w);
            for (std::size_t k = std::max(k_lo, first); k <= k_hi; ++k)
                out.push_back(k);
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    std::vector<std::size_t> mark_windows(const std::vector<Detection> &dets, const WindowLayout &layout)
    {
        return layout.count ? mark_windows(dets, layout, 0, layout.count - 1) : std::vector<std::size_t>{};
    }

    void write_detections_jsonl(const std::vector<Detection> &dets, std::ostream &out)
    {
        auto ts = [](const HlcTimestamp &t) { return nlohmann::ordered_json{{"l", t.l}, {"c", t.c}}; };
        for (const auto &d : dets)
        {
            nlohmann::ordered_json j;
            j["start"] = ts(d.region.start);
            j["end"] = d.region.end ? ts(*d.region.end) : nlohmann::ordered_json(nullptr);
            j["contributors"] = d.contributors;
            out << j.dump() << '\n';
        }
    }

} // namespace hlcmon

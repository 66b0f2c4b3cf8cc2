#pragma once

// Witness enumeration shared by the exact detector and the HLC monitor. Both
// walk one queue of candidate intervals per process, discard a head whenever
// it is entirely before another head, and restart after each witness with
// the intervals that begin at or after the witness point.

#include "hlcmon/clock.hpp"

#include <algorithm>
#include <optional>
#include <vector>

namespace hlcmon::detail
{
    struct ScanWitness
    {
        std::vector<std::size_t> heads; // interval index per queue
        HlcTimestamp point;             // latest start among the heads
        std::optional<HlcTimestamp> end; // earliest (extended) end among the heads
    };

    /// starts[k] must be ascending. before(a, i, b, j): interval i of queue a
    /// lies entirely before interval j of queue b. ends[k][i] is the end used
    /// for the witness region.
    template <class Before>
    std::vector<ScanWitness> garg_scan(const std::vector<std::vector<HlcTimestamp>> &starts,
                                       const std::vector<std::vector<std::optional<HlcTimestamp>>> &ends,
                                       const Before &before)
    {
        std::vector<ScanWitness> out;
        const std::size_t m = starts.size();
        if (m == 0)
            return out;
        std::vector<std::size_t> head(m, 0);
        std::optional<HlcTimestamp> restart;
        bool strict = false;
        for (;;)
        {
            for (std::size_t k = 0; k < m; ++k)
            {
                const auto &s = starts[k];
                head[k] = !restart ? 0
                          : strict ? static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), *restart) - s.begin())
                                   : static_cast<std::size_t>(std::lower_bound(s.begin(), s.end(), *restart) - s.begin());
                if (head[k] >= s.size())
                    return out;
            }
            for (bool changed = true; changed;)
            {
                changed = false;
                for (std::size_t a = 0; a < m; ++a)
                    for (std::size_t b = 0; b < m; ++b)
                        if (a != b && before(a, head[a], b, head[b]))
                        {
                            if (++head[a] >= starts[a].size())
                                return out;
                            changed = true;
                        }
            }
            if (!out.empty() && out.back().heads == head)
            {
                // every head starts exactly at the last witness point
                strict = true;
                continue;
            }
            strict = false;
            ScanWitness w;
            w.heads = head;
            w.point = starts[0][head[0]];
            for (std::size_t k = 0; k < m; ++k)
            {
                w.point = std::max(w.point, starts[k][head[k]]);
                const auto &e = ends[k][head[k]];
                if (e && (!w.end || *e < *w.end))
                    w.end = e;
            }
            restart = w.point;
            out.push_back(std::move(w));
        }
    }

} // namespace hlcmon::detail

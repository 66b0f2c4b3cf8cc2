#include "hlcmon/window_checker.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <map>
#include <sstream>

namespace hlcmon
{
    std::optional<Value> value_at(const ConstraintSet &cs, std::size_t var, const HlcTimestamp &t)
    {
        std::optional<Value> v;
        for (const auto &val : cs.valuations)
        {
            if (val.var != var || t < val.from || (val.to && !(t < *val.to)))
                continue;
            if (v && *v != val.value)
                return std::nullopt;
            v = val.value;
        }
        return v;
    }

    namespace
    {
        bool implied(const Implication &imp, const std::vector<HlcTimestamp> &cut)
        {
            return !(cut[imp.later_proc] >= imp.later_ts) || cut[imp.earlier_proc] >= imp.earlier_ts;
        }
    } // namespace

    bool satisfies(const ConstraintSet &cs, const std::vector<HlcTimestamp> &cut)
    {
        if (cut.size() != cs.n)
            return false;
        ClockValue lmin = cs.hi.l, lmax = cs.lo.l;
        for (const auto &t : cut)
        {
            if (t < cs.lo || cs.hi < t || t.c > cs.c_max)
                return false;
            lmin = std::min(lmin, t.l);
            lmax = std::max(lmax, t.l);
        }
        if (lmax - lmin > cs.epsilon)
            return false;
        for (const auto *list : {&cs.messages, &cs.clock_order})
            for (const auto &imp : *list)
                if (!implied(imp, cut))
                    return false;
        std::vector<Value> values;
        for (std::size_t v = 0; v < cs.vars.size(); ++v)
        {
            auto x = value_at(cs, v, cut[cs.vars[v].proc]);
            if (!x)
                return false;
            values.push_back(*x);
        }
        return evaluate(cs.predicate, values);
    }

    namespace
    {
        constexpr std::size_t kNone = static_cast<std::size_t>(-1);

        /// The window cut into pieces per process: between consecutive
        /// timestamps the constraints mention, every atom has a fixed truth
        /// value, so a cut is determined up to skew by one piece per process.
        class PieceModel
        {
        public:
            struct Piece
            {
                HlcTimestamp start;
                ClockValue lo_l;
                ClockValue hi_l;
                bool usable = true;
                std::vector<Value> values; // per var of this process, in vars_of order
            };

            struct Trigger
            {
                std::size_t later_piece;
                ProcessId earlier;
                std::size_t earlier_piece; // kNone: the target is unreachable
            };

            explicit PieceModel(const ConstraintSet &cs) : cs_(cs), pieces_(cs.n), vars_of_(cs.n), by_later_(cs.n)
            {
                std::vector<std::vector<HlcTimestamp>> marks(cs.n);
                auto mark = [&](ProcessId p, const HlcTimestamp &t)
                {
                    if (cs.lo < t && t <= cs.hi)
                        marks[p].push_back(t);
                };
                for (const auto &v : cs.valuations)
                {
                    mark(v.proc, v.from);
                    if (v.to)
                        mark(v.proc, *v.to);
                }
                for (const auto *list : {&cs.messages, &cs.clock_order})
                    for (const auto &imp : *list)
                    {
                        mark(imp.later_proc, imp.later_ts);
                        mark(imp.earlier_proc, imp.earlier_ts);
                    }
                for (std::size_t v = 0; v < cs.vars.size(); ++v)
                    vars_of_.at(cs.vars[v].proc).push_back(v);

                for (ProcessId p = 0; p < cs.n; ++p)
                {
                    auto &m = marks[p];
                    m.push_back(cs.lo);
                    std::sort(m.begin(), m.end());
                    m.erase(std::unique(m.begin(), m.end()), m.end());
                    for (std::size_t j = 0; j < m.size(); ++j)
                    {
                        Piece pc;
                        pc.start = m[j];
                        pc.lo_l = m[j].l;
                        if (j + 1 < m.size())
                            pc.hi_l = m[j + 1].c > 0 ? m[j + 1].l : m[j + 1].l - 1;
                        else
                            pc.hi_l = cs.hi.l;
                        for (std::size_t v : vars_of_[p])
                        {
                            auto x = value_at(cs, v, pc.start);
                            if (!x)
                                pc.usable = false;
                            pc.values.push_back(x.value_or(0));
                        }
                        pieces_[p].push_back(std::move(pc));
                    }
                }

                cap_.assign(cs.n, kNone);
                for (const auto *list : {&cs.messages, &cs.clock_order})
                    for (const auto &imp : *list)
                    {
                        const std::size_t from = first_at_or_after(imp.later_proc, imp.later_ts);
                        if (from == kNone)
                            continue;
                        const std::size_t to = first_at_or_after(imp.earlier_proc, imp.earlier_ts);
                        if (to == 0)
                            continue;
                        if (to == kNone)
                            cap_[imp.later_proc] = std::min(cap_[imp.later_proc], from);
                        else
                            by_later_[imp.later_proc].push_back(Trigger{from, imp.earlier_proc, to});
                    }
            }

            std::size_t n() const { return cs_.n; }
            const std::vector<Piece> &pieces(ProcessId p) const { return pieces_[p]; }
            const std::vector<std::size_t> &vars_of(ProcessId p) const { return vars_of_[p]; }

            /// Least cut at or above `floor` using only pieces allowed by `ok`,
            /// or nullopt if none exists.
            template <class Allowed>
            std::optional<std::vector<std::size_t>> least(const Allowed &ok, std::vector<std::size_t> floor) const
            {
                const std::size_t n = cs_.n;
                std::vector<std::size_t> &cur = floor;
                auto next_ok = [&](ProcessId p, std::size_t from)
                {
                    const std::size_t limit = std::min(pieces_[p].size(), cap_[p]);
                    for (std::size_t j = from; j < limit; ++j)
                        if (pieces_[p][j].usable && ok(p, j))
                            return j;
                    return kNone;
                };
                std::deque<ProcessId> queue;
                std::vector<bool> queued(n, false);
                auto raise = [&](ProcessId p, std::size_t to)
                {
                    const std::size_t j = next_ok(p, to);
                    if (j == kNone)
                        return false;
                    cur[p] = j;
                    if (!queued[p])
                    {
                        queued[p] = true;
                        queue.push_back(p);
                    }
                    return true;
                };
                for (ProcessId p = 0; p < n; ++p)
                    if (!raise(p, cur[p]))
                        return std::nullopt;
                for (;;)
                {
                    while (!queue.empty())
                    {
                        const ProcessId p = queue.front();
                        queue.pop_front();
                        queued[p] = false;
                        for (const auto &t : by_later_[p])
                            if (cur[p] >= t.later_piece && cur[t.earlier] < t.earlier_piece)
                                if (!raise(t.earlier, t.earlier_piece))
                                    return std::nullopt;
                    }
                    ClockValue top = 0;
                    for (ProcessId p = 0; p < n; ++p)
                        top = std::max(top, pieces_[p][cur[p]].lo_l);
                    bool moved = false;
                    for (ProcessId p = 0; p < n; ++p)
                        if (pieces_[p][cur[p]].hi_l + cs_.epsilon < top)
                        {
                            if (!raise(p, cur[p] + 1))
                                return std::nullopt;
                            moved = true;
                        }
                    if (!moved)
                        return cur;
                }
            }

            Witness witness(const std::vector<std::size_t> &choice) const
            {
                ClockValue top = 0;
                for (ProcessId p = 0; p < cs_.n; ++p)
                    top = std::max(top, pieces_[p][choice[p]].lo_l);
                const ClockValue floor_l = top > cs_.epsilon ? top - cs_.epsilon : 0;
                Witness w;
                for (ProcessId p = 0; p < cs_.n; ++p)
                {
                    const Piece &pc = pieces_[p][choice[p]];
                    const ClockValue l = std::max(pc.lo_l, floor_l);
                    w.cut.push_back(HlcTimestamp{l, l == pc.start.l ? pc.start.c : 0});
                }
                w.values.assign(cs_.vars.size(), 0);
                for (ProcessId p = 0; p < cs_.n; ++p)
                    for (std::size_t k = 0; k < vars_of_[p].size(); ++k)
                        w.values[vars_of_[p][k]] = pieces_[p][choice[p]].values[k];
                return w;
            }

        private:
            std::size_t first_at_or_after(ProcessId p, const HlcTimestamp &t) const
            {
                if (t <= cs_.lo)
                    return 0;
                if (cs_.hi < t)
                    return kNone;
                const auto &ps = pieces_[p];
                auto it = std::lower_bound(ps.begin(), ps.end(), t, [](const Piece &pc, const HlcTimestamp &x) { return pc.start < x; });
                return static_cast<std::size_t>(it - ps.begin());
            }

            const ConstraintSet &cs_;
            std::vector<std::vector<Piece>> pieces_;
            std::vector<std::vector<std::size_t>> vars_of_;
            std::vector<std::vector<Trigger>> by_later_;
            std::vector<std::size_t> cap_;
        };

        bool boolean_values(const ConstraintSet &cs)
        {
            return std::all_of(cs.valuations.begin(), cs.valuations.end(),
                               [](const Valuation &v) { return v.value == 0 || v.value == 1; });
        }

        /// Least cut where every variable in `need` is nonzero.
        std::optional<Witness> solve_all_true(const PieceModel &pm, const ConstraintSet &cs, const std::vector<bool> &need)
        {
            auto ok = [&](ProcessId p, std::size_t j)
            {
                const auto &vs = pm.vars_of(p);
                const auto &pc = pm.pieces(p)[j];
                for (std::size_t k = 0; k < vs.size(); ++k)
                    if (need[vs[k]] && pc.values[k] == 0)
                        return false;
                return true;
            };
            auto cut = pm.least(ok, std::vector<std::size_t>(cs.n, 0));
            if (!cut)
                return std::nullopt;
            return pm.witness(*cut);
        }

        /// Depth-first search over the pieces of the processes the predicate
        /// reads; every leaf is completed (or refuted) by a least-cut search.
        std::optional<Witness> solve_search(const PieceModel &pm, const ConstraintSet &cs)
        {
            std::vector<ProcessId> order;
            for (ProcessId p = 0; p < cs.n; ++p)
                if (!pm.vars_of(p).empty())
                    order.push_back(p);
            std::vector<std::size_t> fixed(cs.n, kNone);
            std::vector<Value> values(cs.vars.size(), 0);

            std::optional<Witness> found;
            auto rec = [&](auto &&self, std::size_t depth, ClockValue top, ClockValue bottom) -> bool
            {
                if (depth == order.size())
                {
                    if (!evaluate(cs.predicate, values))
                        return false;
                    auto ok = [&](ProcessId p, std::size_t j) { return fixed[p] == kNone || fixed[p] == j; };
                    std::vector<std::size_t> floor(cs.n, 0);
                    for (ProcessId p = 0; p < cs.n; ++p)
                        if (fixed[p] != kNone)
                            floor[p] = fixed[p];
                    auto cut = pm.least(ok, floor);
                    if (!cut)
                        return false;
                    found = pm.witness(*cut);
                    return true;
                }
                const ProcessId p = order[depth];
                const auto &ps = pm.pieces(p);
                for (std::size_t j = 0; j < ps.size(); ++j)
                {
                    const auto &pc = ps[j];
                    if (!pc.usable)
                        continue;
                    const ClockValue t2 = std::max(top, pc.lo_l);
                    const ClockValue b2 = std::min(bottom, pc.hi_l);
                    if (t2 > b2 + cs.epsilon)
                        continue;
                    fixed[p] = j;
                    const auto &vs = pm.vars_of(p);
                    for (std::size_t k = 0; k < vs.size(); ++k)
                        values[vs[k]] = pc.values[k];
                    if (self(self, depth + 1, t2, b2))
                        return true;
                }
                fixed[p] = kNone;
                return false;
            };
            rec(rec, 0, cs.lo.l, cs.hi.l);
            return found;
        }
    } // namespace

    std::optional<Witness> solve(const ConstraintSet &cs)
    {
        if (cs.n == 0)
            return std::nullopt;
        for (std::size_t v = 0; v < cs.vars.size(); ++v)
            if (cs.vars[v].proc >= cs.n)
                throw UnsupportedPredicate("predicate references a process outside the window");
        PieceModel pm(cs);

        if (std::holds_alternative<Conjunctive>(cs.predicate))
            return solve_all_true(pm, cs, std::vector<bool>(cs.vars.size(), true));

        if (const auto *sum = std::get_if<SumGreater>(&cs.predicate); sum && boolean_values(cs))
        {
            // at least bound + 1 of the 0/1 variables are set: try each subset
            if (sum->bound < 0)
                return solve_all_true(pm, cs, std::vector<bool>(cs.vars.size(), false));
            const auto k = static_cast<std::size_t>(sum->bound) + 1;
            if (k > cs.vars.size())
                return std::nullopt;
            std::vector<bool> pick(cs.vars.size(), false);
            std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(k), true);
            do
            {
                if (auto w = solve_all_true(pm, cs, pick))
                    return w;
            } while (std::prev_permutation(pick.begin(), pick.end()));
            return std::nullopt;
        }
        return solve_search(pm, cs);
    }

    IntervalList value_timeline(const Trace &trace, const VarRef &ref)
    {
        IntervalList list = extract_intervals(trace, ref.var).at(ref.proc);
        const HlcTimestamp zero{0, 0};
        if (!list.empty() && list.front().start == zero)
            return list;
        Interval init;
        init.proc = ref.proc;
        init.var = ref.var;
        init.value = 0;
        init.start = zero;
        init.start_event = kNoEvent;
        if (!list.empty())
        {
            init.end = list.front().start;
            init.end_event = list.front().start_event;
            if (list.front().value == 0)
            {
                // the first recorded change restates the initial value
                list.front().start = zero;
                list.front().start_event = kNoEvent;
                return list;
            }
        }
        list.insert(list.begin(), std::move(init));
        return list;
    }

    WindowBuilder::WindowBuilder(const Trace &trace, WindowLayout layout, Predicate predicate)
        : trace_(&trace), index_(trace), layout_(layout), predicate_(std::move(predicate)),
          vars_(referenced_vars(predicate_))
    {
        validate(predicate_, trace.header.n);
        if (layout_.epsilon != trace.header.epsilon)
            throw Error("window layout epsilon does not match the trace");
        for (const auto &v : vars_)
            timelines_.push_back(value_timeline(trace, v));
    }

    ConstraintSet WindowBuilder::build(std::size_t k) const
    {
        if (k >= layout_.count)
            throw Error("window " + std::to_string(k) + " is outside the layout (" + std::to_string(layout_.count) +
                        " windows)");
        const Trace &t = *trace_;
        ConstraintSet cs;
        cs.window = k;
        cs.n = t.header.n;
        cs.epsilon = t.header.epsilon;
        cs.c_max = t.header.c_max;
        cs.lo = HlcTimestamp{layout_.lo(k), 0};
        cs.hi = HlcTimestamp{layout_.hi(k), t.header.c_max};
        cs.predicate = predicate_;
        cs.vars = vars_;

        for (std::size_t v = 0; v < vars_.size(); ++v)
            for (const auto &iv : timelines_[v])
            {
                if (cs.hi < iv.start || (iv.end && *iv.end <= cs.lo))
                    continue;
                Valuation val;
                val.proc = iv.proc;
                val.var = v;
                val.value = iv.value;
                val.from = std::max(iv.start, cs.lo);
                if (iv.end && *iv.end <= cs.hi)
                    val.to = iv.end;
                cs.valuations.push_back(val);
            }

        const auto &ev = t.events;
        for (ProcessId j = 0; j < cs.n; ++j)
        {
            const auto &mine = index_.by_proc[j];
            auto first = std::lower_bound(mine.begin(), mine.end(), cs.lo,
                                          [&](std::size_t i, const HlcTimestamp &x) { return ev[i].hlc < x; });
            std::vector<std::optional<std::size_t>> last_forced(cs.n);
            for (auto it = first; it != mine.end() && ev[*it].hlc <= cs.hi; ++it)
            {
                const Event &f = ev[*it];
                if (f.kind == EventKind::Recv)
                {
                    const Event &s = ev[*index_.peer[*it]];
                    cs.messages.push_back(Implication{j, f.hlc, s.proc, s.hlc});
                }
                if (f.pt <= cs.epsilon)
                    continue;
                for (ProcessId i = 0; i < cs.n; ++i)
                {
                    if (i == j)
                        continue;
                    const auto &theirs = index_.by_proc[i];
                    // last event on i with pt + eps < pt(f)
                    auto e = std::lower_bound(theirs.begin(), theirs.end(), f.pt - cs.epsilon,
                                              [&](std::size_t x, ClockValue v) { return ev[x].pt < v; });
                    if (e == theirs.begin())
                        continue;
                    const std::size_t target = *std::prev(e);
                    if (ev[target].hlc < cs.lo || cs.hi < ev[target].hlc || last_forced[i] == target)
                        continue;
                    last_forced[i] = target;
                    cs.clock_order.push_back(Implication{j, f.hlc, i, ev[target].hlc});
                }
            }
        }
        return cs;
    }

    ConstraintSet build_constraints(const Trace &trace, const WindowLayout &layout, std::size_t k,
                                    const Predicate &predicate)
    {
        return WindowBuilder(trace, layout, predicate).build(k);
    }

    namespace
    {
        std::string num(std::int64_t v)
        {
            return v < 0 ? "(- " + std::to_string(-v) + ")" : std::to_string(v);
        }
        std::string num(std::uint64_t v) { return std::to_string(v); }

        std::string l_of(ProcessId p) { return "l_" + std::to_string(p); }
        std::string c_of(ProcessId p) { return "c_" + std::to_string(p); }

        std::string geq(ProcessId p, const HlcTimestamp &t)
        {
            return "(or (> " + l_of(p) + " " + num(t.l) + ") (and (= " + l_of(p) + " " + num(t.l) + ") (>= " + c_of(p) +
                   " " + num(t.c) + ")))";
        }
        std::string lt(ProcessId p, const HlcTimestamp &t)
        {
            return "(or (< " + l_of(p) + " " + num(t.l) + ") (and (= " + l_of(p) + " " + num(t.l) + ") (< " + c_of(p) +
                   " " + num(t.c) + ")))";
        }
        std::string leq(ProcessId p, const HlcTimestamp &t)
        {
            return "(or (< " + l_of(p) + " " + num(t.l) + ") (and (= " + l_of(p) + " " + num(t.l) + ") (<= " + c_of(p) +
                   " " + num(t.c) + ")))";
        }

        std::string var_name(const VarRef &v)
        {
            std::string s = "x_";
            for (char ch : v.var)
                s += (std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_');
            return s + "_" + std::to_string(v.proc);
        }

        std::string sum_expr(const std::vector<std::string> &names)
        {
            if (names.size() == 1)
                return names[0];
            std::string s = "(+";
            for (const auto &x : names)
                s += " " + x;
            return s + ")";
        }
    } // namespace

    void emit_smtlib(const ConstraintSet &cs, std::ostream &out)
    {
        out << "; window " << cs.window << " span [" << cs.lo << ", " << cs.hi << "]\n";
        out << "(set-logic QF_LIA)\n";
        for (ProcessId p = 0; p < cs.n; ++p)
            out << "(declare-const " << l_of(p) << " Int)\n(declare-const " << c_of(p) << " Int)\n";
        std::vector<std::string> names;
        for (const auto &v : cs.vars)
        {
            names.push_back(var_name(v));
            out << "(declare-const " << names.back() << " Int)\n";
        }

        out << "; clock skew\n";
        for (ProcessId i = 0; i < cs.n; ++i)
            for (ProcessId j = i + 1; j < cs.n; ++j)
                out << "(assert (<= (- " << l_of(i) << " " << l_of(j) << ") " << num(cs.epsilon) << "))\n"
                    << "(assert (<= (- " << l_of(j) << " " << l_of(i) << ") " << num(cs.epsilon) << "))\n";

        out << "; window span\n";
        for (ProcessId p = 0; p < cs.n; ++p)
        {
            out << "(assert (and (>= " << c_of(p) << " 0) (<= " << c_of(p) << " " << num(cs.c_max) << ")))\n";
            out << "(assert " << geq(p, cs.lo) << ")\n";
            out << "(assert " << leq(p, cs.hi) << ")\n";
        }

        out << "; local values\n";
        for (const auto &v : cs.valuations)
        {
            std::string cond = geq(v.proc, v.from);
            if (v.to)
                cond = "(and " + cond + " " + lt(v.proc, *v.to) + ")";
            out << "(assert (=> " << cond << " (= " << names[v.var] << " " << num(v.value) << ")))\n";
        }

        out << "; messages\n";
        for (const auto &m : cs.messages)
            out << "(assert (=> " << geq(m.later_proc, m.later_ts) << " " << geq(m.earlier_proc, m.earlier_ts) << "))\n";
        out << "; clock order\n";
        for (const auto &m : cs.clock_order)
            out << "(assert (=> " << geq(m.later_proc, m.later_ts) << " " << geq(m.earlier_proc, m.earlier_ts) << "))\n";

        out << "; predicate\n";
        std::visit(
            [&](const auto &form)
            {
                using T = std::decay_t<decltype(form)>;
                if constexpr (std::is_same_v<T, Conjunctive>)
                {
                    out << "(assert (and";
                    for (const auto &x : names)
                        out << " (not (= " << x << " 0))";
                    out << "))\n";
                }
                else if constexpr (std::is_same_v<T, SumGreater>)
                    out << "(assert (> " << sum_expr(names) << " " << num(form.bound) << "))\n";
                else if constexpr (std::is_same_v<T, SumLess>)
                    out << "(assert (< " << sum_expr(names) << " " << num(form.bound) << "))\n";
                else if (form.lhs == form.rhs)
                    out << "(assert false)\n";
                else
                    out << "(assert (< " << names[0] << " " << names[1] << "))\n";
            },
            cs.predicate);
        out << "(check-sat)\n(get-model)\n";
    }

    std::string emit_smtlib(const ConstraintSet &cs)
    {
        std::ostringstream os;
        emit_smtlib(cs, os);
        return os.str();
    }

} // namespace hlcmon

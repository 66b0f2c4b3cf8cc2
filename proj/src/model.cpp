#include "hlcmon/model.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>

namespace hlcmon
{
    namespace
    {
        template <class... Ts>
        struct overloaded : Ts...
        {
            using Ts::operator()...;
        };

        void push_unique(std::vector<VarRef> &out, const VarRef &v)
        {
            if (std::find(out.begin(), out.end(), v) == out.end())
                out.push_back(v);
        }

        Value sum_of(const std::vector<Value> &values)
        {
            return std::accumulate(values.begin(), values.end(), Value{0});
        }

        Value parse_int(std::string_view s, std::string_view what)
        {
            Value v = 0;
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc{} || ptr != s.data() + s.size())
                throw UnsupportedPredicate("bad integer '" + std::string(s) + "' in " + std::string(what));
            return v;
        }

        std::vector<ProcessId> parse_procs(std::string_view s, std::string_view what)
        {
            std::vector<ProcessId> out;
            while (!s.empty())
            {
                auto comma = s.find(',');
                auto tok = s.substr(0, comma);
                const Value v = parse_int(tok, what);
                if (v < 0)
                    throw UnsupportedPredicate("negative process id in " + std::string(what));
                out.push_back(static_cast<ProcessId>(v));
                if (comma == std::string_view::npos)
                    break;
                s.remove_prefix(comma + 1);
            }
            return out;
        }

        std::vector<VarRef> all_procs(std::uint32_t n, std::string_view var)
        {
            std::vector<VarRef> out;
            for (ProcessId i = 0; i < n; ++i)
                out.push_back(VarRef{i, std::string(var)});
            return out;
        }

        std::string join(const std::vector<VarRef> &vars)
        {
            std::string s;
            for (std::size_t i = 0; i < vars.size(); ++i)
            {
                if (i)
                    s += ',';
                s += vars[i].var + "@" + std::to_string(vars[i].proc);
            }
            return s;
        }
    } // namespace

    std::vector<VarRef> referenced_vars(const Predicate &p)
    {
        std::vector<VarRef> out;
        std::visit(overloaded{
                       [&](const LessThan &lt)
                       {
                           push_unique(out, lt.lhs);
                           push_unique(out, lt.rhs);
                       },
                       [&](const auto &form)
                       {
                           for (const auto &v : form.vars)
                               push_unique(out, v);
                       },
                   },
                   p);
        return out;
    }

    bool evaluate(const Predicate &p, const std::vector<Value> &values)
    {
        return std::visit(overloaded{
                              [&](const Conjunctive &)
                              { return std::all_of(values.begin(), values.end(), [](Value v) { return v != 0; }); },
                              [&](const SumGreater &s) { return sum_of(values) > s.bound; },
                              [&](const SumLess &s) { return sum_of(values) < s.bound; },
                              [&](const LessThan &lt)
                              {
                                  // lhs == rhs collapses to a single variable.
                                  if (lt.lhs == lt.rhs)
                                      return false;
                                  return values.at(0) < values.at(1);
                              },
                          },
                          p);
    }

    void validate(const Predicate &p, std::uint32_t n)
    {
        const auto vars = referenced_vars(p);
        if (vars.empty())
            throw UnsupportedPredicate("predicate references no variables");
        for (const auto &v : vars)
            if (v.proc >= n)
                throw UnsupportedPredicate("predicate references process " + std::to_string(v.proc) +
                                           " but the trace has " + std::to_string(n));
    }

    Predicate parse_predicate(std::string_view text, std::uint32_t n, std::string_view var)
    {
        auto refs = [&](std::string_view procs)
        {
            std::vector<VarRef> out;
            for (ProcessId p : parse_procs(procs, text))
                out.push_back(VarRef{p, std::string(var)});
            return out;
        };
        Predicate p;
        if (text == "conj")
            p = Conjunctive{all_procs(n, var)};
        else if (text.starts_with("conj:"))
            p = Conjunctive{refs(text.substr(5))};
        else if (text.starts_with("sum>"))
            p = SumGreater{all_procs(n, var), parse_int(text.substr(4), text)};
        else if (text.starts_with("sum<"))
            p = SumLess{all_procs(n, var), parse_int(text.substr(4), text)};
        else if (text.starts_with("lt:"))
        {
            auto ids = parse_procs(text.substr(3), text);
            if (ids.size() != 2)
                throw UnsupportedPredicate("lt: expects two process ids");
            p = LessThan{VarRef{ids[0], std::string(var)}, VarRef{ids[1], std::string(var)}};
        }
        else
            throw UnsupportedPredicate("unknown predicate '" + std::string(text) + "'");
        validate(p, n);
        return p;
    }

    std::string describe(const Predicate &p)
    {
        return std::visit(overloaded{
                              [](const Conjunctive &c) { return "conj(" + join(c.vars) + ")"; },
                              [](const SumGreater &s) { return "sum(" + join(s.vars) + ")>" + std::to_string(s.bound); },
                              [](const SumLess &s) { return "sum(" + join(s.vars) + ")<" + std::to_string(s.bound); },
                              [](const LessThan &lt) { return "lt(" + join({lt.lhs, lt.rhs}) + ")"; },
                          },
                          p);
    }

    bool overlaps(const Region &a, const Region &b)
    {
        const bool a_before_b_end = !b.end || a.start < *b.end;
        const bool b_before_a_end = !a.end || b.start < *a.end;
        return a_before_b_end && b_before_a_end && !a.empty() && !b.empty();
    }

    std::vector<Region> merge_regions(std::vector<Region> regions)
    {
        std::erase_if(regions, [](const Region &r) { return r.empty(); });
        std::sort(regions.begin(), regions.end(), [](const Region &a, const Region &b) { return a.start < b.start; });
        std::vector<Region> out;
        for (auto &r : regions)
        {
            if (!out.empty())
            {
                Region &last = out.back();
                if (!last.end || r.start <= *last.end)
                {
                    if (last.end && (!r.end || *last.end < *r.end))
                        last.end = r.end;
                    continue;
                }
            }
            out.push_back(r);
        }
        return out;
    }

    WindowLayout WindowLayout::for_trace(const Trace &trace, ClockValue width)
    {
        WindowLayout layout;
        layout.epsilon = trace.header.epsilon;
        layout.width = width ? width : trace.header.epsilon;
        if (layout.width == 0)
            throw Error("window width must be positive (epsilon is 0; pass an explicit width)");
        ClockValue max_l = 0;
        for (const auto &e : trace.events)
            max_l = std::max(max_l, e.hlc.l);
        layout.count = trace.events.empty() ? 0 : static_cast<std::size_t>(max_l / layout.width) + 1;
        return layout;
    }

} // namespace hlcmon

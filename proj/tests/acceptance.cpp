// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "hlcmon/cli.hpp"
#include "hlcmon/ground_truth.hpp"
#include "hlcmon/monitor_gamma.hpp"
#include "hlcmon/pipeline.hpp"
#include "hlcmon/sim.hpp"
#include "hlcmon/window_checker.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace hlcmon;
namespace fs = std::filesystem;

namespace
{
    struct Outcome
    {
        bool pass = false;
        std::string detail;
    };

    using SteadyClock = std::chrono::steady_clock;

    double seconds_since(SteadyClock::time_point t0)
    {
        return std::chrono::duration<double>(SteadyClock::now() - t0).count();
    }

    std::string fmt(double v, int digits = 3)
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.*f", digits, v);
        return buf;
    }

    const std::vector<double> kGammaFracs{0.10, 0.15, 0.20, 0.25, 0.50, 0.75, 1.0};
    const std::vector<double> kBetas{0.02, 0.025, 0.03, 0.035, 0.04, 0.045};

    constexpr std::size_t kMinEvents = 10'000;
    constexpr std::size_t kMaxEvents = 12'000;

    // ---- C1, C2 ---------------------------------------------------------

    SimConfig soundness_config(std::uint64_t i)
    {
        SimConfig c;
        c.n = 2 + static_cast<std::uint32_t>(i % 9);
        c.epsilon = 5 + static_cast<ClockValue>((i * 37) % 200);
        c.alpha = 0.05 + 0.05 * static_cast<double>(i % 5);
        c.beta = 0.02 + 0.005 * static_cast<double>(i % 6);
        c.delta = 1 + static_cast<ClockValue>((i * 13) % 30);
        c.ell = 1 + static_cast<ClockValue>(i % 4);
        c.seed = 1000 + i;
        c.steps = 2000;
        return c;
    }

    struct SkewWatch
    {
        ClockValue epsilon = 0;
        std::size_t turns = 0;
        std::size_t violations = 0;
        ClockValue worst = 0;

        void operator()(std::span<const ProcessState> procs)
        {
            // the l a process would stamp on its next event
            ClockValue lo = std::numeric_limits<ClockValue>::max(), hi = 0;
            for (const auto &p : procs)
            {
                const ClockValue l = std::max(p.hlc.l, p.pt);
                lo = std::min(lo, l);
                hi = std::max(hi, l);
            }
            ++turns;
            worst = std::max(worst, hi - lo);
            if (hi - lo > epsilon)
                ++violations;
        }
    };

    /// Pairs e -> f with hlc(e) not below hlc(f). Events are taken in
    /// descending HLC order while `mask` collects those at or above the
    /// current timestamp.
    std::size_t hlc_violations(const Trace &t, const HappenedBefore &hb)
    {
        const std::size_t n = t.events.size();
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i)
            order[i] = i;
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return t.events[b].hlc < t.events[a].hlc; });
        std::vector<std::uint64_t> mask((n + 63) / 64, 0);
        std::size_t bad = 0;
        for (std::size_t i = 0; i < n;)
        {
            std::size_t j = i;
            while (j < n && t.events[order[j]].hlc == t.events[order[i]].hlc)
            {
                mask[order[j] / 64] |= std::uint64_t{1} << (order[j] % 64);
                ++j;
            }
            for (std::size_t k = i; k < j; ++k)
            {
                const auto row = hb.predecessors(order[k]);
                for (std::size_t w = 0; w < row.size(); ++w)
                    bad += static_cast<std::size_t>(std::popcount(row[w] & mask[w]));
            }
            i = j;
        }
        return bad;
    }

    std::pair<Outcome, Outcome> c1_c2()
    {
        const auto t0 = SteadyClock::now();
        std::size_t violations = 0, pairs = 0, events = 0, short_traces = 0;
        std::size_t skew_bad = 0, turns = 0;
        long long worst_excess = std::numeric_limits<long long>::min();
        for (std::uint64_t i = 0; i < 100; ++i)
        {
            SimConfig cfg = soundness_config(i);
            Trace t;
            SkewWatch watch;
            for (;;)
            {
                watch = SkewWatch{cfg.epsilon};
                t = simulate_conjunctive(cfg, std::ref(watch));
                if (t.events.size() >= kMinEvents)
                    break;
                cfg.steps *= 2;
            }
            skew_bad += watch.violations;
            turns += watch.turns;
            worst_excess = std::max(worst_excess, static_cast<long long>(watch.worst) - static_cast<long long>(cfg.epsilon));
            if (t.events.size() > kMaxEvents)
                t.events.resize(kMaxEvents);
            if (t.events.size() < kMinEvents)
                ++short_traces;
            events += t.events.size();

            HappenedBefore hb(t);
            for (std::size_t f = 0; f < t.events.size(); ++f)
                for (auto w : hb.predecessors(f))
                    pairs += static_cast<std::size_t>(std::popcount(w));
            violations += hlc_violations(t, hb);
        }
        const double secs = seconds_since(t0);
        Outcome c1;
        c1.pass = violations == 0 && short_traces == 0 && secs < 120.0;
        c1.detail = "100 traces, " + std::to_string(events) + " events, " + std::to_string(pairs) +
                    " happened-before pairs, " + std::to_string(violations) + " violations, " + fmt(secs, 1) + " s";
        Outcome c2;
        c2.pass = skew_bad == 0;
        c2.detail = std::to_string(turns) + " observed turns, " + std::to_string(skew_bad) +
                    " with clock spread above epsilon (largest spread minus epsilon: " + std::to_string(worst_excess) + ")";
        return {c1, c2};
    }

    // ---- C3 -------------------------------------------------------------

    Outcome c3()
    {
        std::size_t mismatches = 0, witnesses = 0, nonempty = 0;
        for (std::uint64_t seed = 1; seed <= 200; ++seed)
        {
            Trace t = oracle::small_trace(7000 + seed, 50);
            const auto vars = referenced_vars(parse_predicate("conj", t.header.n));
            const auto got = detect_all_valid(t, Conjunctive{vars}).size();
            const auto want = oracle::exhaustive_regions(t, vars, vars.size()).size();
            witnesses += got;
            nonempty += got > 0;
            mismatches += got != want;
        }
        return {mismatches == 0 && nonempty > 0,
                "200 traces, " + std::to_string(witnesses) + " witnesses (" + std::to_string(nonempty) +
                    " traces with at least one), " + std::to_string(mismatches) + " count mismatches"};
    }

    // ---- C4 -------------------------------------------------------------

    std::size_t events_in_window(const Trace &t, const WindowLayout &layout, std::size_t k)
    {
        std::size_t c = 0;
        for (const auto &e : t.events)
            c += e.hlc.l >= layout.lo(k) && e.hlc.l <= layout.hi(k);
        return c;
    }

    Outcome c4()
    {
        const std::vector<std::string> preds{"conj", "sum>1", "lt:0,1", "sum<1"};
        std::size_t windows = 0, mismatches = 0, sat = 0, external = 0, external_bad = 0;
        const std::string scratch = (fs::temp_directory_path() / "hlcmon_acceptance_window.smt2").string();
        for (std::uint64_t seed = 1; windows < 200 && seed < 10'000; ++seed)
        {
            Trace t = oracle::small_trace(9000 + seed, 40);
            const auto layout = WindowLayout::for_trace(t);
            const auto &text = preds[seed % preds.size()];
            WindowBuilder b(t, layout, parse_predicate(text, t.header.n));
            for (std::size_t k = 0; k < layout.count && windows < 200; ++k)
            {
                const std::size_t ev = events_in_window(t, layout, k);
                if (ev == 0 || ev > 8)
                    continue;
                ++windows;
                const auto cs = b.build(k);
                const bool got = solve(cs).has_value();
                mismatches += got != oracle::brute_force_solve(cs).has_value();
                sat += got;
                if (auto v = oracle::external_check(emit_smtlib(cs), scratch))
                {
                    ++external;
                    external_bad += (*v == "sat") != got;
                }
            }
        }
        std::string detail = std::to_string(windows) + " windows (" + std::to_string(sat) + " sat), " +
                             std::to_string(mismatches) + " mismatches against enumeration; ";
        detail += external ? "external solver agreed on " + std::to_string(external - external_bad) + "/" + std::to_string(external)
                           : std::string("no external solver available");
        return {windows == 200 && mismatches == 0 && external_bad == 0, detail};
    }

    // ---- C5, C6, C7 -----------------------------------------------------

    struct GridCell
    {
        double beta = 0;
        double frac = 0;
        Score layer1;
        Score confirmed;
    };

    std::vector<GridCell> beta_grid(double &secs)
    {
        const auto t0 = SteadyClock::now();
        std::vector<GridCell> cells;
        for (double beta : kBetas)
        {
            SimConfig cfg;
            cfg.n = 10;
            cfg.epsilon = 100;
            cfg.beta = beta;
            cfg.steps = 100'000;
            cfg.seed = 1;
            const Trace t = simulate_conjunctive(cfg);
            const Predicate pred = parse_predicate("conj", cfg.n);
            const auto truth = ground_truth_regions(t, pred);
            for (double frac : kGammaFracs)
            {
                PipelineConfig pc;
                pc.predicate = pred;
                pc.gamma = gamma_from_fraction(frac, cfg.epsilon);
                const auto rep = run_two_layer(t, pc);
                cells.push_back({beta, frac, score(detection_regions(rep.layer1), truth), score(rep.confirmed_regions, truth)});
            }
        }
        secs = seconds_since(t0);
        return cells;
    }

    TdmConfig tdm_config(std::uint64_t seed, ClockValue slot)
    {
        TdmConfig c;
        c.base.n = 10;
        c.base.epsilon = 100;
        c.base.alpha = 0.1;
        c.base.delta = 10;
        c.base.steps = 100'000;
        c.base.seed = seed;
        c.slot_length = slot;
        c.error_prob = 0.10;
        return c;
    }

    // Slot length used where the criteria need slot transitions at desk scale.
    constexpr ClockValue kDeskSlot = 5'000;

    Outcome c5(const std::vector<GridCell> &cells, double secs)
    {
        std::size_t exact = 0, total = 0;
        std::string rows;
        for (const auto &c : cells)
            if (c.frac == 1.0)
            {
                ++total;
                const bool one = c.layer1.recall && *c.layer1.recall == 1.0;
                exact += one;
                rows += " beta=" + fmt(c.beta) + ":" + (c.layer1.recall ? fmt(*c.layer1.recall) : "NA") + "(fn=" +
                        std::to_string(c.layer1.fn) + ")";
            }
        return {exact == total && secs < 600.0, "layer-1 recall at gamma=eps" + rows + "; grid " + fmt(secs, 1) + " s"};
    }

    Outcome c6(const std::vector<GridCell> &cells)
    {
        std::size_t fp = 0, tp = 0, runs = 0;
        for (const auto &c : cells)
        {
            fp += c.confirmed.fp;
            tp += c.confirmed.tp;
            ++runs;
        }
        std::size_t tdm_fp = 0, tdm_tp = 0, tdm_runs = 0;
        const Predicate pred = parse_predicate("sum>1", 10);
        for (std::uint64_t seed = 1; seed <= 5; ++seed)
        {
            const Trace t = simulate_tdm(tdm_config(seed, kDeskSlot));
            const auto truth = ground_truth_regions(t, pred);
            for (double frac : kGammaFracs)
            {
                PipelineConfig pc;
                pc.predicate = pred;
                pc.gamma = gamma_from_fraction(frac, t.header.epsilon);
                const auto s = score(run_two_layer(t, pc).confirmed_regions, truth);
                tdm_fp += s.fp;
                tdm_tp += s.tp;
                ++tdm_runs;
            }
        }
        return {fp == 0 && tdm_fp == 0 && tp > 0 && tdm_tp > 0,
                "conjunctive: " + std::to_string(runs) + " runs, " + std::to_string(tp) + " matched, " + std::to_string(fp) +
                    " unmatched; tdm: " + std::to_string(tdm_runs) + " runs, " + std::to_string(tdm_tp) + " matched, " +
                    std::to_string(tdm_fp) + " unmatched"};
    }

    Outcome c7(const std::vector<GridCell> &cells)
    {
        std::size_t steps = 0, good = 0, recall_good = 0, precision_good = 0;
        std::string table;
        for (double beta : kBetas)
        {
            std::vector<const GridCell *> row;
            for (const auto &c : cells)
                if (c.beta == beta)
                    row.push_back(&c);
            table += "\n    beta=" + fmt(beta) + " p/r:";
            for (const auto *c : row)
                table += " " + (c->layer1.precision ? fmt(*c->layer1.precision) : std::string("NA")) + "/" +
                         (c->layer1.recall ? fmt(*c->layer1.recall) : std::string("NA"));
            for (std::size_t i = 0; i + 1 < row.size(); ++i)
            {
                const auto &a = row[i]->layer1, &b = row[i + 1]->layer1;
                // NA follows the convention that nothing reported cannot be wrong
                const double pa = a.precision.value_or(1.0), pb = b.precision.value_or(1.0);
                const double ra = a.recall.value_or(1.0), rb = b.recall.value_or(1.0);
                const bool r_ok = rb >= ra, p_ok = pb <= pa;
                ++steps;
                recall_good += r_ok;
                precision_good += p_ok;
                good += r_ok && p_ok;
            }
        }
        const double share = steps ? static_cast<double>(good) / static_cast<double>(steps) : 0.0;
        return {share >= 0.90, std::to_string(good) + "/" + std::to_string(steps) + " adjacent steps follow the trend (" +
                                   fmt(100.0 * share, 1) + "%; recall non-decreasing " + std::to_string(recall_good) +
                                   ", precision non-increasing " + std::to_string(precision_good) + ")" + table};
    }

    // ---- C8, C9 ---------------------------------------------------------

    Outcome c8()
    {
        const Predicate pred = parse_predicate("sum>1", 10);
        auto calls = [&](const Trace &t, Mode m)
        {
            PipelineConfig pc;
            pc.predicate = pred;
            pc.gamma = t.header.epsilon;
            pc.mode = m;
            return run_two_layer(t, pc);
        };
        const Trace t = simulate_tdm(tdm_config(1, kDeskSlot));
        const auto two = calls(t, Mode::TwoLayer);
        const auto one = calls(t, Mode::SingleLayer);
        const double ratio = one.solver_calls ? static_cast<double>(two.solver_calls) / static_cast<double>(one.solver_calls) : 1.0;

        const Trace full = simulate_tdm(tdm_config(1, TdmConfig{}.slot_length));
        const auto two_full = calls(full, Mode::TwoLayer);
        return {ratio <= 0.15 && !two.marked.empty(),
                "slot " + std::to_string(kDeskSlot) + ": " + std::to_string(two.solver_calls) + " / " +
                    std::to_string(one.solver_calls) + " solver calls, ratio " + fmt(ratio, 4) + " (reduction " +
                    fmt(100.0 * (1.0 - ratio), 1) + "%); default slot " + std::to_string(TdmConfig{}.slot_length) + ": " +
                    std::to_string(two_full.solver_calls) + " / " + std::to_string(two_full.layout.count) +
                    " (no slot boundary reached)"};
    }

    bool same_confirmed(const RunReport &a, const RunReport &b)
    {
        if (a.confirmed.size() != b.confirmed.size())
            return false;
        for (std::size_t i = 0; i < a.confirmed.size(); ++i)
        {
            const auto &x = a.confirmed[i], &y = b.confirmed[i];
            if (x.window != y.window || x.witness.cut != y.witness.cut || x.witness.values != y.witness.values ||
                !(x.region == y.region))
                return false;
        }
        return true;
    }

    Outcome c9()
    {
        const Predicate pred = parse_predicate("sum>1", 10);
        std::size_t equal = 0, confirmed = 0;
        for (std::uint64_t seed = 1; seed <= 20; ++seed)
        {
            TdmConfig cfg = tdm_config(100 + seed, kDeskSlot);
            cfg.base.steps = 50'000;
            const Trace t = simulate_tdm(cfg);
            PipelineConfig pc;
            pc.predicate = pred;
            pc.gamma = t.header.epsilon;
            const auto two = run_two_layer(t, pc);
            pc.mode = Mode::SingleLayer;
            const auto one = run_two_layer(t, pc);
            equal += same_confirmed(two, one);
            confirmed += one.confirmed.size();
        }
        return {equal == 20 && confirmed > 0, std::to_string(equal) + "/20 traces identical (" + std::to_string(confirmed) +
                                                 " confirmed witnesses in single_layer mode)"};
    }

    // ---- C10 ------------------------------------------------------------

    std::string slurp(const fs::path &p)
    {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    }

    /// stdout, exit code and every file the command wrote into dir.
    std::string capture(const std::vector<std::string> &args, const fs::path &dir)
    {
        fs::remove_all(dir);
        fs::create_directories(dir);
        std::vector<std::string> full{"hlcmon"};
        for (const auto &a : args)
            full.push_back(a.starts_with("@") ? (dir / a.substr(1)).string() : a);
        std::ostringstream out, err;
        const int code = run_cli(full, out, err);
        std::string all = std::to_string(code) + "\n" + out.str() + "\n";
        std::vector<fs::path> files;
        for (const auto &e : fs::recursive_directory_iterator(dir))
            if (e.is_regular_file())
                files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto &f : files)
            all += fs::relative(f, dir).string() + "\n" + slurp(f) + "\n";
        return all;
    }

    Outcome c10()
    {
        const fs::path root = fs::temp_directory_path() / "hlcmon_acceptance_determinism";
        const std::vector<std::string> small{"--n", "4", "--epsilon", "10", "--steps", "3000", "--seed", "7"};
        const std::vector<std::string> tdm{"--workload", "tdm", "--n", "3", "--epsilon", "10", "--steps", "4000",
                                           "--slot-length", "200", "--error-prob", "0.5", "--seed", "7"};
        std::vector<std::pair<std::string, std::vector<std::string>>> cmds{
            {"simulate", {"simulate", "--out", "@t.jsonl", "--intervals-out", "@iv.csv"}},
            {"simulate tdm", {"simulate", "--out", "@t.jsonl"}},
            {"detect-gamma", {"detect-gamma", "--gamma-frac", "0.5"}},
            {"ground-truth", {"ground-truth"}},
            {"two-layer", {"two-layer", "--out", "@r.json"}},
            {"two-layer tdm", {"two-layer", "--mode", "single_layer"}},
            {"emit-smt", {"emit-smt", "--out", "@smt"}},
            {"sweep", {"sweep", "--gamma-fracs", "0.5,1", "--seeds", "1,2", "--score", "both", "--out", "@m.csv",
                       "--table-out", "@t.txt", "--plot-out", "@p.dat"}},
        };
        std::size_t same = 0;
        std::string failed;
        for (auto &[name, args] : cmds)
        {
            const auto &extra = name.ends_with("tdm") ? tdm : small;
            args.insert(args.begin() + 1, extra.begin(), extra.end());
            const std::string a = capture(args, root / "run");
            const std::string b = capture(args, root / "run");
            const bool ok = a == b && a.starts_with("0\n") && a.size() > 8;
            same += ok;
            if (!ok)
                failed += " " + name;
        }
        fs::remove_all(root);
        return {same == cmds.size(), std::to_string(same) + "/" + std::to_string(cmds.size()) +
                                         " invocations byte-identical across two runs" +
                                         (failed.empty() ? "" : "; differing:" + failed)};
    }

    void report(int id, const std::string &name, const Outcome &o, int &failures)
    {
        std::cout << (o.pass ? "PASS" : "FAIL") << " C" << id << " " << name << ": " << o.detail << std::endl;
        failures += !o.pass;
    }
} // namespace

int main()
{
    int failures = 0;
    const auto [o1, o2] = c1_c2();
    report(1, "HLC soundness", o1, failures);
    report(2, "skew propagation", o2, failures);
    report(3, "ground truth matches exhaustive enumeration", c3(), failures);
    report(4, "window checker matches brute force", c4(), failures);
    double secs = 0;
    const auto cells = beta_grid(secs);
    report(5, "zero false negatives at gamma = epsilon", c5(cells, secs), failures);
    report(6, "confirmed precision is exactly one", c6(cells), failures);
    report(7, "gamma trend of layer-1 precision and recall", c7(cells), failures);
    report(8, "solver calls saved by layer-1 filtering", c8(), failures);
    report(9, "modes agree at gamma = epsilon", c9(), failures);
    report(10, "determinism", c10(), failures);
    std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed")) << std::endl;
    return failures ? 1 : 0;
}

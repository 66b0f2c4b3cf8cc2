#include "hlcmon/cli.hpp"

#include "hlcmon/ground_truth.hpp"
#include "hlcmon/monitor_gamma.hpp"
#include "hlcmon/pipeline.hpp"
#include "hlcmon/sim.hpp"
#include "hlcmon/window_checker.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

namespace hlcmon
{
    namespace
    {
        struct Options
        {
            // input
            std::string trace_path;
            std::string workload = "conjunctive";
            std::uint32_t n = 10;
            ClockValue epsilon = 100;
            double alpha = 0.1;
            double beta = 0.02;
            ClockValue delta = 10;
            ClockValue ell = 1;
            std::uint64_t steps = 100'000;
            std::uint64_t seed = 1;
            double tick_prob = 0.5;
            ClockValue slot_length = 100'000;
            double error_prob = 0.10;

            // monitoring
            std::string predicate = "auto";
            std::optional<ClockValue> gamma;
            std::optional<double> gamma_frac;
            bool gamma_eq_epsilon = false;
            bool allow_large_gamma = false;
            ClockValue window = 0;
            std::size_t batch = 100;
            std::string mode = "two_layer";

            // output
            std::string out;
            std::string intervals_out;
            bool wall_clock = false;
            bool marked_only = false;
            std::optional<std::size_t> window_index;

            // sweep
            std::vector<double> gamma_fracs{0.10, 0.15, 0.20, 0.25, 0.50, 0.75, 1.0};
            std::vector<double> betas;
            std::vector<std::uint32_t> ns;
            std::vector<ClockValue> epsilons;
            std::vector<std::uint64_t> seeds;
            std::string score_kind = "both";
            std::string table_out;
            std::string plot_out;
        };

        SimConfig sim_config(const Options &o)
        {
            SimConfig c;
            c.n = o.n;
            c.epsilon = o.epsilon;
            c.alpha = o.alpha;
            c.beta = o.beta;
            c.delta = o.delta;
            c.ell = o.ell;
            c.steps = o.steps;
            c.seed = o.seed;
            c.tick_advance_prob = o.tick_prob;
            return c;
        }

        Trace simulate(const Options &o)
        {
            if (o.workload == "tdm")
            {
                TdmConfig t;
                t.base = sim_config(o);
                t.slot_length = o.slot_length;
                t.error_prob = o.error_prob;
                return simulate_tdm(t);
            }
            if (o.workload != "conjunctive")
                throw Error("unknown workload '" + o.workload + "' (expected conjunctive or tdm)");
            return simulate_conjunctive(sim_config(o));
        }

        Trace load(const Options &o)
        {
            return o.trace_path.empty() ? simulate(o) : read_trace_file(o.trace_path);
        }

        std::string workload_of(const Trace &t)
        {
            auto it = t.header.config.find("workload");
            return it != t.header.config.end() && it->is_string() ? it->get<std::string>() : "conjunctive";
        }

        Predicate predicate_for(const Options &o, const Trace &t)
        {
            std::string text = o.predicate;
            if (text == "auto")
                text = workload_of(t) == "tdm" ? "sum>1" : "conj";
            return parse_predicate(text, t.header.n);
        }

        ClockValue gamma_for(const Options &o, ClockValue eps)
        {
            if (o.gamma_eq_epsilon)
                return eps;
            if (o.gamma_frac)
                return gamma_from_fraction(*o.gamma_frac, eps);
            if (o.gamma)
                return *o.gamma;
            return eps;
        }

        MonitorConfig monitor_config(const Options &o, const Trace &t)
        {
            MonitorConfig m;
            m.epsilon = t.header.epsilon;
            m.c_max = t.header.c_max;
            m.gamma = gamma_for(o, m.epsilon);
            m.allow_gamma_above_epsilon = o.allow_large_gamma;
            return m;
        }

        PipelineConfig pipeline_config(const Options &o, const Trace &t)
        {
            PipelineConfig p;
            p.predicate = predicate_for(o, t);
            p.gamma = gamma_for(o, t.header.epsilon);
            p.window_width = o.window;
            p.batch_size = o.batch;
            p.mode = parse_mode(o.mode);
            p.allow_gamma_above_epsilon = o.allow_large_gamma;
            return p;
        }

        /// Runs `write` against the file at `path`, or against `fallback` when
        /// no path was given.
        void emit(const std::string &path, std::ostream &fallback, const std::function<void(std::ostream &)> &write)
        {
            if (path.empty())
            {
                write(fallback);
                return;
            }
            std::ofstream f(path, std::ios::binary);
            if (!f)
                throw Error("cannot write '" + path + "'");
            write(f);
            if (!f)
                throw Error("failed writing '" + path + "'");
        }

        std::string fmt(const std::optional<double> &v)
        {
            if (!v)
                return "NA";
            std::ostringstream os;
            os << std::fixed << std::setprecision(6) << *v;
            return os.str();
        }

        std::string fmt(double v)
        {
            return fmt(std::optional<double>(v));
        }

        void add_input(CLI::App *cmd, Options &o)
        {
            cmd->add_option("--trace", o.trace_path, "read a JSONL trace instead of simulating");
            cmd->add_option("--workload", o.workload, "conjunctive or tdm")->check(CLI::IsMember({"conjunctive", "tdm"}));
            cmd->add_option("--n", o.n, "number of processes");
            cmd->add_option("--epsilon", o.epsilon, "clock skew bound");
            cmd->add_option("--alpha", o.alpha, "send probability per tick");
            cmd->add_option("--beta", o.beta, "probability a false variable turns true");
            cmd->add_option("--delta", o.delta, "message delay");
            cmd->add_option("--ell", o.ell, "duration of a true interval");
            cmd->add_option("--steps", o.steps, "scheduler rounds");
            cmd->add_option("--seed", o.seed, "random seed");
            cmd->add_option("--tick-prob", o.tick_prob, "probability a process advances its clock on its turn");
            cmd->add_option("--slot-length", o.slot_length, "time-division slot length");
            cmd->add_option("--error-prob", o.error_prob, "probability a slot overruns");
        }

        void add_gamma(CLI::App *cmd, Options &o)
        {
            cmd->add_option("--predicate", o.predicate, "auto, conj, conj:i,j,..., sum>C, sum<C or lt:i,j");
            auto *g = cmd->add_option("--gamma", o.gamma, "interval extension in clock units");
            auto *f = cmd->add_option("--gamma-frac", o.gamma_frac, "extension as a fraction of epsilon");
            auto *e = cmd->add_flag("--gamma-eq-epsilon", o.gamma_eq_epsilon, "extend by epsilon (the default)");
            g->excludes(f)->excludes(e);
            f->excludes(e);
            cmd->add_flag("--allow-gamma-above-epsilon", o.allow_large_gamma, "accept gamma > epsilon");
        }

        void add_windows(CLI::App *cmd, Options &o)
        {
            cmd->add_option("--window", o.window, "window width (default: epsilon)");
            cmd->add_option("--batch", o.batch, "windows per layer-1 batch")->check(CLI::PositiveNumber);
            cmd->add_option("--mode", o.mode, "two_layer or single_layer");
        }

        int cmd_simulate(const Options &o, std::ostream &out)
        {
            Trace t = simulate(o);
            emit(o.out, out, [&](std::ostream &s) { encode(t, s); });
            if (!o.intervals_out.empty())
                emit(o.intervals_out, out, [&](std::ostream &s) { write_intervals_csv(extract_intervals(t, kSimVar), s); });
            return 0;
        }

        int cmd_detect(const Options &o, std::ostream &out)
        {
            Trace t = load(o);
            const Predicate p = predicate_for(o, t);
            auto dets = detect(t, p, monitor_config(o, t));
            emit(o.out, out, [&](std::ostream &s) { write_detections_jsonl(dets, s); });
            return 0;
        }

        int cmd_ground_truth(const Options &o, std::ostream &out)
        {
            Trace t = load(o);
            const Predicate p = predicate_for(o, t);
            if (std::holds_alternative<Conjunctive>(p))
            {
                auto snaps = detect_all_valid(t, p);
                emit(o.out, out, [&](std::ostream &s) { write_snapshots_jsonl(snaps, s); });
            }
            else
            {
                auto regions = ground_truth_regions(t, p);
                emit(o.out, out, [&](std::ostream &s) { write_regions_jsonl(regions, s); });
            }
            return 0;
        }

        int cmd_two_layer(const Options &o, std::ostream &out)
        {
            Trace t = load(o);
            auto rep = run_two_layer(t, pipeline_config(o, t));
            emit(o.out, out, [&](std::ostream &s) { s << to_json(rep, o.wall_clock).dump(2) << '\n'; });
            return 0;
        }

        int cmd_emit_smt(const Options &o, std::ostream &out)
        {
            Trace t = load(o);
            const PipelineConfig pc = pipeline_config(o, t);
            const auto layout = WindowLayout::for_trace(t, pc.window_width);
            WindowBuilder b(t, layout, pc.predicate);

            std::vector<std::size_t> which;
            if (o.window_index)
                which.push_back(*o.window_index);
            else if (o.marked_only)
            {
                std::vector<IntervalList> tls;
                for (std::size_t v = 0; v < b.vars().size(); ++v)
                    tls.push_back(b.timeline(v));
                which = mark_windows(possible_regions(tls, pc.predicate, monitor_config(o, t)), layout);
            }
            else
                for (std::size_t k = 0; k < layout.count; ++k)
                    which.push_back(k);

            if (o.out.empty())
            {
                for (std::size_t k : which)
                    emit_smtlib(b.build(k), out);
                return 0;
            }
            std::filesystem::create_directories(o.out);
            for (std::size_t k : which)
            {
                const auto path = std::filesystem::path(o.out) / ("window_" + std::to_string(k) + ".smt2");
                emit(path.string(), out, [&](std::ostream &s) { emit_smtlib(b.build(k), s); });
            }
            out << "wrote " << which.size() << " of " << layout.count << " windows to " << o.out << '\n';
            return 0;
        }

        struct Row
        {
            std::string workload;
            std::uint32_t n;
            ClockValue epsilon;
            double alpha, beta;
            ClockValue delta, ell;
            std::uint64_t seed;
            std::string scored;
            double gamma_frac;
            ClockValue gamma;
            Score s;
            std::size_t marked, total, calls;
            double l1_ms, l2_ms;
        };

        int cmd_sweep(const Options &base, std::ostream &out)
        {
            if (!base.trace_path.empty())
                throw Error("sweep simulates its own traces; --trace is not accepted");
            const bool want_l1 = base.score_kind != "confirmed";
            const bool want_l2 = base.score_kind != "layer1";
            auto or_default = [](auto list, auto value) { return list.empty() ? decltype(list){value} : list; };
            const auto ns = or_default(base.ns, base.n);
            const auto epss = or_default(base.epsilons, base.epsilon);
            const auto betas = or_default(base.betas, base.beta);
            const auto seeds = or_default(base.seeds, base.seed);

            std::vector<Row> rows;
            for (auto n : ns)
                for (auto eps : epss)
                    for (auto beta : betas)
                        for (auto seed : seeds)
                        {
                            Options o = base;
                            o.n = n;
                            o.epsilon = eps;
                            o.beta = beta;
                            o.seed = seed;
                            Trace t = simulate(o);
                            const Predicate pred = predicate_for(o, t);
                            const auto truth = ground_truth_regions(t, pred);
                            for (double frac : base.gamma_fracs)
                            {
                                o.gamma_frac = frac;
                                o.gamma.reset();
                                o.gamma_eq_epsilon = false;
                                auto rep = run_two_layer(t, pipeline_config(o, t));
                                Row r{workload_of(t), n, eps, o.alpha, beta, o.delta, o.ell, seed, "", frac, rep.gamma, {},
                                      rep.marked.size(), rep.layout.count, rep.solver_calls, rep.layer1_ms, rep.layer2_ms};
                                if (want_l1)
                                {
                                    r.scored = "layer1";
                                    r.s = score(detection_regions(rep.layer1), truth);
                                    rows.push_back(r);
                                }
                                if (want_l2)
                                {
                                    r.scored = "confirmed";
                                    r.s = score(rep.confirmed_regions, truth);
                                    rows.push_back(r);
                                }
                            }
                        }

            emit(base.out, out, [&](std::ostream &s)
                 {
                     s << "# hlcmon-metrics v1\n";
                     s << "workload,n,epsilon,alpha,beta,delta,ell,seed,scored,gamma,tp,fp,fn,precision,recall,"
                          "marked_windows,total_windows,layer1_ms,layer2_ms,solver_calls\n";
                     for (const auto &r : rows)
                         s << r.workload << ',' << r.n << ',' << r.epsilon << ',' << r.alpha << ',' << r.beta << ','
                           << r.delta << ',' << r.ell << ',' << r.seed << ',' << r.scored << ',' << r.gamma << ','
                           << r.s.tp << ',' << r.s.fp << ',' << r.s.fn << ',' << fmt(r.s.precision) << ','
                           << fmt(r.s.recall) << ',' << r.marked << ',' << r.total << ','
                           << (base.wall_clock ? fmt(r.l1_ms) : "NA") << ',' << (base.wall_clock ? fmt(r.l2_ms) : "NA")
                           << ',' << r.calls << '\n'; });

            // mean precision and recall per (scored, gamma fraction), over cells where defined
            struct Acc
            {
                double p = 0, r = 0;
                std::size_t np = 0, nr = 0;
                std::size_t marked = 0, total = 0, calls = 0;
            };
            std::map<std::pair<std::string, double>, Acc> agg;
            for (const auto &r : rows)
            {
                auto &a = agg[{r.scored, r.gamma_frac}];
                if (r.s.precision)
                {
                    a.p += *r.s.precision;
                    ++a.np;
                }
                if (r.s.recall)
                {
                    a.r += *r.s.recall;
                    ++a.nr;
                }
                a.marked += r.marked;
                a.total += r.total;
                a.calls += r.calls;
            }
            auto mean = [](double sum, std::size_t k) { return k ? std::optional(sum / static_cast<double>(k)) : std::nullopt; };

            if (!base.table_out.empty())
                emit(base.table_out, out, [&](std::ostream &s)
                     {
                         s << std::left << std::setw(10) << "scored" << std::setw(12) << "gamma/eps" << std::setw(12)
                           << "precision" << std::setw(12) << "recall" << std::setw(10) << "marked" << std::setw(10)
                           << "windows" << "solver_calls\n";
                         for (const auto &[key, a] : agg)
                             s << std::left << std::setw(10) << key.first << std::setw(12) << fmt(key.second)
                               << std::setw(12) << fmt(mean(a.p, a.np)) << std::setw(12) << fmt(mean(a.r, a.nr))
                               << std::setw(10) << a.marked << std::setw(10) << a.total << a.calls << '\n'; });

            if (!base.plot_out.empty())
                emit(base.plot_out, out, [&](std::ostream &s)
                     {
                         // gnuplot data: one block per scored kind
                         std::string current;
                         for (const auto &[key, a] : agg)
                         {
                             if (key.first != current)
                             {
                                 if (!current.empty())
                                     s << "\n\n";
                                 current = key.first;
                                 s << "# " << current << "\n# gamma_frac precision recall\n";
                             }
                             s << fmt(key.second) << ' ' << fmt(mean(a.p, a.np)) << ' ' << fmt(mean(a.r, a.nr)) << '\n';
                         } });
            return 0;
        }
    } // namespace

    int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err)
    {
        Options o;
        CLI::App app{"Hybrid-logical-clock predicate monitoring: simulation, detection and evaluation"};
        app.name(args.empty() ? "hlcmon" : args[0]);
        app.require_subcommand(1);

        auto *sim = app.add_subcommand("simulate", "generate a trace");
        add_input(sim, o);
        sim->add_option("--out", o.out, "trace file (default: stdout)");
        sim->add_option("--intervals-out", o.intervals_out, "also write the variable's intervals as CSV");

        auto *det = app.add_subcommand("detect-gamma", "layer-1 detection with extended intervals");
        add_input(det, o);
        add_gamma(det, o);
        det->add_option("--out", o.out, "detections JSONL (default: stdout)");

        auto *gt = app.add_subcommand("ground-truth", "exact detection over consistent cuts");
        add_input(gt, o);
        gt->add_option("--predicate", o.predicate, "auto, conj, conj:i,j,... or sum>C");
        gt->add_option("--out", o.out, "witness JSONL (default: stdout)");

        auto *two = app.add_subcommand("two-layer", "run the detection pipeline");
        add_input(two, o);
        add_gamma(two, o);
        add_windows(two, o);
        two->add_option("--out", o.out, "report JSON (default: stdout)");
        two->add_flag("--wall-clock", o.wall_clock, "include elapsed times in the report");

        auto *smt = app.add_subcommand("emit-smt", "write per-window SMT-LIB scripts");
        add_input(smt, o);
        add_gamma(smt, o);
        add_windows(smt, o);
        smt->add_option("--out", o.out, "directory for window_<k>.smt2 (default: stdout)");
        smt->add_flag("--marked-only", o.marked_only, "only windows layer 1 marks");
        smt->add_option("--window-index", o.window_index, "only this window");

        auto *sw = app.add_subcommand("sweep", "precision and recall over a parameter grid");
        add_input(sw, o);
        add_gamma(sw, o);
        add_windows(sw, o);
        sw->add_option("--gamma-fracs", o.gamma_fracs, "gamma as fractions of epsilon")->delimiter(',');
        sw->add_option("--betas", o.betas, "beta values")->delimiter(',');
        sw->add_option("--ns", o.ns, "process counts")->delimiter(',');
        sw->add_option("--epsilons", o.epsilons, "skew bounds")->delimiter(',');
        sw->add_option("--seeds", o.seeds, "seeds")->delimiter(',');
        sw->add_option("--score", o.score_kind, "layer1, confirmed or both")->check(CLI::IsMember({"layer1", "confirmed", "both"}));
        sw->add_option("--out", o.out, "metrics CSV (default: stdout)");
        sw->add_option("--table-out", o.table_out, "summary table");
        sw->add_option("--plot-out", o.plot_out, "gnuplot data file");
        sw->add_flag("--wall-clock", o.wall_clock, "fill the timing columns");

        std::vector<const char *> argv;
        for (const auto &a : args)
            argv.push_back(a.c_str());
        if (argv.empty())
            argv.push_back("hlcmon");
        try
        {
            app.parse(static_cast<int>(argv.size()), argv.data());
        }
        catch (const CLI::ParseError &e)
        {
            return app.exit(e, out, err);
        }

        try
        {
            if (sim->parsed())
                return cmd_simulate(o, out);
            if (det->parsed())
                return cmd_detect(o, out);
            if (gt->parsed())
                return cmd_ground_truth(o, out);
            if (two->parsed())
                return cmd_two_layer(o, out);
            if (smt->parsed())
                return cmd_emit_smt(o, out);
            if (sw->parsed())
                return cmd_sweep(o, out);
        }
        catch (const std::exception &e)
        {
            err << "error: " << e.what() << '\n';
            return 2;
        }
        return 1;
    }

} // namespace hlcmon

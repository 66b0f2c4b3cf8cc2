#include <doctest.h>

#include "hlcmon/pipeline.hpp"
#include "oracles.hpp"

using namespace hlcmon;

namespace
{
    Region r(ClockValue a, ClockValue b) { return Region{{a, 0}, HlcTimestamp{b, 0}}; }

    std::vector<std::size_t> windows_of(const RunReport &rep)
    {
        std::vector<std::size_t> out;
        for (const auto &c : rep.confirmed)
            out.push_back(c.window);
        return out;
    }
} // namespace

TEST_CASE("score counts unmatched regions on each side")
{
    auto s = score({r(1, 5), r(20, 25)}, {r(3, 8), r(10, 12)});
    CHECK(s.tp == 1);
    CHECK(s.fp == 1);
    CHECK(s.fn == 1);
    CHECK(*s.precision == doctest::Approx(0.5));
    CHECK(*s.recall == doctest::Approx(0.5));
}

TEST_CASE("two reports of one true region match it once")
{
    auto s = score({r(1, 5), r(4, 9)}, {r(3, 8)});
    CHECK(s.tp == 1);
    CHECK(s.fp == 0);
    CHECK(s.fn == 0);
}

TEST_CASE("greedy matching pairs in time order")
{
    // the first report could take either truth; taking the earlier one lets
    // the second report match too
    auto s = score({r(1, 10), r(8, 12)}, {r(2, 3), r(9, 11)});
    CHECK(s.tp == 2);
}

TEST_CASE("touching is not overlapping and empty inputs give no ratios")
{
    auto s = score({r(1, 5)}, {r(5, 8)});
    CHECK(s.tp == 0);
    CHECK(s.fp == 1);
    CHECK(s.fn == 1);
    auto none = score({}, {});
    CHECK_FALSE(none.precision);
    CHECK_FALSE(none.recall);
    auto open = score({Region{{3, 0}, std::nullopt}}, {r(100, 200)});
    CHECK(open.tp == 1);
}

TEST_CASE("batched marking equals marking the whole trace at once")
{
    for (std::uint64_t seed = 1; seed <= 15; ++seed)
    {
        Trace t = oracle::small_trace(seed, 400);
        for (std::size_t batch : {1, 3, 100})
        {
            PipelineConfig cfg;
            cfg.predicate = parse_predicate("conj", t.header.n);
            cfg.gamma = t.header.epsilon / 2;
            cfg.batch_size = batch;
            auto rep = run_two_layer(t, cfg);
            std::vector<IntervalList> tls;
            for (const auto &v : referenced_vars(cfg.predicate))
                tls.push_back(value_timeline(t, v));
            MonitorConfig mc;
            mc.gamma = cfg.gamma;
            mc.epsilon = t.header.epsilon;
            mc.c_max = t.header.c_max;
            CHECK(rep.marked == mark_windows(possible_regions(tls, cfg.predicate, mc), rep.layout));
            CHECK(rep.batches.size() == (rep.layout.count + batch - 1) / batch);
        }
    }
}

TEST_CASE("at gamma equal to epsilon both modes confirm the same windows")
{
    for (std::uint64_t seed = 1; seed <= 15; ++seed)
    {
        Trace t = oracle::small_trace(seed, 400);
        for (const char *text : {"conj", "sum>1"})
        {
            PipelineConfig cfg;
            cfg.predicate = parse_predicate(text, t.header.n);
            cfg.gamma = t.header.epsilon;
            auto two = run_two_layer(t, cfg);
            cfg.mode = Mode::SingleLayer;
            auto one = run_two_layer(t, cfg);
            CHECK(windows_of(two) == windows_of(one));
            CHECK(one.solver_calls == one.layout.count);
            CHECK(two.solver_calls == two.marked.size());
        }
    }
}

TEST_CASE("every confirmed region overlaps the ground truth")
{
    for (std::uint64_t seed = 1; seed <= 15; ++seed)
    {
        Trace t = oracle::small_trace(seed, 400);
        for (const char *text : {"conj", "sum>1"})
        {
            auto pred = parse_predicate(text, t.header.n);
            auto truth = ground_truth_regions(t, pred);
            for (ClockValue g = 0; g <= t.header.epsilon; ++g)
            {
                PipelineConfig cfg;
                cfg.predicate = pred;
                cfg.gamma = g;
                auto rep = run_two_layer(t, cfg);
                auto s = score(rep.confirmed_regions, truth);
                REQUIRE_MESSAGE(s.fp == 0, "seed " << seed << " " << text << " gamma " << g);
                for (const auto &c : rep.confirmed)
                    CHECK(!c.region.empty());
            }
        }
    }
}

TEST_CASE("reports without timing are reproducible")
{
    Trace t = oracle::small_trace(4, 300);
    PipelineConfig cfg;
    cfg.predicate = parse_predicate("conj", t.header.n);
    cfg.gamma = t.header.epsilon;
    auto a = to_json(run_two_layer(t, cfg), false).dump();
    auto b = to_json(run_two_layer(t, cfg), false).dump();
    CHECK(a == b);
    CHECK(a.find("\"layer1_ms\":null") != std::string::npos);
}

TEST_CASE("modes parse from text")
{
    CHECK(parse_mode("two_layer") == Mode::TwoLayer);
    CHECK(parse_mode("single-layer") == Mode::SingleLayer);
    CHECK_THROWS_AS(parse_mode("both"), Error);
}

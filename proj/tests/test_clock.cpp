#include <doctest.h>

#include "hlcmon/clock.hpp"

using namespace hlcmon;

TEST_CASE("local event when physical time moves ahead resets the counter")
{
    ClockConfig cfg;
    HlcState s{5, 3};
    auto t = hlc_local(s, 7, cfg);
    CHECK(t == HlcTimestamp{7, 0});
    CHECK(s == t);
}

TEST_CASE("local event with a lagging physical clock bumps the counter")
{
    ClockConfig cfg;
    HlcState s{7, 0};
    CHECK(hlc_local(s, 5, cfg) == HlcTimestamp{7, 1});
    CHECK(hlc_local(s, 7, cfg) == HlcTimestamp{7, 2});
}

TEST_CASE("receive covers every counter case")
{
    ClockConfig cfg;
    SUBCASE("equal l takes max counter plus one")
    {
        HlcState s{5, 2};
        CHECK(hlc_recv(s, 4, {5, 6}, cfg) == HlcTimestamp{5, 7});
    }
    SUBCASE("local l wins")
    {
        HlcState s{6, 2};
        CHECK(hlc_recv(s, 4, {5, 6}, cfg) == HlcTimestamp{6, 3});
    }
    SUBCASE("message l wins")
    {
        HlcState s{3, 2};
        CHECK(hlc_recv(s, 4, {5, 6}, cfg) == HlcTimestamp{5, 7});
    }
    SUBCASE("physical time dominates")
    {
        HlcState s{3, 2};
        CHECK(hlc_recv(s, 9, {5, 6}, cfg) == HlcTimestamp{9, 0});
    }
}

TEST_CASE("counter overflow throws and leaves state untouched")
{
    ClockConfig cfg;
    cfg.c_max = 3;
    HlcState s{5, 3};
    CHECK_THROWS_AS(hlc_local(s, 5, cfg), CounterOverflow);
    CHECK(s == HlcTimestamp{5, 3});
    HlcState r{5, 1};
    CHECK_THROWS_AS(hlc_recv(r, 0, {5, 3}, cfg), CounterOverflow);
}

TEST_CASE("ordering is lexicographic on (l, c)")
{
    CHECK(hlc_compare({3, 9}, {4, 0}) == std::strong_ordering::less);
    CHECK(hlc_compare({4, 1}, {4, 0}) == std::strong_ordering::greater);
    CHECK(hlc_compare({4, 1}, {4, 1}) == std::strong_ordering::equal);
}

TEST_CASE("extension adds gamma to l and saturates the counter")
{
    ClockConfig cfg;
    cfg.c_max = 100;
    CHECK(hlc_extend({10, 4}, 5, cfg) == HlcTimestamp{15, 100});
    CHECK(hlc_extend({10, 4}, 0, cfg) == HlcTimestamp{10, 100});
}

TEST_CASE("vector clock merges peers componentwise and keeps its own entry an HLC")
{
    ClockConfig cfg;
    HvcClock a(0, 2, cfg);
    HvcClock b(1, 2, cfg);
    a.local(5);
    a.local(5);
    auto m = b.local(7);
    auto r = a.recv(5, m);
    CHECK(r.entry(1) == HlcTimestamp{7, 0});
    // own entry follows the receive rule: l = max(5, 5, 7) = 7, c = 0 + 1
    CHECK(r.own_hlc() == HlcTimestamp{7, 1});
    CHECK(r.dominates(m));
    CHECK_FALSE(m.dominates(r));
    CHECK(r.l_entries() == std::vector<ClockValue>{7, 7});
}

TEST_CASE("vector clock rejects a message of the wrong width")
{
    ClockConfig cfg;
    HvcClock a(0, 2, cfg);
    HvcClock c(0, 3, cfg);
    CHECK_THROWS(a.recv(1, c.local(1)));
}

#include "hlcmon/sim.hpp"

#include <algorithm>
#include <random>
#include <string>
#include <tuple>

namespace hlcmon
{
    namespace
    {
        void check_probability(double p, const char *name)
        {
            if (!(p >= 0.0 && p <= 1.0))
                throw Error(std::string("sim config: ") + name + " must lie in [0,1]");
        }

        std::uint64_t splitmix64(std::uint64_t x)
        {
            x += 0x9e3779b97f4a7c15ULL;
            x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
            x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
            return x ^ (x >> 31);
        }

        /// Per-process stream: mt19937_64 seeded from splitmix64(seed, process id).
        /// Draws use raw 64-bit output only, so traces do not depend on the
        /// standard library's distribution implementations.
        class Stream
        {
        public:
            Stream(std::uint64_t seed, ProcessId id) : gen_(splitmix64(seed ^ splitmix64(0x5eedULL + id))) {}

            bool bernoulli(double p)
            {
                const double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
                return u < p;
            }

            /// Uniform integer in [0, bound).
            std::uint64_t below(std::uint64_t bound)
            {
                const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
                std::uint64_t x;
                do
                    x = gen_();
                while (x >= limit);
                return x % bound;
            }

        private:
            std::mt19937_64 gen_;
        };

        struct HeapOrder
        {
            bool operator()(const PendingMessage &a, const PendingMessage &b) const
            {
                return std::tie(a.due, a.id) > std::tie(b.due, b.id);
            }
        };

        /// Local-variable behaviour plugged into the shared scheduler loop.
        class Behaviour
        {
        public:
            virtual ~Behaviour() = default;
            /// Returns the new value of v if it changes on this turn.
            virtual std::optional<bool> step(ProcessState &p, Stream &rng) = 0;
        };

        class ConjunctiveBehaviour final : public Behaviour
        {
        public:
            explicit ConjunctiveBehaviour(const SimConfig &cfg) : cfg_(cfg) {}

            std::optional<bool> step(ProcessState &p, Stream &rng) override
            {
                if (p.v)
                {
                    if (p.pt >= *p.v_until)
                    {
                        p.v_until.reset();
                        return false;
                    }
                    return std::nullopt;
                }
                if (rng.bernoulli(cfg_.beta))
                {
                    p.v_until = p.pt + cfg_.ell;
                    return true;
                }
                return std::nullopt;
            }

        private:
            SimConfig cfg_;
        };

        /// Process i owns [i*T, (i+1)*T) of every n*T cycle and releases at
        /// (i+1)*T - eps - 1; an erroneous slot holds for an extra 1..2*eps ticks.
        class TdmBehaviour final : public Behaviour
        {
        public:
            explicit TdmBehaviour(const TdmConfig &cfg) : cfg_(cfg), next_start_(cfg.base.n)
            {
                for (ProcessId i = 0; i < cfg.base.n; ++i)
                    next_start_[i] = ClockValue{i} * cfg.slot_length;
            }

            std::optional<bool> step(ProcessState &p, Stream &rng) override
            {
                const ClockValue eps = cfg_.base.epsilon;
                if (p.v)
                {
                    if (p.pt >= *p.v_until)
                    {
                        p.v_until.reset();
                        return false;
                    }
                    return std::nullopt;
                }
                ClockValue &start = next_start_[p.id];
                if (p.pt < start)
                    return std::nullopt;
                ClockValue release = start + cfg_.slot_length - eps - 1;
                if (rng.bernoulli(cfg_.error_prob))
                    release += 1 + rng.below(std::max<ClockValue>(1, 2 * eps));
                start += ClockValue{cfg_.base.n} * cfg_.slot_length;
                if (p.pt >= release)
                    return std::nullopt;
                p.v_until = release;
                return true;
            }

        private:
            TdmConfig cfg_;
            std::vector<ClockValue> next_start_;
        };

        Trace run(const SimConfig &cfg, Behaviour &behaviour, nlohmann::ordered_json echo, const SimObserver &observer)
        {
            const ClockConfig clock{cfg.c_max, cfg.epsilon};
            Trace trace;
            trace.header.n = cfg.n;
            trace.header.epsilon = cfg.epsilon;
            trace.header.c_max = cfg.c_max;
            trace.header.config = std::move(echo);

            std::vector<ProcessState> procs(cfg.n);
            std::vector<Stream> rng;
            rng.reserve(cfg.n);
            for (ProcessId i = 0; i < cfg.n; ++i)
            {
                procs[i].id = i;
                rng.emplace_back(cfg.seed, i);
            }
            std::vector<std::uint64_t> seq(cfg.n, 0);
            MessageId next_msg = 0;

            auto emit = [&](ProcessState &p, EventKind kind, const HlcTimestamp &ts) -> Event &
            {
                Event e;
                e.seq = seq[p.id]++;
                e.proc = p.id;
                e.kind = kind;
                e.pt = p.pt;
                e.hlc = ts;
                trace.events.push_back(std::move(e));
                return trace.events.back();
            };

            for (std::uint64_t step = 0; step < cfg.steps; ++step)
            {
                for (ProcessId i = 0; i < cfg.n; ++i)
                {
                    ProcessState &p = procs[i];
                    Stream &r = rng[i];

                    bool advanced = false;
                    if (r.bernoulli(cfg.tick_advance_prob))
                    {
                        ClockValue min_pt = p.pt;
                        for (const auto &q : procs)
                            min_pt = std::min(min_pt, q.pt);
                        if (p.pt + 1 <= min_pt + cfg.epsilon)
                        {
                            ++p.pt;
                            advanced = true;
                        }
                    }

                    if (advanced && cfg.n > 1 && r.bernoulli(cfg.alpha))
                    {
                        ProcessId dest = static_cast<ProcessId>(r.below(cfg.n - 1));
                        if (dest >= i)
                            ++dest;
                        const HlcTimestamp ts = hlc_local(p.hlc, p.pt, clock);
                        const MessageId id = next_msg++;
                        emit(p, EventKind::Send, ts).msg_id = id;
                        auto &inbox = procs[dest].inbox;
                        inbox.push_back(PendingMessage{p.pt + cfg.delta, id, ts});
                        std::push_heap(inbox.begin(), inbox.end(), HeapOrder{});
                    }

                    while (!p.inbox.empty() && p.inbox.front().due <= p.pt)
                    {
                        std::pop_heap(p.inbox.begin(), p.inbox.end(), HeapOrder{});
                        const PendingMessage m = p.inbox.back();
                        p.inbox.pop_back();
                        const HlcTimestamp ts = hlc_recv(p.hlc, p.pt, m.stamp, clock);
                        emit(p, EventKind::Recv, ts).msg_id = m.id;
                    }

                    if (auto change = behaviour.step(p, r))
                    {
                        p.v = *change;
                        const HlcTimestamp ts = hlc_local(p.hlc, p.pt, clock);
                        emit(p, EventKind::Local, ts).var_change = VarChange{kSimVar, p.v ? 1 : 0};
                    }

                    if (observer)
                        observer(procs);
                }
            }
            return trace;
        }
    } // namespace

    void SimConfig::validate() const
    {
        if (n < 1)
            throw Error("sim config: n must be >= 1");
        check_probability(alpha, "alpha");
        check_probability(beta, "beta");
        check_probability(tick_advance_prob, "tick_advance_prob");
        if (c_max < 1)
            throw Error("sim config: c_max must be >= 1");
    }

    void TdmConfig::validate() const
    {
        base.validate();
        check_probability(error_prob, "error_prob");
        if (slot_length <= base.epsilon)
            throw Error("tdm config: slot_length must exceed epsilon");
    }

    nlohmann::ordered_json to_json(const SimConfig &cfg)
    {
        nlohmann::ordered_json j;
        j["workload"] = "conjunctive";
        j["n"] = cfg.n;
        j["epsilon"] = cfg.epsilon;
        j["alpha"] = cfg.alpha;
        j["beta"] = cfg.beta;
        j["delta"] = cfg.delta;
        j["ell"] = cfg.ell;
        j["steps"] = cfg.steps;
        j["seed"] = cfg.seed;
        j["tick_advance_prob"] = cfg.tick_advance_prob;
        return j;
    }

    nlohmann::ordered_json to_json(const TdmConfig &cfg)
    {
        nlohmann::ordered_json j = to_json(cfg.base);
        j["workload"] = "tdm";
        j.erase("beta");
        j.erase("ell");
        j["slot_length"] = cfg.slot_length;
        j["error_prob"] = cfg.error_prob;
        return j;
    }

    Trace simulate_conjunctive(const SimConfig &cfg, const SimObserver &observer)
    {
        cfg.validate();
        ConjunctiveBehaviour b(cfg);
        return run(cfg, b, to_json(cfg), observer);
    }

    Trace simulate_tdm(const TdmConfig &cfg, const SimObserver &observer)
    {
        cfg.validate();
        TdmBehaviour b(cfg);
        return run(cfg.base, b, to_json(cfg), observer);
    }

} // namespace hlcmon

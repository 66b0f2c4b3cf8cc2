#pragma once

#include "hlcmon/clock.hpp"
#include "hlcmon/trace.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace hlcmon
{
    struct SimConfig
    {
        std::uint32_t n = 10;
        ClockValue epsilon = 100;
        double alpha = 0.1;
        double beta = 0.02;
        ClockValue delta = 10;
        ClockValue ell = 1;
        std::uint64_t steps = 1'000'000;
        std::uint64_t seed = 1;
        double tick_advance_prob = 0.5;
        Counter c_max = kDefaultCounterMax;

        void validate() const;
    };

    struct TdmConfig
    {
        SimConfig base;
        ClockValue slot_length = 100'000;
        double error_prob = 0.10;

        void validate() const;
    };

    struct PendingMessage
    {
        ClockValue due = 0;
        MessageId id = 0;
        HlcTimestamp stamp;
    };

    struct ProcessState
    {
        ProcessId id = 0;
        ClockValue pt = 0;
        HlcState hlc;
        bool v = false;
        std::optional<ClockValue> v_until;
        std::vector<PendingMessage> inbox; // min-heap on (due, id)
    };

    /// Called after every scheduler turn with the state of all processes.
    using SimObserver = std::function<void(std::span<const ProcessState>)>;

    /// Name of the monitored boolean variable in generated traces.
    inline constexpr const char *kSimVar = "v";

    Trace simulate_conjunctive(const SimConfig &cfg, const SimObserver &observer = {});
    Trace simulate_tdm(const TdmConfig &cfg, const SimObserver &observer = {});

    nlohmann::ordered_json to_json(const SimConfig &cfg);
    nlohmann::ordered_json to_json(const TdmConfig &cfg);

} // namespace hlcmon

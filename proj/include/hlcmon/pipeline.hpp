#pragma once

#include "hlcmon/model.hpp"
#include "hlcmon/monitor_gamma.hpp"
#include "hlcmon/window_checker.hpp"

#include <json.hpp>

#include <optional>
#include <string_view>
#include <vector>

namespace hlcmon
{
    enum class Mode
    {
        TwoLayer,    // solve only the windows layer 1 marks
        SingleLayer, // solve every window
    };
    std::string_view to_string(Mode m) noexcept;
    Mode parse_mode(std::string_view text);

    struct PipelineConfig
    {
        Predicate predicate = Conjunctive{};
        ClockValue gamma = 0;
        ClockValue window_width = 0; // 0: epsilon
        std::size_t batch_size = 100;
        Mode mode = Mode::TwoLayer;
        bool allow_gamma_above_epsilon = false;

        void validate() const;
    };

    struct Confirmed
    {
        std::size_t window = 0;
        Witness witness;
        /// Span of the witnessing intervals.
        Region region;
    };

    struct BatchReport
    {
        std::size_t index = 0;
        std::size_t first_window = 0;
        std::size_t last_window = 0;
        std::size_t marked = 0;
        std::size_t solver_calls = 0;
        std::size_t confirmed = 0;
        double layer1_ms = 0;
        double layer2_ms = 0;
    };

    struct RunReport
    {
        Mode mode = Mode::TwoLayer;
        ClockValue gamma = 0;
        WindowLayout layout;
        std::size_t batch_size = 0;
        /// Layer-1 detections over the whole trace.
        std::vector<Detection> layer1;
        std::vector<std::size_t> marked;
        std::vector<Confirmed> confirmed;
        /// Confirmed regions with overlapping ones fused.
        std::vector<Region> confirmed_regions;
        std::size_t solver_calls = 0;
        double layer1_ms = 0;
        double layer2_ms = 0;
        std::vector<BatchReport> batches;
    };

    RunReport run_two_layer(const Trace &trace, const PipelineConfig &cfg);

    /// Span of the snapshot the witness describes: from the earliest start to
    /// the latest end (extended by epsilon) of the intervals holding the
    /// witness values.
    Region witness_region(const ConstraintSet &cs, const Witness &w, const WindowBuilder &builder);

    std::vector<Region> detection_regions(const std::vector<Detection> &dets);

    struct Score
    {
        std::size_t tp = 0;
        std::size_t fp = 0;
        std::size_t fn = 0;
        std::optional<double> precision; // absent when tp + fp == 0
        std::optional<double> recall;    // absent when tp + fn == 0
    };

    /// A reported region overlapping no true region is a false positive, a
    /// true region overlapped by nothing is a false negative, and true
    /// positives are pairs matched one-to-one greedily in time order.
    Score score(std::vector<Region> reported, std::vector<Region> truth);

    /// Report as JSON. Timing fields are null unless include_timing is set,
    /// so that reports are reproducible byte for byte.
    nlohmann::ordered_json to_json(const RunReport &r, bool include_timing);

} // namespace hlcmon

#pragma once

#include <cstdint>
#include <deque>
#include <optional>

#include "cooking/sample.hpp"

namespace cooking::predict {

struct PredictorConfig {
    std::size_t capacity = 8;
    std::size_t min_samples = 2;
    double min_span_s = 5.0;
    /// Slopes at or below this (°F/s) are treated as "not heating".
    double rate_floor_f_per_s = 0.001;
};

/// Bounded FIFO of the most recent samples of one device, oldest first.
class SampleWindow {
public:
    explicit SampleWindow(std::size_t capacity = PredictorConfig{}.capacity);

    /// Appends a sample, evicting the oldest when full. Throws
    /// ValidationError when seq does not exceed the last accepted seq or
    /// time runs backwards; the window is left unchanged.
    void push(const TemperatureSample& sample);

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return samples_.size(); }
    bool empty() const { return samples_.empty(); }
    const std::deque<TemperatureSample>& samples() const { return samples_; }
    const TemperatureSample& latest() const { return samples_.back(); }

private:
    std::size_t capacity_;
    std::deque<TemperatureSample> samples_;
};

/// Least-squares slope of temperature against time (°F/s), or nullopt when
/// the window is too short, spans too little time, or is not heating.
std::optional<double> heating_rate(const SampleWindow& window, const PredictorConfig& config = {});

struct Prediction {
    enum class Kind { Eta, Indeterminate, AlreadyAtTarget };

    Kind kind = Kind::Indeterminate;
    double seconds_remaining = 0;  // Eta only
    double rate_f_per_s = 0;       // Eta only

    static Prediction indeterminate() { return {}; }
    static Prediction at_target() { return {Kind::AlreadyAtTarget, 0, 0}; }
    static Prediction eta(double seconds, double rate) { return {Kind::Eta, seconds, rate}; }
};

/// Remaining time = (target - current) / rate, with rate from heating_rate.
Prediction predict(const SampleWindow& window, double target_f, const PredictorConfig& config = {});

/// Whole minutes, rounded up; nullopt unless the prediction is an Eta.
std::optional<std::int64_t> render_minutes(const Prediction& p);

}  // namespace cooking::predict

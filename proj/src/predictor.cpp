#include "cooking/predictor.hpp"

#include "cooking/error.hpp"

#include <cmath>

namespace cooking::predict {

SampleWindow::SampleWindow(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ValidationError("sample window capacity must be positive");
}

void SampleWindow::push(const TemperatureSample& sample) {
    if (!samples_.empty()) {
        const auto& last = samples_.back();
        if (sample.seq <= last.seq)
            throw ValidationError("out-of-order sample seq " + std::to_string(sample.seq) + " after " +
                                  std::to_string(last.seq));
        if (sample.t_ms < last.t_ms)
            throw ValidationError("sample time " + std::to_string(sample.t_ms) + " before " +
                                  std::to_string(last.t_ms));
    }
    samples_.push_back(sample);
    if (samples_.size() > capacity_) samples_.pop_front();
}

std::optional<double> heating_rate(const SampleWindow& window, const PredictorConfig& config) {
    const auto& samples = window.samples();
    const std::size_t n = samples.size();
    if (n < config.min_samples || n < 2) return std::nullopt;

    // Times relative to the oldest sample so absolute epoch offsets cancel.
    const std::int64_t origin = samples.front().t_ms;
    const double span_s = static_cast<double>(samples.back().t_ms - origin) / 1000.0;
    if (span_s < config.min_span_s) return std::nullopt;

    double mean_t = 0, mean_temp = 0;
    for (const auto& s : samples) {
        mean_t += static_cast<double>(s.t_ms - origin) / 1000.0;
        mean_temp += s.temp_f;
    }
    mean_t /= static_cast<double>(n);
    mean_temp /= static_cast<double>(n);

    double sxx = 0, sxy = 0;
    for (const auto& s : samples) {
        const double dt = static_cast<double>(s.t_ms - origin) / 1000.0 - mean_t;
        sxx += dt * dt;
        sxy += dt * (s.temp_f - mean_temp);
    }
    if (sxx <= 0) return std::nullopt;

    const double slope = sxy / sxx;
    if (!(slope > config.rate_floor_f_per_s)) return std::nullopt;
    return slope;
}

Prediction predict(const SampleWindow& window, double target_f, const PredictorConfig& config) {
    if (window.empty()) return Prediction::indeterminate();
    const double current = window.latest().temp_f;
    if (current >= target_f) return Prediction::at_target();

    auto rate = heating_rate(window, config);
    if (!rate) return Prediction::indeterminate();
    const double seconds = (target_f - current) / *rate;
    if (!(seconds > 0) || !std::isfinite(seconds)) return Prediction::indeterminate();
    return Prediction::eta(seconds, *rate);
}

std::optional<std::int64_t> render_minutes(const Prediction& p) {
    if (p.kind != Prediction::Kind::Eta) return std::nullopt;
    // Absorb floating-point dust so an exact 60 s does not render as 2 minutes.
    const double minutes = p.seconds_remaining / 60.0;
    return static_cast<std::int64_t>(std::ceil(minutes - 1e-9 * minutes));
}

}  // namespace cooking::predict

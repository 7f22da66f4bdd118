#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>

namespace magic_meter {

inline double mse(std::span<const double> predictions, std::span<const double> labels) {
    if (predictions.size() != labels.size()) {
        throw std::invalid_argument("mse: prediction and label counts differ");
    }
    if (labels.empty()) throw std::invalid_argument("mse: no values");
    double s = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double r = predictions[i] - labels[i];
        s += r * r;
    }
    return s / static_cast<double>(labels.size());
}

/// Population variance.
inline double variance(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("variance: no values");
    double m = 0.0;
    for (double v : values) m += v;
    m /= static_cast<double>(values.size());
    double s = 0.0;
    for (double v : values) s += (v - m) * (v - m);
    return s / static_cast<double>(values.size());
}

}  // namespace magic_meter

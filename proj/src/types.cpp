#include "rsb/types.hpp"

#include <cmath>

namespace rsb {

DimensionError::DimensionError(std::size_t expected_dim, std::size_t got_dim)
    : Error("dimension mismatch: expected " + std::to_string(expected_dim) +
            ", got " + std::to_string(got_dim)),
      expected(expected_dim),
      got(got_dim) {}

ParseError::ParseError(std::size_t line_no, const std::string& what)
    : Error("line " + std::to_string(line_no) + ": " + what), line(line_no) {}

void validate_features(const FeatureVector& x, std::size_t expected_dim) {
    if (x.empty()) throw DimensionError(expected_dim == 0 ? 1 : expected_dim, 0);
    if (expected_dim != 0 && x.size() != expected_dim)
        throw DimensionError(expected_dim, x.size());
    for (double v : x) {
        if (!std::isfinite(v)) throw InvalidValueError("non-finite feature value");
    }
}

void validate_label(Label y) {
    if (y < 0 || y >= kNumLabels)
        throw InvalidValueError("label must be 0 or 1, got " + std::to_string(y));
}

double squared_distance(const FeatureVector& a, const FeatureVector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace rsb

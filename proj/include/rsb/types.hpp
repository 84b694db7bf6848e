#ifndef RSB_TYPES_HPP
#define RSB_TYPES_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rsb {

// Dense feature point. Dimension is the vector length.
using FeatureVector = std::vector<double>;

// Binary superclass ("recommendation") label.
using Label = int;
inline constexpr int kNumLabels = 2;

struct LabeledInstance {
    FeatureVector features;
    Label label = 0;
    // Originating subconcept. Evaluation metadata only; learners never read it.
    int subconcept = -1;
};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    DimensionError(std::size_t expected, std::size_t got);
    std::size_t expected;
    std::size_t got;
};

class InvalidValueError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

class IllegalStateError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what);
    std::size_t line;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Throws InvalidValueError on NaN/inf, DimensionError when expected_dim != 0
// and does not match.
void validate_features(const FeatureVector& x, std::size_t expected_dim = 0);

void validate_label(Label y);

double squared_distance(const FeatureVector& a, const FeatureVector& b);

}  // namespace rsb

#endif  // RSB_TYPES_HPP

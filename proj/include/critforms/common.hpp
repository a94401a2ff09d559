#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace critforms {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Invalid argument / dimension mismatch / malformed input.
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// h-transform refused: h is not excessive for E^mu. Carries offending states.
struct NotExcessiveError : std::runtime_error {
    std::vector<Index> states;
    NotExcessiveError(std::string msg, std::vector<Index> bad)
        : std::runtime_error(std::move(msg)), states(std::move(bad)) {}
};

// Green operator of a recurrent truncation (singular H(0)).
struct NotTransientError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ground_state refused on a supercritical pair; carries the bottom gamma.
struct SupercriticalError : std::runtime_error {
    double gamma;
    SupercriticalError(std::string msg, double g)
        : std::runtime_error(std::move(msg)), gamma(g) {}
};

}  // namespace critforms

#pragma once

#include <stdexcept>
#include <string>

namespace dsmm {

// Violated precondition: bad shapes, bad configuration, malformed input.
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A NaN or Inf showed up somewhere it must not.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) {
        throw ContractError(message);
    }
}

}  // namespace dsmm

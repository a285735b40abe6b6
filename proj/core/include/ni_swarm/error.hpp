#pragma once

#include <stdexcept>
#include <string>

namespace ni_swarm {

/// Invalid model or argument (bad coefficients, violated precondition).
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A robot could not measure a peer directly and no aerial fallback exists.
class SensingLostError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ni_swarm

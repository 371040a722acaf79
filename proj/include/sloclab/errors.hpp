#pragma once

#include <stdexcept>
#include <string>

namespace sloclab {

// The partition function of a tilt does not exist (t = 0, unbounded support).
class DivergentTilt : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Rejection sampler acceptance fell below the stall threshold.
class RejectionStall : public std::runtime_error {
 public:
  RejectionStall(const std::string& what, double acceptance, long proposals)
      : std::runtime_error(what), acceptance_(acceptance), proposals_(proposals) {}
  double acceptance() const { return acceptance_; }
  long proposals() const { return proposals_; }

 private:
  double acceptance_;
  long proposals_;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace sloclab

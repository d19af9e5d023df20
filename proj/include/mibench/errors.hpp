#ifndef MIBENCH_ERRORS_HPP
#define MIBENCH_ERRORS_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mibench {

// Invalid configuration: bad layer dims, unknown estimator tag, malformed grid.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Matrix/vector width mismatches.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Caller broke a usage contract, e.g. a forward cache reused after the
// parameters changed.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Non-finite loss or gradient during optimization.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::int64_t step)
      : std::runtime_error(what), step_(step) {}
  std::int64_t step() const { return step_; }

 private:
  std::int64_t step_;
};

// An estimator produced a non-finite value from finite inputs or from a
// saturated classifier.
class EstimateUnstableError : public std::runtime_error {
 public:
  EstimateUnstableError(const std::string& what, double max_abs_score)
      : std::runtime_error(what), max_abs_score_(max_abs_score) {}
  double max_abs_score() const { return max_abs_score_; }

 private:
  double max_abs_score_;
};

class IoError : public std::runtime_error {
 public:
  IoError(const std::string& what, std::string path)
      : std::runtime_error(what + ": " + path), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// Malformed binary input; carries the offset at which parsing failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace mibench

#endif  // MIBENCH_ERRORS_HPP

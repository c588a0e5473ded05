#pragma once

#include <stdexcept>
#include <string>

namespace skillgrid {

// Error taxonomy shared across the library. The CLI maps each type to a
// distinct exit code.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct EpisodeOverError : std::runtime_error {
  explicit EpisodeOverError(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

struct DistributionError : std::runtime_error {
  explicit DistributionError(const std::string& what) : std::runtime_error(what) {}
};

struct BufferFullError : std::runtime_error {
  explicit BufferFullError(const std::string& what) : std::runtime_error(what) {}
};

struct InfeasibleError : std::runtime_error {
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidPlanError : std::runtime_error {
  explicit InvalidPlanError(const std::string& what) : std::runtime_error(what) {}
};

struct BudgetError : std::runtime_error {
  explicit BudgetError(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyBatchError : std::runtime_error {
  explicit EmptyBatchError(const std::string& what) : std::runtime_error(what) {}
};

struct MetricUndefinedError : std::runtime_error {
  explicit MetricUndefinedError(const std::string& what) : std::runtime_error(what) {}
};

struct PairingError : std::runtime_error {
  explicit PairingError(const std::string& what) : std::runtime_error(what) {}
};

struct CheckpointError : std::runtime_error {
  explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

struct NumericsError : std::runtime_error {
  explicit NumericsError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace skillgrid

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace theseus {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// One type per failure family so callers can branch on them.
struct IntegrityError : Error { using Error::Error; };
struct LabelingError : Error { using Error::Error; };
struct ScenarioError : Error { using Error::Error; };
struct SchemaError : Error { using Error::Error; };
struct DimensionError : Error { using Error::Error; };
struct FitError : Error { using Error::Error; };
struct DataError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct CoverageError : Error { using Error::Error; };
struct DegenerateSampleError : Error { using Error::Error; };
struct UndefinedError : Error { using Error::Error; };
struct TrainingError : Error { using Error::Error; };
struct ProviderError : Error { using Error::Error; };
struct BackendError : Error { using Error::Error; };
struct InvalidResponseError : Error { using Error::Error; };
struct FeasibilityError : Error { using Error::Error; };
struct PreconditionError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace theseus

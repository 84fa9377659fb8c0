#pragma once

#include <stdexcept>
#include <string>

namespace edlab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : Error { using Error::Error; };
struct NumericError : Error { using Error::Error; };
struct ContractError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct DataError : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct IndexError : Error { using Error::Error; };
struct SpanError : Error { using Error::Error; };
struct SingularMatrixError : Error { using Error::Error; };
struct TrainingError : Error { using Error::Error; };
struct OptimizationError : Error { using Error::Error; };
struct DegenerateKeyError : Error { using Error::Error; };
struct DegenerateScoreError : Error { using Error::Error; };
struct DegenerateMaskError : Error { using Error::Error; };
struct StalenessError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace edlab

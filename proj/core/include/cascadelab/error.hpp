#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cascadelab {

enum class ErrorKind {
    InvalidWord,
    InvalidIfs,
    CapExceeded,
    NotARotation,
    WrongClassification,
    UndeterminedGroup,
    InvalidWeightModel,
    Subcritical,
    NoRoot,
    Extinct,
    DegenerateDenominator,
    InsufficientRange,
    EmptyNeighborhood,
    EmptyBall,
    DimensionMismatch,
    EmptySlab,
    SingularPointDetected,
    ExclusionEmpty,
    InvalidArgument,
    ConfigInvalid,
    MultipleGrids,
    Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every module reports failures through this one exception type; the kind
// drives the CLI exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace cascadelab

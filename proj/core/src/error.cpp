#include "cascadelab/error.hpp"

namespace cascadelab {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidWord: return "InvalidWord";
        case ErrorKind::InvalidIfs: return "InvalidIfs";
        case ErrorKind::CapExceeded: return "CapExceeded";
        case ErrorKind::NotARotation: return "NotARotation";
        case ErrorKind::WrongClassification: return "WrongClassification";
        case ErrorKind::UndeterminedGroup: return "UndeterminedGroup";
        case ErrorKind::InvalidWeightModel: return "InvalidWeightModel";
        case ErrorKind::Subcritical: return "Subcritical";
        case ErrorKind::NoRoot: return "NoRoot";
        case ErrorKind::Extinct: return "Extinct";
        case ErrorKind::DegenerateDenominator: return "DegenerateDenominator";
        case ErrorKind::InsufficientRange: return "InsufficientRange";
        case ErrorKind::EmptyNeighborhood: return "EmptyNeighborhood";
        case ErrorKind::EmptyBall: return "EmptyBall";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::EmptySlab: return "EmptySlab";
        case ErrorKind::SingularPointDetected: return "SingularPointDetected";
        case ErrorKind::ExclusionEmpty: return "ExclusionEmpty";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::ConfigInvalid: return "ConfigInvalid";
        case ErrorKind::MultipleGrids: return "MultipleGrids";
        case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace cascadelab

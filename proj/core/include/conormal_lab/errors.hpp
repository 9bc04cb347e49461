#pragma once

#include <stdexcept>
#include <string>

namespace clab {

// Base class for every failure the library reports. The CLI maps subclasses
// onto exit codes: ConfigInvalid -> 2, numerical errors -> 3, IoError -> 4.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidPhasePoint : Error { using Error::Error; };
struct CutLocus : Error { using Error::Error; };
struct GroupReductionFailed : Error { using Error::Error; };
struct DegenerateImmersion : Error { using Error::Error; };
struct NotConormal : Error { using Error::Error; };
struct EmptyPartition : Error { using Error::Error; };
struct NotAnosov : Error { using Error::Error; };
struct DegenerateTangent : Error { using Error::Error; };
struct ModelMismatch : Error { using Error::Error; };
struct QuadratureNotConverged : Error { using Error::Error; };
struct NotHypersurface : Error { using Error::Error; };
struct AllValuesZero : Error { using Error::Error; };
struct GridTooCoarse : Error { using Error::Error; };
struct SingularOnly : Error { using Error::Error; };
struct ScaleLadderTooShort : Error { using Error::Error; };
struct UnknownSuite : Error { using Error::Error; };

struct ConfigInvalid : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace clab

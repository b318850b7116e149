#pragma once

#include <stdexcept>
#include <string>

namespace detscope {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

#define DETSCOPE_ERROR(Name)                         \
    class Name : public Error {                      \
      public:                                        \
        explicit Name(const std::string& what)       \
            : Error(std::string(#Name ": ") + what) {} \
    }

DETSCOPE_ERROR(NotDifferentiable);
DETSCOPE_ERROR(QuadratureNotConverged);
DETSCOPE_ERROR(ResolutionTooLarge);
DETSCOPE_ERROR(SingularAtEigenvalue);
DETSCOPE_ERROR(EigenSolveFailed);
DETSCOPE_ERROR(BranchJumpDetected);
DETSCOPE_ERROR(PoleHit);
DETSCOPE_ERROR(BoundaryNearZero);
DETSCOPE_ERROR(DepthLimitExceeded);
DETSCOPE_ERROR(ZeroAtOrigin);
DETSCOPE_ERROR(TailNotConverged);
DETSCOPE_ERROR(FitUnstable);
DETSCOPE_ERROR(BoxTooSmall);
DETSCOPE_ERROR(ConfigError);
DETSCOPE_ERROR(GridFileError);

#undef DETSCOPE_ERROR

} // namespace detscope

#pragma once

#include <stdexcept>
#include <string>

namespace bmx {

// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define BMX_DEFINE_ERROR(Name)                                     \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

// geometry
BMX_DEFINE_ERROR(BadParameters);
BMX_DEFINE_ERROR(PointOutsideDomain);
BMX_DEFINE_ERROR(NotNearBoundary);

// maps
BMX_DEFINE_ERROR(OnBranchCut);
BMX_DEFINE_ERROR(AtPole);
BMX_DEFINE_ERROR(QuadratureFailure);

// sim
BMX_DEFINE_ERROR(BadStart);
BMX_DEFINE_ERROR(MaxStepsExceeded);

// stats
BMX_DEFINE_ERROR(TooFewTailSamples);
BMX_DEFINE_ERROR(TargetUnreachable);
BMX_DEFINE_ERROR(NestingViolation);

// cli
BMX_DEFINE_ERROR(ConfigError);

#undef BMX_DEFINE_ERROR

}  // namespace bmx

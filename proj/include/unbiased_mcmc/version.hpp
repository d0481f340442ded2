#pragma once

#include <Eigen/Core>

#define UMCMC_STR_(x) #x
#define UMCMC_STR(x) UMCMC_STR_(x)

namespace umcmc {

inline constexpr const char* kVersion = "0.1.0";

#if defined(__clang__)
inline constexpr const char* kCompiler = "clang " __clang_version__;
#elif defined(__GNUC__)
inline constexpr const char* kCompiler = "gcc " __VERSION__;
#else
inline constexpr const char* kCompiler = "unknown";
#endif

inline constexpr const char* kEigenVersion =
    UMCMC_STR(EIGEN_WORLD_VERSION) "." UMCMC_STR(EIGEN_MAJOR_VERSION) "." UMCMC_STR(EIGEN_MINOR_VERSION);

}  // namespace umcmc

#pragma once

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <string>

namespace mpflow {

// Charts are 2- or 3-dimensional. Small fixed-capacity Eigen types keep the
// per-point field evaluations off the heap.
inline constexpr int kMaxDim = 3;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

// MatArray[m] holds the partial derivative d_m of a matrix field; only the
// first `dim` entries are meaningful.
using MatArray = std::array<Mat, kMaxDim>;

enum class ErrorCode {
    DegenerateMetric,
    DegenerateBoundary,
    BelowPotential,
    Config,
    NoExit,
    ShootingFailure,
    RepresentationMismatch,
    StepSizeUnderflow,
    LeftDomain,
    EnergyLevelMismatch,
    Precondition,
    Io,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline Vec zeros(int dim) { return Vec::Zero(dim); }

}  // namespace mpflow

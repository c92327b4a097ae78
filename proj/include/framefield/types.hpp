#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace framefield {

using Vec3 = Eigen::Vector3d;
using Vec5 = Eigen::Matrix<double, 5, 1>;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Vec15 = Eigen::Matrix<double, 15, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat5 = Eigen::Matrix<double, 5, 5>;
using Mat9 = Eigen::Matrix<double, 9, 9>;
using Mat15 = Eigen::Matrix<double, 15, 15>;
using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;

// Errors raised by the numerical kernels. Each names the violated contract.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define FRAMEFIELD_ERROR(Name)                     \
  struct Name : NumericalError {                   \
    using NumericalError::NumericalError;          \
    Name() : NumericalError(#Name) {}              \
  }

FRAMEFIELD_ERROR(NotARotation);
FRAMEFIELD_ERROR(NotUnit);
FRAMEFIELD_ERROR(NotOnVariety);
FRAMEFIELD_ERROR(NotOdeco);
FRAMEFIELD_ERROR(NotTangent);
FRAMEFIELD_ERROR(NoConvergence);
FRAMEFIELD_ERROR(AxesNotOrthonormal);
FRAMEFIELD_ERROR(DimensionMismatch);
FRAMEFIELD_ERROR(DegenerateSampling);
FRAMEFIELD_ERROR(SingularPoint);
FRAMEFIELD_ERROR(DegenerateQuery);
FRAMEFIELD_ERROR(SolverFailure);
FRAMEFIELD_ERROR(LinearSolveFailure);
FRAMEFIELD_ERROR(EmptyMesh);
FRAMEFIELD_ERROR(DegenerateTet);

#undef FRAMEFIELD_ERROR

struct ParseError : NumericalError {
  ParseError(const std::string& path, int line, const std::string& what)
      : NumericalError(path + ":" + std::to_string(line) + ": " + what) {}
};

}  // namespace framefield

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <stdexcept>
#include <string>

namespace octimls {

using Vec3 = Eigen::Vector3d;
using Point3 = Vec3;

/// Library error carrying a stable machine-readable code ("empty-input",
/// "open-mesh", ...) in addition to the human-readable message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& detail);

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

/// Thrown by operations whose failure is numerical rather than a bad input.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Shortest decimal text that reads back to the same double.
std::string format_number(double v);

inline bool all_finite(const Vec3& v) { return v.allFinite(); }

}  // namespace octimls

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace aarc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
  using Error::Error;
};

struct CapabilityError : Error {
  using Error::Error;
};

struct NonFiniteError : Error {
  using Error::Error;
};

struct ParseError : Error {
  ParseError(const std::string &msg, std::size_t line, std::size_t column, const std::string &source = {})
      : Error((source.empty() ? "" : source + ": ") + "line " + std::to_string(line) + ", column " +
              std::to_string(column) + ": " + msg),
        line(line), column(column), detail(msg) {}
  std::size_t line;
  std::size_t column;
  std::string detail;
};

inline void require_dim(const Vector &v, Eigen::Index d, const char *what) {
  if (v.size() != d)
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(d) + ", got " +
                         std::to_string(v.size()));
}

inline double cube(double x) { return x * x * x; }

} // namespace aarc

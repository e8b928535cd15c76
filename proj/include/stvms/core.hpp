#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stvms {

inline constexpr double kPi = 3.14159265358979323846;

// Global unknown vector with interleaved (u_1..u_d, p) per node.
using FieldVector = std::vector<double>;

// Space-time points carry at most 4 coordinates (x, y, [z], t).
using Point = std::array<double, 4>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

[[noreturn]] inline void fail(const std::string& msg) {
  throw std::runtime_error(msg);
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace stvms

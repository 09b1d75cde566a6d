#pragma once

#include <cstddef>

// Closed-form warm-up/decay schedule with the warm-up fraction given as an
// exact ratio num/den, so W = ceil(num * T / den) is integer arithmetic.
namespace oracle {

inline std::size_t warmup_steps(std::size_t total, std::size_t num, std::size_t den) {
  return (num * total + den - 1) / den;
}

inline double scheduled_lr(std::size_t step, std::size_t total, double peak, std::size_t num,
                           std::size_t den) {
  const std::size_t w = warmup_steps(total, num, den);
  if (step <= w) return peak * static_cast<double>(step) / static_cast<double>(w);
  return peak * static_cast<double>(total - step) / static_cast<double>(total - w);
}

}  // namespace oracle

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xoff/random.hpp"
#include "xoff/tensor.hpp"

namespace xoff {

// One named tensor inside a flat parameter vector. Vectors (biases, norm
// scales) are stored as 1 x n and flagged so they serialize as rank-1.
struct TensorSlot {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;
  bool is_vector = false;

  std::size_t size() const { return rows * cols; }
};

// Parameters and gradients are flat vectors sharing this layout, so the
// optimizer, gradient shards and finite-difference checks can treat them as
// plain arrays.
class ParameterLayout {
 public:
  std::size_t add_matrix(std::string name, std::size_t rows, std::size_t cols);
  std::size_t add_vector(std::string name, std::size_t size);

  const TensorSlot& slot(std::size_t index) const { return slots_.at(index); }
  const std::vector<TensorSlot>& slots() const { return slots_; }
  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t total() const { return total_; }

 private:
  std::vector<TensorSlot> slots_;
  std::size_t total_ = 0;
};

inline MatrixView slot_view(std::span<Scalar> flat, const TensorSlot& s) {
  return {flat.data() + s.offset, s.rows, s.cols};
}
inline ConstMatrixView slot_view(std::span<const Scalar> flat,
                                 const TensorSlot& s) {
  return {flat.data() + s.offset, s.rows, s.cols};
}

void fill_normal(std::span<Scalar> values, Scalar stddev, Rng& rng);
void fill_uniform(std::span<Scalar> values, Scalar bound, Rng& rng);

}  // namespace xoff

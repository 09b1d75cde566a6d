#include "xoff/parameters.hpp"

#include "xoff/error.hpp"

namespace xoff {

std::size_t ParameterLayout::add_matrix(std::string name, std::size_t rows,
                                        std::size_t cols) {
  if (find(name)) throw ArgumentError("duplicate parameter " + name);
  slots_.push_back({std::move(name), rows, cols, total_, false});
  total_ += rows * cols;
  return slots_.size() - 1;
}

std::size_t ParameterLayout::add_vector(std::string name, std::size_t size) {
  const std::size_t index = add_matrix(std::move(name), 1, size);
  slots_.back().is_vector = true;
  return index;
}

std::optional<std::size_t> ParameterLayout::find(std::string_view name) const {
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (slots_[i].name == name) return i;
  }
  return std::nullopt;
}

void fill_normal(std::span<Scalar> values, Scalar stddev, Rng& rng) {
  for (auto& v : values) v = stddev * rng.normal();
}

void fill_uniform(std::span<Scalar> values, Scalar bound, Rng& rng) {
  for (auto& v : values) v = rng.uniform(-bound, bound);
}

}  // namespace xoff

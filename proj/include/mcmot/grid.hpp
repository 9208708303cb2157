#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mcmot {

using Shape = std::vector<std::size_t>;
using MultiIndex = std::vector<std::size_t>;

/// Row-major strides (last axis fastest).
inline std::vector<std::size_t> row_major_strides(const Shape& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t k = shape.size(); k-- > 1;) strides[k - 1] = strides[k] * shape[k];
  return strides;
}

inline std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

/// Decompose a flat row-major index into `out` (resized to shape.size()).
inline void unflatten(std::size_t flat, const Shape& shape, MultiIndex& out) {
  out.resize(shape.size());
  for (std::size_t k = shape.size(); k-- > 0;) {
    out[k] = flat % shape[k];
    flat /= shape[k];
  }
}

inline std::size_t flatten(std::span<const std::size_t> idx, const Shape& shape) {
  std::size_t flat = 0;
  for (std::size_t k = 0; k < shape.size(); ++k) flat = flat * shape[k] + idx[k];
  return flat;
}

/// Advance a multi-index in row-major order. Returns false after the last element.
inline bool next_index(MultiIndex& idx, const Shape& shape) {
  for (std::size_t k = shape.size(); k-- > 0;) {
    if (++idx[k] < shape[k]) return true;
    idx[k] = 0;
  }
  return false;
}

/// Maps full-tensor multi-indices onto the flat index of a sub-grid that keeps
/// a sorted subset of axes. Suppressed axes contribute stride 0.
class AxisMap {
 public:
  AxisMap() = default;
  AxisMap(const Shape& full_shape, std::span<const std::size_t> kept_axes) {
    sub_shape_.reserve(kept_axes.size());
    for (auto a : kept_axes) sub_shape_.push_back(full_shape[a]);
    auto sub_strides = row_major_strides(sub_shape_);
    weight_.assign(full_shape.size(), 0);
    for (std::size_t k = 0; k < kept_axes.size(); ++k) weight_[kept_axes[k]] = sub_strides[k];
  }

  std::size_t operator()(std::span<const std::size_t> full_idx) const {
    std::size_t flat = 0;
    for (std::size_t k = 0; k < weight_.size(); ++k) flat += full_idx[k] * weight_[k];
    return flat;
  }

  const Shape& sub_shape() const { return sub_shape_; }
  std::size_t sub_size() const { return element_count(sub_shape_); }
  const std::vector<std::size_t>& weights() const { return weight_; }

 private:
  Shape sub_shape_;
  std::vector<std::size_t> weight_;
};

}  // namespace mcmot

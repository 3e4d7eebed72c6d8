#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace pflow {

inline constexpr int kMaxDim = 3;

/// Uniform periodic grid on the torus prod_i [0, L_i). Cell centres sit at
/// x = i * h; the last axis varies fastest in linear indexing.
class GridSpec {
public:
  GridSpec() = default;

  /// Validates 1 <= n <= 3, N_i >= 8, L_i > 0 and spacings within a factor 2.
  static GridSpec make(int n, const std::vector<int>& sizes, const std::vector<double>& lengths);
  static GridSpec cube(int n, int size, double length);

  [[nodiscard]] int dim() const { return n_; }
  [[nodiscard]] int size(int axis) const { return sizes_[axis]; }
  [[nodiscard]] double length(int axis) const { return lengths_[axis]; }
  [[nodiscard]] double spacing(int axis) const { return lengths_[axis] / sizes_[axis]; }
  [[nodiscard]] double min_spacing() const;
  [[nodiscard]] double min_length() const;
  [[nodiscard]] std::size_t cell_count() const { return cells_; }
  [[nodiscard]] double cell_volume() const;
  [[nodiscard]] double volume() const;
  [[nodiscard]] std::size_t stride(int axis) const { return strides_[axis]; }

  [[nodiscard]] int coord(std::size_t cell, int axis) const {
    return static_cast<int>((cell / strides_[axis]) % static_cast<std::size_t>(sizes_[axis]));
  }
  [[nodiscard]] double position(std::size_t cell, int axis) const { return coord(cell, axis) * spacing(axis); }

  [[nodiscard]] std::size_t neighbor_plus(std::size_t cell, int axis) const {
    return coord(cell, axis) == sizes_[axis] - 1 ? cell - (sizes_[axis] - 1) * strides_[axis]
                                                 : cell + strides_[axis];
  }
  [[nodiscard]] std::size_t neighbor_minus(std::size_t cell, int axis) const {
    return coord(cell, axis) == 0 ? cell + (sizes_[axis] - 1) * strides_[axis] : cell - strides_[axis];
  }
  [[nodiscard]] std::size_t linear(const std::array<int, kMaxDim>& idx) const;

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    return a.n_ == b.n_ && a.sizes_ == b.sizes_ && a.lengths_ == b.lengths_;
  }

private:
  int n_ = 0;
  std::array<int, kMaxDim> sizes_{1, 1, 1};
  std::array<double, kMaxDim> lengths_{1.0, 1.0, 1.0};
  std::array<std::size_t, kMaxDim> strides_{1, 1, 1};
  std::size_t cells_ = 0;
};

}  // namespace pflow

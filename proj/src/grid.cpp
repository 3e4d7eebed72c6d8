#include "pflow/grid.hpp"

#include "pflow/errors.hpp"

#include <algorithm>
#include <string>

namespace pflow {

GridSpec GridSpec::make(int n, const std::vector<int>& sizes, const std::vector<double>& lengths) {
  if (n < 1 || n > kMaxDim) throw ValidationError("grid.n", "must be 1, 2 or 3, got " + std::to_string(n));
  if (static_cast<int>(sizes.size()) != n) throw ValidationError("grid.sizes", "needs " + std::to_string(n) + " entries");
  if (static_cast<int>(lengths.size()) != n) {
    throw ValidationError("grid.lengths", "needs " + std::to_string(n) + " entries");
  }
  GridSpec g;
  g.n_ = n;
  for (int a = 0; a < n; ++a) {
    if (sizes[a] < 8) throw ValidationError("grid.sizes", "needs at least 8 cells per axis");
    if (!(lengths[a] > 0.0)) throw ValidationError("grid.lengths", "must be positive");
    g.sizes_[a] = sizes[a];
    g.lengths_[a] = lengths[a];
  }
  double hmin = g.spacing(0);
  double hmax = hmin;
  for (int a = 1; a < n; ++a) {
    hmin = std::min(hmin, g.spacing(a));
    hmax = std::max(hmax, g.spacing(a));
  }
  if (hmax > 2.0 * hmin) throw ValidationError("grid", "spacings must agree within a factor of 2");
  g.strides_ = {1, 1, 1};
  for (int a = n - 2; a >= 0; --a) g.strides_[a] = g.strides_[a + 1] * static_cast<std::size_t>(g.sizes_[a + 1]);
  g.cells_ = 1;
  for (int a = 0; a < n; ++a) g.cells_ *= static_cast<std::size_t>(g.sizes_[a]);
  return g;
}

GridSpec GridSpec::cube(int n, int size, double length) {
  return make(n, std::vector<int>(n, size), std::vector<double>(n, length));
}

double GridSpec::min_spacing() const {
  double h = spacing(0);
  for (int a = 1; a < n_; ++a) h = std::min(h, spacing(a));
  return h;
}

double GridSpec::min_length() const {
  double l = lengths_[0];
  for (int a = 1; a < n_; ++a) l = std::min(l, lengths_[a]);
  return l;
}

double GridSpec::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < n_; ++a) v *= spacing(a);
  return v;
}

double GridSpec::volume() const {
  double v = 1.0;
  for (int a = 0; a < n_; ++a) v *= lengths_[a];
  return v;
}

std::size_t GridSpec::linear(const std::array<int, kMaxDim>& idx) const {
  std::size_t cell = 0;
  for (int a = 0; a < n_; ++a) {
    int i = idx[a] % sizes_[a];
    if (i < 0) i += sizes_[a];
    cell += static_cast<std::size_t>(i) * strides_[a];
  }
  return cell;
}

}  // namespace pflow

#pragma once

#include <cassert>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace finslerlab {

// Dense row-major array of doubles with a runtime shape. Index order follows
// the printed index order of the object it stores: upper indices first, then
// lower indices, each group left to right.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0);
  Tensor(std::initializer_list<int> shape, double fill = 0.0)
      : Tensor(std::vector<int>(shape), fill) {}

  int rank() const { return static_cast<int>(shape_.size()); }
  const std::vector<int>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  int extent(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  template <class... Idx>
  double& operator()(Idx... idx) {
    return data_[offset({static_cast<int>(idx)...})];
  }
  template <class... Idx>
  double operator()(Idx... idx) const {
    return data_[offset({static_cast<int>(idx)...})];
  }

  double& at(std::span<const int> idx) { return data_[offset(idx)]; }
  double at(std::span<const int> idx) const { return data_[offset(idx)]; }

  double max_abs() const;
  void fill(double v);

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(double k);

 private:
  std::size_t offset(std::initializer_list<int> idx) const {
    assert(idx.size() == shape_.size());
    std::size_t off = 0;
    std::size_t axis = 0;
    for (int i : idx) {
      assert(i >= 0 && i < shape_[axis]);
      off = off * static_cast<std::size_t>(shape_[axis]) + static_cast<std::size_t>(i);
      ++axis;
    }
    return off;
  }
  std::size_t offset(std::span<const int> idx) const;

  std::vector<int> shape_;
  std::vector<double> data_;
};

Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator*(double k, const Tensor& a);

// max |a - b|; shapes must agree.
double max_abs_diff(const Tensor& a, const Tensor& b);

// max|a-b| / max(1, max|a|, max|b|): relative for large entries, absolute
// near zero.
double scaled_residual(const Tensor& a, const Tensor& b);
double scaled_residual(std::span<const double> a, std::span<const double> b);

// Calls f(idx) for every multi-index of the given shape in row-major order.
template <class F>
void for_each_index(const std::vector<int>& shape, F&& f) {
  std::vector<int> idx(shape.size(), 0);
  for (int e : shape) {
    if (e == 0) return;
  }
  while (true) {
    f(std::span<const int>(idx));
    int axis = static_cast<int>(shape.size()) - 1;
    while (axis >= 0) {
      if (++idx[static_cast<std::size_t>(axis)] < shape[static_cast<std::size_t>(axis)]) break;
      idx[static_cast<std::size_t>(axis)] = 0;
      --axis;
    }
    if (axis < 0) return;
  }
}

}  // namespace finslerlab

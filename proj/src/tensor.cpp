#include "finslerlab/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "finslerlab/errors.hpp"

namespace finslerlab {

Tensor::Tensor(std::vector<int> shape, double fill) : shape_(std::move(shape)) {
  std::size_t n = 1;
  for (int e : shape_) {
    if (e < 0) throw Error(ErrorKind::IndexOutOfRange, "negative tensor extent");
    n *= static_cast<std::size_t>(e);
  }
  data_.assign(n, fill);
}

std::size_t Tensor::offset(std::span<const int> idx) const {
  if (idx.size() != shape_.size()) throw Error(ErrorKind::IndexOutOfRange, "tensor rank mismatch");
  std::size_t off = 0;
  for (std::size_t axis = 0; axis < idx.size(); ++axis) {
    if (idx[axis] < 0 || idx[axis] >= shape_[axis]) {
      throw Error(ErrorKind::IndexOutOfRange, "tensor index out of range");
    }
    off = off * static_cast<std::size_t>(shape_[axis]) + static_cast<std::size_t>(idx[axis]);
  }
  return off;
}

double Tensor::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor& Tensor::operator+=(const Tensor& other) {
  if (other.shape_ != shape_) throw Error(ErrorKind::OperandMismatch, "tensor shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
  if (other.shape_ != shape_) throw Error(ErrorKind::OperandMismatch, "tensor shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double k) {
  for (double& v : data_) v *= k;
  return *this;
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  Tensor r = a;
  r -= b;
  return r;
}

Tensor operator+(const Tensor& a, const Tensor& b) {
  Tensor r = a;
  r += b;
  return r;
}

Tensor operator*(double k, const Tensor& a) {
  Tensor r = a;
  r *= k;
  return r;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw Error(ErrorKind::OperandMismatch, "tensor shape mismatch");
  double m = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) m = std::max(m, std::abs(da[i] - db[i]));
  return m;
}

double scaled_residual(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::OperandMismatch, "length mismatch");
  double diff = 0.0;
  double scale = 1.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  }
  return diff / scale;
}

double scaled_residual(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw Error(ErrorKind::OperandMismatch, "tensor shape mismatch");
  return scaled_residual(a.data(), b.data());
}

}  // namespace finslerlab

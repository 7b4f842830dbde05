// Copyright 2026 The nervc Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NERVC_TENSOR_HPP
#define NERVC_TENSOR_HPP

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nervc/errors.hpp"

namespace nervc {

// Dense row-major tensor. The last axis is contiguous; a [C,H,W] image stores
// channel planes back to back. Everything downstream (conv kernels, packing,
// checkpoints) assumes this layout.
template <typename S>
class TensorT {
public:
  TensorT() = default;

  explicit TensorT(std::vector<std::size_t> shape)
      : shape_(std::move(shape)), data_(checked_size(shape_), S(0)) {}

  TensorT(std::initializer_list<std::size_t> shape)
      : TensorT(std::vector<std::size_t>(shape)) {}

  static TensorT full(std::vector<std::size_t> shape, S v) {
    TensorT t(std::move(shape));
    for (auto& x : t.data_) x = v;
    return t;
  }

  static TensorT from_vector(std::vector<std::size_t> shape, std::vector<S> data) {
    TensorT t;
    t.shape_ = std::move(shape);
    if (checked_size(t.shape_) != data.size())
      throw input_error("tensor data length does not match shape");
    t.data_ = std::move(data);
    return t;
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  S* data() { return data_.data(); }
  const S* data() const { return data_.data(); }
  std::vector<S>& raw() { return data_; }
  const std::vector<S>& raw() const { return data_; }

  S& operator[](std::size_t i) { return data_[i]; }
  const S& operator[](std::size_t i) const { return data_[i]; }

  template <typename... Ix>
  S& at(Ix... ix) {
    return data_[offset_of(ix...)];
  }
  template <typename... Ix>
  const S& at(Ix... ix) const {
    return data_[offset_of(ix...)];
  }

  bool same_shape(const TensorT& o) const { return shape_ == o.shape_; }

  TensorT reshaped(std::vector<std::size_t> shape) const {
    if (checked_size(shape) != size())
      throw usage_error("reshape changes element count");
    TensorT t = *this;
    t.shape_ = std::move(shape);
    return t;
  }

  void fill(S v) {
    for (auto& x : data_) x = v;
  }

  bool all_finite() const {
    for (const S& x : data_)
      if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
  }

  std::string shape_str() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape_.size(); ++i)
      os << (i ? "," : "") << shape_[i];
    os << ']';
    return os.str();
  }

private:
  static std::size_t checked_size(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
      if (d == 0) throw input_error("zero-sized tensor axis");
      n *= d;
    }
    return shape.empty() ? 0 : n;
  }

  template <typename... Ix>
  std::size_t offset_of(Ix... ix) const {
    const std::size_t idx[] = {static_cast<std::size_t>(ix)...};
    const std::size_t r = sizeof...(ix);
    std::size_t off = 0;
    for (std::size_t a = 0; a < r; ++a) off = off * shape_[a] + idx[a];
    return off;
  }

  std::vector<std::size_t> shape_;
  std::vector<S> data_;
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;

}  // namespace nervc

#endif  // NERVC_TENSOR_HPP

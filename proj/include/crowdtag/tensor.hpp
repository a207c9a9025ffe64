// Copyright (c) 2026 The crowdtag Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace crowdtag {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

// Numpy-style broadcast aligned on trailing dimensions: each aligned pair of
// dimensions must be equal or contain a 1. Throws ShapeError otherwise.
Shape broadcast_shape(const Shape& a, const Shape& b);

// Storage aligned to 64 bytes. Vectorized kernels choose their peeling from
// the buffer address, so a fixed alignment keeps sums bit-reproducible.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), kAlign));
  }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlign); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

using Storage = std::vector<double, AlignedAllocator<double>>;

// Dense row-major double tensor. A rank-0 tensor holds one scalar.
class Tensor {
 public:
  Tensor() : values_(1, 0.0) {}
  explicit Tensor(Shape shape);
  Tensor(Shape shape, const std::vector<double>& values);

  static Tensor scalar(double v);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values);
  static Tensor filled(Shape shape, double v);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  std::size_t dim(std::size_t axis) const;

  // Rows/cols of a rank-2 tensor.
  std::size_t rows() const { return dim(0); }
  std::size_t cols() const { return dim(1); }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double at(std::size_t r, std::size_t c) const {
    return values_[r * shape_.back() + c];
  }
  double& at(std::size_t r, std::size_t c) {
    return values_[r * shape_.back() + c];
  }

  // Value of a single-element tensor.
  double item() const;

  Tensor reshaped(Shape shape) const;

  void fill(double v);
  // this += other, shapes must match exactly.
  void add_inplace(const Tensor& other, double scale = 1.0);

  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  struct Adopt {};
  Tensor(Adopt, Shape shape, Storage values);
  void check_shape() const;

  Shape shape_;
  Storage values_;
};

}  // namespace crowdtag

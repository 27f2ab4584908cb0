// Copyright 2026 The gramattn Authors
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

#include <algorithm>
#include <cstddef>
#include <span>
#include <type_traits>
#include <vector>

namespace gramattn {

// Non-owning row-major matrix view.
template <typename T>
struct MatView {
  T* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;

  T& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::span<T> row(std::size_t i) const { return {data + i * cols, cols}; }
  std::size_t size() const noexcept { return rows * cols; }

  operator MatView<const T>() const requires(!std::is_const_v<T>) { return {data, rows, cols}; }
};

template <typename T>
using ConstMatView = MatView<const T>;

template <typename T>
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, T fill = T(0)) : rows(r), cols(c), data(r * c, fill) {}

  T& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::span<T> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const T> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

  MatView<T> view() { return {data.data(), rows, cols}; }
  ConstMatView<T> view() const { return {data.data(), rows, cols}; }
  ConstMatView<T> cview() const { return {data.data(), rows, cols}; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

// c (m x n) [+]= a (m x k) * b (k x n)
template <typename T>
void matmul(ConstMatView<T> a, ConstMatView<T> b, MatView<T> c, bool accumulate = false) {
  if (!accumulate) std::fill(c.data, c.data + c.size(), T(0));
  for (std::size_t i = 0; i < a.rows; ++i) {
    T* crow = c.data + i * c.cols;
    for (std::size_t p = 0; p < a.cols; ++p) {
      const T av = a.data[i * a.cols + p];
      const T* brow = b.data + p * b.cols;
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
    }
  }
}

// c (m x n) [+]= a (m x k) * b^T, b is (n x k)
template <typename T>
void matmul_bt(ConstMatView<T> a, ConstMatView<T> b, MatView<T> c, bool accumulate = false) {
  for (std::size_t i = 0; i < a.rows; ++i) {
    const T* arow = a.data + i * a.cols;
    for (std::size_t j = 0; j < b.rows; ++j) {
      const T* brow = b.data + j * b.cols;
      T s = 0;
      for (std::size_t p = 0; p < a.cols; ++p) s += arow[p] * brow[p];
      T& out = c.data[i * c.cols + j];
      out = accumulate ? out + s : s;
    }
  }
}

// c (m x n) [+]= a^T * b, a is (k x m), b is (k x n)
template <typename T>
void matmul_at(ConstMatView<T> a, ConstMatView<T> b, MatView<T> c, bool accumulate = false) {
  if (!accumulate) std::fill(c.data, c.data + c.size(), T(0));
  for (std::size_t p = 0; p < a.rows; ++p) {
    const T* arow = a.data + p * a.cols;
    const T* brow = b.data + p * b.cols;
    for (std::size_t i = 0; i < a.cols; ++i) {
      const T av = arow[i];
      T* crow = c.data + i * c.cols;
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace gramattn

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <new>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sciql {

/// Cache-line aligned storage. Eigen's vectorized kernels peel differently
/// depending on the start address, so unaligned buffers make float results
/// depend on where malloc happened to put them.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

using FloatBuffer = std::vector<float, AlignedAllocator<float>>;

/// Row-major float tensor. Shape product always equals data length.
struct DenseArray {
  std::vector<std::size_t> shape;
  FloatBuffer data;

  DenseArray() = default;

  explicit DenseArray(std::vector<std::size_t> dims, float fill = 0.0f)
      : shape(std::move(dims)), data(element_count(shape), fill) {}

  DenseArray(std::vector<std::size_t> dims, FloatBuffer values)
      : shape(std::move(dims)), data(std::move(values)) {
    if (element_count(shape) != data.size()) {
      throw std::invalid_argument("DenseArray: shape product " +
                                  std::to_string(element_count(shape)) +
                                  " != data length " +
                                  std::to_string(data.size()));
    }
  }

  static std::size_t element_count(const std::vector<std::size_t>& dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                           std::multiplies<>());
  }

  [[nodiscard]] std::size_t size() const { return data.size(); }
  [[nodiscard]] std::size_t rank() const { return shape.size(); }
  [[nodiscard]] std::size_t rows() const { return shape.empty() ? 1 : shape.front(); }
  [[nodiscard]] std::size_t cols() const {
    return shape.empty() ? 1 : data.size() / std::max<std::size_t>(shape.front(), 1);
  }

  float& operator[](std::size_t i) { return data[i]; }
  float operator[](std::size_t i) const { return data[i]; }

  float& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  [[nodiscard]] float at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  std::span<float> row(std::size_t r) { return {data.data() + r * cols(), cols()}; }
  [[nodiscard]] std::span<const float> row(std::size_t r) const {
    return {data.data() + r * cols(), cols()};
  }

  [[nodiscard]] bool all_finite() const {
    for (float v : data) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  [[nodiscard]] bool same_shape(const DenseArray& other) const { return shape == other.shape; }

  bool operator==(const DenseArray&) const = default;
};

inline std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

}  // namespace sciql

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace egt {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Dense row-major float64 tensor. Value semantics; copies are deep.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value) { return Tensor({}, {value}); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::vector<double>& storage() noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  double& at(std::initializer_list<std::size_t> index);
  double at(std::initializer_list<std::size_t> index) const;

  // Size of the trailing axis (1 for scalars).
  std::size_t last_dim() const noexcept { return shape_.empty() ? 1 : shape_.back(); }
  // Number of slices along the trailing axis.
  std::size_t rows() const noexcept { return shape_.empty() ? 1 : data_.size() / shape_.back(); }

  double item() const;
  void fill(double value);
  Tensor reshaped(Shape shape) const;

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Boolean tensor used for node, pair, and target masks.
class Mask {
 public:
  Mask() = default;
  explicit Mask(Shape shape, bool fill = false);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool operator[](std::size_t i) const noexcept { return data_[i] != 0; }
  void set(std::size_t i, bool value) noexcept { data_[i] = value ? 1 : 0; }
  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::size_t count() const noexcept;

  bool operator==(const Mask& other) const = default;

 private:
  Shape shape_;
  std::vector<std::uint8_t> data_;
};

bool all_finite(const Tensor& t) noexcept;
// Throws egt::Error naming `where` when any entry is NaN or infinite.
void check_finite(const Tensor& t, std::string_view where);

double max_abs(const Tensor& t) noexcept;
double max_abs_diff(const Tensor& a, const Tensor& b);
double frobenius_norm(const Tensor& t) noexcept;

// 2-D helpers used by the SVD and positional-encoding code.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor identity(std::size_t n);

}  // namespace egt

#include "egt/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "egt/error.hpp"

namespace egt {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) {
    n *= d;
  }
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    out << (i ? "," : "") << shape[i];
  }
  out << ']';
  return out.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  require(shape_size(shape_) == data_.size(),
          "tensor data length " + std::to_string(data_.size()) + " does not match shape " +
              shape_to_string(shape_));
}

namespace {
std::size_t flat_index(const Shape& shape, std::initializer_list<std::size_t> index) {
  require(index.size() == shape.size(), "index rank does not match tensor rank");
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (std::size_t i : index) {
    require(i < shape[axis], "index out of range");
    flat = flat * shape[axis] + i;
    ++axis;
  }
  return flat;
}
}  // namespace

double& Tensor::at(std::initializer_list<std::size_t> index) { return data_[flat_index(shape_, index)]; }

double Tensor::at(std::initializer_list<std::size_t> index) const { return data_[flat_index(shape_, index)]; }

double Tensor::item() const {
  require(data_.size() == 1, "item() on tensor with " + std::to_string(data_.size()) + " entries");
  return data_[0];
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Tensor Tensor::reshaped(Shape shape) const {
  require(shape_size(shape) == data_.size(), "reshape to " + shape_to_string(shape) + " changes size");
  return Tensor(std::move(shape), data_);
}

Mask::Mask(Shape shape, bool fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill ? 1 : 0) {}

std::size_t Mask::count() const noexcept {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

bool all_finite(const Tensor& t) noexcept {
  return std::all_of(t.data().begin(), t.data().end(), [](double v) { return std::isfinite(v); });
}

void check_finite(const Tensor& t, std::string_view where) {
  if (!all_finite(t)) {
    throw NumericError("non-finite value produced by " + std::string(where));
  }
}

double max_abs(const Tensor& t) noexcept {
  double m = 0.0;
  for (double v : t.data()) {
    m = std::max(m, std::abs(v));
  }
  return m;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(),
          "shape mismatch " + shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

double frobenius_norm(const Tensor& t) noexcept {
  double s = 0.0;
  for (double v : t.data()) {
    s += v * v;
  }
  return std::sqrt(s);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.rank() == 2 && b.rank() == 2 && a.dim(1) == b.dim(0), "matmul shape mismatch");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor c({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      for (std::size_t j = 0; j < n; ++j) {
        c[i * n + j] += aip * b[p * n + j];
      }
    }
  }
  return c;
}

Tensor transpose(const Tensor& a) {
  require(a.rank() == 2, "transpose expects a matrix");
  const std::size_t m = a.dim(0), n = a.dim(1);
  Tensor t({n, m});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      t[j * m + i] = a[i * n + j];
    }
  }
  return t;
}

Tensor identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    t[i * n + i] = 1.0;
  }
  return t;
}

}  // namespace egt

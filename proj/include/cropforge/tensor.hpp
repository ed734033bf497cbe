#ifndef CROPFORGE_TENSOR_HPP
#define CROPFORGE_TENSOR_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace cropforge {

using Shape = std::vector<int>;

// Dense row-major f64 tensor. `grad` is empty until a backward pass (or an
// explicit ensure_grad) touches the tensor; when present it has the same
// length as `data`.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, double value);

  const Shape& shape() const { return shape_; }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  bool has_grad() const { return !grad_.empty(); }
  // Allocates a zeroed gradient buffer if absent.
  std::vector<double>& ensure_grad();
  std::vector<double>& grad() { return grad_; }
  const std::vector<double>& grad() const { return grad_; }
  void zero_grad();
  void drop_grad() { grad_.clear(); }

  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  bool all_finite() const;
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  // "[2, 3, 4]" style, for error messages.
  std::string shape_str() const;

 private:
  Shape shape_;
  std::vector<double> data_;
  std::vector<double> grad_;
};

std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);

}  // namespace cropforge

#endif  // CROPFORGE_TENSOR_HPP

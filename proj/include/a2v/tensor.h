#ifndef A2V_TENSOR_H_
#define A2V_TENSOR_H_

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace a2v {

// Dense row-major double tensor. Rank is 1..3 in practice; the last axis is
// contiguous. Everything in the training stack runs in 64-bit so gradient
// checks against central differences are meaningful.
struct Tensor {
  std::vector<int64_t> shape;
  std::vector<double> v;

  Tensor() = default;
  Tensor(std::initializer_list<int64_t> s, double fill = 0.0);
  explicit Tensor(const std::vector<int64_t>& s, double fill = 0.0);

  static Tensor zeros(const std::vector<int64_t>& s) { return Tensor(s, 0.0); }
  static Tensor full(const std::vector<int64_t>& s, double x) {
    return Tensor(s, x);
  }
  static Tensor from_vector(const std::vector<double>& data);
  static Tensor matrix(int64_t rows, int64_t cols, double fill = 0.0);

  int64_t numel() const { return static_cast<int64_t>(v.size()); }
  int64_t rank() const { return static_cast<int64_t>(shape.size()); }
  int64_t rows() const { return shape.empty() ? 0 : shape[0]; }
  int64_t cols() const { return shape.size() < 2 ? 0 : shape[1]; }

  double& at(int64_t i) { return v[static_cast<size_t>(i)]; }
  double at(int64_t i) const { return v[static_cast<size_t>(i)]; }
  double& at(int64_t r, int64_t c) {
    return v[static_cast<size_t>(r * shape[1] + c)];
  }
  double at(int64_t r, int64_t c) const {
    return v[static_cast<size_t>(r * shape[1] + c)];
  }

  double* data() { return v.data(); }
  const double* data() const { return v.data(); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  void fill(double x);
};

int64_t numel_of(const std::vector<int64_t>& shape);

}  // namespace a2v

#endif  // A2V_TENSOR_H_

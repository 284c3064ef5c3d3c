#include "a2v/tensor.h"

#include <algorithm>

#include "a2v/error.h"

namespace a2v {

int64_t numel_of(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (auto d : shape) {
    if (d < 0) throw ShapeError("negative tensor dimension");
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::initializer_list<int64_t> s, double fill)
    : shape(s), v(static_cast<size_t>(numel_of(shape)), fill) {}

Tensor::Tensor(const std::vector<int64_t>& s, double fill)
    : shape(s), v(static_cast<size_t>(numel_of(shape)), fill) {}

Tensor Tensor::from_vector(const std::vector<double>& data) {
  Tensor t;
  t.shape = {static_cast<int64_t>(data.size())};
  t.v = data;
  return t;
}

Tensor Tensor::matrix(int64_t rows, int64_t cols, double fill) {
  return Tensor({rows, cols}, fill);
}

void Tensor::fill(double x) { std::fill(v.begin(), v.end(), x); }

}  // namespace a2v

#include "gaga/tensor/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "gaga/common/error.hpp"

namespace gaga::tensor {

std::size_t numel_of(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream ss;
  ss << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) ss << (i ? "x" : "") << shape[i];
  ss << ']';
  return ss.str();
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> data, bool requires_grad) {
  for (auto d : shape)
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_str(shape));
  if (data.size() != numel_of(shape))
    throw ShapeError("data length " + std::to_string(data.size()) + " does not match shape " + shape_str(shape));
  impl_ = std::make_shared<Impl>();
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
}

template <typename T>
BasicTensor<T> BasicTensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T{0}, requires_grad);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::full(Shape shape, T value, bool requires_grad) {
  const auto n = numel_of(shape);
  return BasicTensor(std::move(shape), std::vector<T>(n, value), requires_grad);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::scalar(T value, bool requires_grad) {
  return BasicTensor({1}, {value}, requires_grad);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::matrix(std::initializer_list<std::initializer_list<T>> rows, bool requires_grad) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<T> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return BasicTensor({r, c}, std::move(data), requires_grad);
}

template <typename T>
std::size_t BasicTensor<T>::rows() const {
  const auto& s = impl_->shape;
  if (s.size() == 2) return s[0];
  if (s.size() <= 1) return 1;
  throw ShapeError("rows() needs a rank <= 2 tensor, got " + shape_str(s));
}

template <typename T>
std::size_t BasicTensor<T>::cols() const {
  const auto& s = impl_->shape;
  if (s.size() == 2) return s[1];
  if (s.size() == 1) return s[0];
  if (s.empty()) return 1;
  throw ShapeError("cols() needs a rank <= 2 tensor, got " + shape_str(s));
}

template <typename T>
T BasicTensor<T>::item() const {
  if (numel() != 1) throw ContractError("item() on non-scalar tensor " + shape_str(shape()));
  return impl_->data[0];
}

template <typename T>
std::span<T> BasicTensor<T>::mutable_grad() const {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), T{0});
  return impl_->grad;
}

template <typename T>
void BasicTensor<T>::zero_grad() const {
  std::fill(impl_->grad.begin(), impl_->grad.end(), T{0});
}

template <typename T>
BasicTensor<T> BasicTensor<T>::detach() const {
  return BasicTensor(impl_->shape, impl_->data, false);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::clone() const {
  BasicTensor out(impl_->shape, impl_->data, impl_->requires_grad);
  out.impl_->grad = impl_->grad;
  return out;
}

template class BasicTensor<float>;
template class BasicTensor<double>;

}  // namespace gaga::tensor

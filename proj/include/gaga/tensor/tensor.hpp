#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gaga/kernels/kernels.hpp"

namespace gaga::tensor {

using Shape = std::vector<std::size_t>;

std::size_t numel_of(const Shape& shape);
std::string shape_str(const Shape& shape);

// Reference-counted dense tensor. Copies share storage; `clone()` deep-copies.
// Training runs on BasicTensor<float>; the gradient checker instantiates the
// same code with double.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  BasicTensor(Shape shape, std::vector<T> data, bool requires_grad = false);

  static BasicTensor zeros(Shape shape, bool requires_grad = false);
  static BasicTensor full(Shape shape, T value, bool requires_grad = false);
  static BasicTensor scalar(T value, bool requires_grad = false);
  static BasicTensor matrix(std::initializer_list<std::initializer_list<T>> rows, bool requires_grad = false);

  bool defined() const noexcept { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t numel() const { return impl_->data.size(); }
  std::size_t rank() const { return impl_->shape.size(); }
  // 2-D accessors; a 1-D tensor reads as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const T> data() const { return impl_->data; }
  std::span<T> mutable_data() { return impl_->data; }
  T item() const;
  T at(std::size_t r, std::size_t c) const { return impl_->data[r * cols() + c]; }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool on) { impl_->requires_grad = on; }
  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const T> grad() const { return impl_->grad; }
  // Allocates a zero buffer on first use. Gradient buffers are bookkeeping on
  // the shared storage, so these are callable through const handles.
  std::span<T> mutable_grad() const;
  void zero_grad() const;

  // Same values, fresh storage, no gradient tracking.
  BasicTensor detach() const;
  BasicTensor clone() const;

  // Identity of the underlying storage.
  const void* id() const noexcept { return impl_.get(); }

  kernels::MatView<T> view() const { return {impl_->data.data(), rows(), cols()}; }
  kernels::MutMatView<T> mut_view() { return {impl_->data.data(), rows(), cols()}; }

 private:
  struct Impl {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

extern template class BasicTensor<float>;
extern template class BasicTensor<double>;

// Copies values between precisions (used to run float models in double).
template <typename To, typename From>
BasicTensor<To> cast(const BasicTensor<From>& t, bool requires_grad = false) {
  std::vector<To> out(t.data().begin(), t.data().end());
  return BasicTensor<To>(t.shape(), std::move(out), requires_grad);
}

}  // namespace gaga::tensor

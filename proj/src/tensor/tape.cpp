#include "gaga/tensor/tape.hpp"

#include <algorithm>

#include "gaga/common/error.hpp"

namespace gaga::tensor {

template <typename T>
bool BasicTape<T>::record(std::string op, std::vector<BasicTensor<T>> inputs, BasicTensor<T>& output,
                          BackwardFn fn) {
  const bool any = std::any_of(inputs.begin(), inputs.end(),
                               [](const BasicTensor<T>& t) { return t.defined() && t.requires_grad(); });
  if (!any) return false;
  output.set_requires_grad(true);
  records_.push_back(Record{std::move(op), std::move(inputs), output, std::move(fn)});
  return true;
}

template <typename T>
void BasicTape<T>::backward(BasicTensor<T> loss) {
  if (loss.numel() != 1)
    throw ContractError("backward needs a scalar loss, got shape " + shape_str(loss.shape()));
  const bool on_tape = std::any_of(records_.begin(), records_.end(),
                                   [&](const Record& r) { return r.output.id() == loss.id(); });
  if (!on_tape && !loss.requires_grad())
    throw ContractError("backward: loss is not produced by this tape");

  for (auto& r : records_) {
    auto out = r.output;
    if (out.has_grad()) out.zero_grad();
  }
  loss.mutable_grad()[0] += T{1};
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    if (!it->output.has_grad()) continue;
    it->backward();
  }
}

template class BasicTape<float>;
template class BasicTape<double>;

}  // namespace gaga::tensor

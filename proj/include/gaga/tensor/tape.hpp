#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gaga/tensor/tensor.hpp"

namespace gaga::tensor {

// Records differentiable operations in execution order. Ops only record when
// at least one input requires a gradient; their output then requires one too.
//
// A tape and the tensors it references belong to one worker. Independent
// tapes can run concurrently.
template <typename T>
class BasicTape {
 public:
  // Reads the output's gradient and adds into the inputs' gradient buffers.
  using BackwardFn = std::function<void()>;

  struct Record {
    std::string op;
    std::vector<BasicTensor<T>> inputs;
    BasicTensor<T> output;
    BackwardFn backward;
  };

  // Returns true if the op was recorded (some input requires grad).
  bool record(std::string op, std::vector<BasicTensor<T>> inputs, BasicTensor<T>& output, BackwardFn fn);

  // Seeds d(loss)/d(loss) = 1 and replays the tape in reverse. Gradients of
  // op outputs are reset first; leaf gradients accumulate (+=), so callers
  // zero parameter grads between steps.
  void backward(BasicTensor<T> loss);

  std::size_t size() const noexcept { return records_.size(); }
  const std::vector<Record>& records() const noexcept { return records_; }
  void clear() { records_.clear(); }

 private:
  std::vector<Record> records_;
};

using Tape = BasicTape<float>;
using TapeD = BasicTape<double>;

extern template class BasicTape<float>;
extern template class BasicTape<double>;

}  // namespace gaga::tensor

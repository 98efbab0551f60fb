#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace srnn {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

struct Node;
using NodePtr = std::shared_ptr<Node>;

// One recorded value in the computation graph. Leaves carry parameters or
// inputs; interior nodes remember how to push their gradient into their
// parents.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated on demand, same length as value
  bool requires_grad = false;
  bool leaf = true;
  const char* op = "leaf";
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backward;

  std::size_t numel() const { return value.size(); }
  void ensure_grad();
  void add_grad(const std::vector<double>& g);
};

// Value handle. Cheap to copy; two copies alias the same storage.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr n) : node_(std::move(n)) {}

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double v);
  static Tensor from(Shape shape, std::vector<double> values);
  static Tensor scalar(double v);
  // Trainable leaf: gradients accumulate here across backward passes.
  static Tensor param(Shape shape, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t numel() const { return node_->numel(); }
  std::size_t rows() const;
  std::size_t cols() const;

  const std::vector<double>& value() const { return node_->value; }
  std::vector<double>& value() { return node_->value; }
  const std::vector<double>& grad() const { return node_->grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  void zero_grad();

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on);

  double item() const;  // scalar tensors only

  const NodePtr& node() const { return node_; }

 private:
  NodePtr node_;
};

bool all_finite(const std::vector<double>& v);

}  // namespace srnn

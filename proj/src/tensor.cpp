#include "srnn/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace srnn {

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (auto e : s) n *= e;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ',';
    os << s[i];
  }
  os << ']';
  return os.str();
}

void Node::ensure_grad() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
}

void Node::add_grad(const std::vector<double>& g) {
  ensure_grad();
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g[i];
}

static NodePtr make_value_node(Shape shape, std::vector<double> values) {
  if (shape_numel(shape) != values.size())
    throw std::invalid_argument("tensor: shape " + shape_str(shape) +
                                " does not match " +
                                std::to_string(values.size()) + " values");
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(values);
  return n;
}

Tensor Tensor::zeros(Shape shape) {
  std::vector<double> v(shape_numel(shape), 0.0);
  return Tensor(make_value_node(std::move(shape), std::move(v)));
}

Tensor Tensor::full(Shape shape, double value) {
  std::vector<double> v(shape_numel(shape), value);
  return Tensor(make_value_node(std::move(shape), std::move(v)));
}

Tensor Tensor::from(Shape shape, std::vector<double> values) {
  return Tensor(make_value_node(std::move(shape), std::move(values)));
}

Tensor Tensor::scalar(double v) { return from({1}, {v}); }

Tensor Tensor::param(Shape shape, std::vector<double> values) {
  Tensor t = from(std::move(shape), std::move(values));
  t.set_requires_grad(true);
  return t;
}

std::size_t Tensor::rows() const {
  const Shape& s = node_->shape;
  if (s.size() != 2) throw std::invalid_argument("rows(): tensor is not 2-d");
  return s[0];
}

std::size_t Tensor::cols() const {
  const Shape& s = node_->shape;
  if (s.size() != 2) throw std::invalid_argument("cols(): tensor is not 2-d");
  return s[1];
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) node_->grad.assign(node_->value.size(), 0.0);
}

void Tensor::set_requires_grad(bool on) { node_->requires_grad = on; }

double Tensor::item() const {
  if (numel() != 1)
    throw std::invalid_argument("item(): tensor has " +
                                std::to_string(numel()) + " elements");
  return node_->value[0];
}

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace srnn

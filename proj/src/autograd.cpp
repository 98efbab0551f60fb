#include "srnn/autograd.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace srnn {

namespace {

thread_local Tape* g_active_tape = nullptr;

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " +
                              shape_str(a) + " and " + shape_str(b));
}

bool is_scalar(const Tensor& t) { return t.numel() == 1; }

// Creates the output node; records it on the active tape when any input
// carries gradient, otherwise returns a plain value node (eval path).
Tensor make_op(const char* op, const std::vector<Tensor>& inputs, Shape shape,
               std::vector<double> value,
               std::function<void(Node&, std::span<const NodePtr>)> pullback) {
  auto out = std::make_shared<Node>();
  out->shape = std::move(shape);
  out->value = std::move(value);

  Tape* tape = Tape::active();
  bool needs = false;
  if (tape)
    for (const auto& in : inputs)
      if (in.node()->requires_grad) needs = true;
  if (!needs) return Tensor(std::move(out));

  out->requires_grad = true;
  out->leaf = false;
  out->op = op;
  out->parents.reserve(inputs.size());
  for (const auto& in : inputs) out->parents.push_back(in.node());
  out->backward = [pb = std::move(pullback)](Node& self) {
    pb(self, std::span<const NodePtr>(self.parents));
  };
  tape->append(out);
  return Tensor(std::move(out));
}

}  // namespace

Tape* Tape::active() { return g_active_tape; }

void Tape::append(NodePtr n) { nodes_.push_back(std::move(n)); }

TapeScope::TapeScope(Tape& t) : prev_(g_active_tape) { g_active_tape = &t; }
TapeScope::~TapeScope() { g_active_tape = prev_; }

void Tape::backward(const Tensor& loss, bool release_memory) {
  if (loss.numel() != 1)
    throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                shape_str(loss.shape()));
  Node* root = loss.node().get();
  if (!root->requires_grad)
    throw std::invalid_argument(
        "backward: loss does not depend on any tracked tensor");

  // Locate the loss on this tape; everything after it is irrelevant.
  std::size_t start = nodes_.size();
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    if (nodes_[i].get() == root) {
      start = i;
      break;
    }
  }
  if (start == nodes_.size())
    throw std::invalid_argument("backward: loss was not recorded on this tape");

  root->ensure_grad();
  root->grad[0] = 1.0;

  // Reverse sweep. Every consumer of a node appears later on the tape, so
  // by the time a node runs its pullback its own grad is complete.
  for (std::size_t i = start + 1; i-- > 0;) {
    Node& n = *nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(n);
    if (release_memory && !n.leaf) {
      n.grad = {};
      n.value = {};
      n.backward = nullptr;
      n.parents.clear();
    }
  }
}

Tensor record(const char* op, std::vector<Tensor> inputs, Shape out_shape,
              std::vector<double> out_value,
              std::function<void(Node&, std::span<const NodePtr>)> pullback) {
  if (shape_numel(out_shape) != out_value.size())
    throw std::invalid_argument(std::string(op) + ": output shape " +
                                shape_str(out_shape) + " does not match " +
                                std::to_string(out_value.size()) + " values");
  return make_op(op, inputs, std::move(out_shape), std::move(out_value),
                 std::move(pullback));
}

// ---- matmul ---------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0])
    shape_error("matmul", sa, sb);
  const std::size_t m = sa[0], k = sa[1], n = sb[1];

  std::vector<double> out(m * n);
  {
    CMapMat A(a.value().data(), m, k);
    CMapMat B(b.value().data(), k, n);
    MapMat C(out.data(), m, n);
    C.noalias() = A * B;
  }

  return make_op("matmul", {a, b}, {m, n}, std::move(out),
                 [m, k, n](Node& self, std::span<const NodePtr> in) {
                   CMapMat G(self.grad.data(), m, n);
                   const Node& na = *in[0];
                   const Node& nb = *in[1];
                   if (na.requires_grad) {
                     in[0]->ensure_grad();
                     MapMat dA(in[0]->grad.data(), m, k);
                     CMapMat B(nb.value.data(), k, n);
                     dA.noalias() += G * B.transpose();
                   }
                   if (nb.requires_grad) {
                     in[1]->ensure_grad();
                     MapMat dB(in[1]->grad.data(), k, n);
                     CMapMat A(na.value.data(), m, k);
                     dB.noalias() += A.transpose() * G;
                   }
                 });
}

// ---- add / sub / mul ------------------------------------------------------

namespace {

enum class BinKind { add, sub, mul };

Tensor binary_elemwise(const char* name, BinKind kind, const Tensor& a,
                       const Tensor& b) {
  const bool bs = is_scalar(b);
  if (!bs && a.shape() != b.shape()) shape_error(name, a.shape(), b.shape());

  const auto& av = a.value();
  const auto& bv = b.value();
  std::vector<double> out(av.size());
  switch (kind) {
    case BinKind::add:
      if (bs)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[0];
      else
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
      break;
    case BinKind::sub:
      if (bs)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[0];
      else
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
      break;
    case BinKind::mul:
      if (bs)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[0];
      else
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
      break;
  }

  return make_op(
      name, {a, b}, a.shape(), std::move(out),
      [kind, bs](Node& self, std::span<const NodePtr> in) {
        Node& na = *in[0];
        Node& nb = *in[1];
        if (na.requires_grad) {
          na.ensure_grad();
          if (kind == BinKind::mul) {
            if (bs)
              for (std::size_t i = 0; i < self.grad.size(); ++i)
                na.grad[i] += self.grad[i] * nb.value[0];
            else
              for (std::size_t i = 0; i < self.grad.size(); ++i)
                na.grad[i] += self.grad[i] * nb.value[i];
          } else {
            for (std::size_t i = 0; i < self.grad.size(); ++i)
              na.grad[i] += self.grad[i];
          }
        }
        if (nb.requires_grad) {
          nb.ensure_grad();
          const double sign = (kind == BinKind::sub) ? -1.0 : 1.0;
          if (kind == BinKind::mul) {
            if (bs) {
              double acc = 0.0;
              for (std::size_t i = 0; i < self.grad.size(); ++i)
                acc += self.grad[i] * na.value[i];
              nb.grad[0] += acc;
            } else {
              for (std::size_t i = 0; i < self.grad.size(); ++i)
                nb.grad[i] += self.grad[i] * na.value[i];
            }
          } else if (bs) {
            double acc = 0.0;
            for (double g : self.grad) acc += g;
            nb.grad[0] += sign * acc;
          } else {
            for (std::size_t i = 0; i < self.grad.size(); ++i)
              nb.grad[i] += sign * self.grad[i];
          }
        }
      });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  if (is_scalar(a) && !is_scalar(b)) return add(b, a);
  return binary_elemwise("add", BinKind::add, a, b);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_elemwise("sub", BinKind::sub, a, b);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (is_scalar(a) && !is_scalar(b)) return mul(b, a);
  return binary_elemwise("mul", BinKind::mul, a, b);
}

// ---- row-vector broadcasts ------------------------------------------------

namespace {

Tensor rowvec_op(const char* name, bool multiply, const Tensor& m,
                 const Tensor& v) {
  if (m.shape().size() != 2 || v.shape().size() != 1 ||
      m.shape()[1] != v.shape()[0])
    shape_error(name, m.shape(), v.shape());
  const std::size_t r = m.shape()[0], c = m.shape()[1];

  const auto& mv = m.value();
  const auto& vv = v.value();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      out[i * c + j] =
          multiply ? mv[i * c + j] * vv[j] : mv[i * c + j] + vv[j];

  return make_op(name, {m, v}, m.shape(), std::move(out),
                 [multiply, r, c](Node& self, std::span<const NodePtr> in) {
                   Node& nm = *in[0];
                   Node& nv = *in[1];
                   if (nm.requires_grad) {
                     nm.ensure_grad();
                     if (multiply) {
                       for (std::size_t i = 0; i < r; ++i)
                         for (std::size_t j = 0; j < c; ++j)
                           nm.grad[i * c + j] +=
                               self.grad[i * c + j] * nv.value[j];
                     } else {
                       for (std::size_t i = 0; i < r * c; ++i)
                         nm.grad[i] += self.grad[i];
                     }
                   }
                   if (nv.requires_grad) {
                     nv.ensure_grad();
                     for (std::size_t j = 0; j < c; ++j) {
                       double acc = 0.0;
                       for (std::size_t i = 0; i < r; ++i)
                         acc += multiply
                                    ? self.grad[i * c + j] * nm.value[i * c + j]
                                    : self.grad[i * c + j];
                       nv.grad[j] += acc;
                     }
                   }
                 });
}

}  // namespace

Tensor add_rowvec(const Tensor& m, const Tensor& v) {
  return rowvec_op("add_rowvec", false, m, v);
}

Tensor mul_rowvec(const Tensor& m, const Tensor& v) {
  return rowvec_op("mul_rowvec", true, m, v);
}

// ---- unary ----------------------------------------------------------------

Tensor affine(const Tensor& x, double scale, double shift) {
  const auto& xv = x.value();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * xv[i] + shift;
  return make_op("affine", {x}, x.shape(), std::move(out),
                 [scale](Node& self, std::span<const NodePtr> in) {
                   if (!in[0]->requires_grad) return;
                   in[0]->ensure_grad();
                   for (std::size_t i = 0; i < self.grad.size(); ++i)
                     in[0]->grad[i] += scale * self.grad[i];
                 });
}

Tensor scalar_mul(const Tensor& x, double c) { return affine(x, c, 0.0); }
Tensor scalar_add(const Tensor& x, double c) { return affine(x, 1.0, c); }

Tensor reciprocal(const Tensor& x) {
  const auto& xv = x.value();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / xv[i];
  return make_op("reciprocal", {x}, x.shape(), std::move(out),
                 [](Node& self, std::span<const NodePtr> in) {
                   if (!in[0]->requires_grad) return;
                   in[0]->ensure_grad();
                   for (std::size_t i = 0; i < self.grad.size(); ++i)
                     in[0]->grad[i] -=
                         self.grad[i] * self.value[i] * self.value[i];
                 });
}

Tensor exp_t(const Tensor& x) {
  const auto& xv = x.value();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(xv[i]);
  return make_op("exp", {x}, x.shape(), std::move(out),
                 [](Node& self, std::span<const NodePtr> in) {
                   if (!in[0]->requires_grad) return;
                   in[0]->ensure_grad();
                   for (std::size_t i = 0; i < self.grad.size(); ++i)
                     in[0]->grad[i] += self.grad[i] * self.value[i];
                 });
}

Tensor sigmoid(const Tensor& x) {
  const auto& xv = x.value();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = 1.0 / (1.0 + std::exp(-xv[i]));
  return make_op("sigmoid", {x}, x.shape(), std::move(out),
                 [](Node& self, std::span<const NodePtr> in) {
                   if (!in[0]->requires_grad) return;
                   in[0]->ensure_grad();
                   for (std::size_t i = 0; i < self.grad.size(); ++i) {
                     const double s = self.value[i];
                     in[0]->grad[i] += self.grad[i] * s * (1.0 - s);
                   }
                 });
}

Tensor relu(const Tensor& x) {
  const auto& xv = x.value();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  return make_op("relu", {x}, x.shape(), std::move(out),
                 [](Node& self, std::span<const NodePtr> in) {
                   if (!in[0]->requires_grad) return;
                   in[0]->ensure_grad();
                   for (std::size_t i = 0; i < self.grad.size(); ++i)
                     if (in[0]->value[i] > 0.0)
                       in[0]->grad[i] += self.grad[i];
                 });
}

Tensor maximum(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("maximum", a.shape(), b.shape());
  const auto& av = a.value();
  const auto& bv = b.value();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = av[i] >= bv[i] ? av[i] : bv[i];
  return make_op("maximum", {a, b}, a.shape(), std::move(out),
                 [](Node& self, std::span<const NodePtr> in) {
                   Node& na = *in[0];
                   Node& nb = *in[1];
                   if (na.requires_grad) na.ensure_grad();
                   if (nb.requires_grad) nb.ensure_grad();
                   for (std::size_t i = 0; i < self.grad.size(); ++i) {
                     if (na.value[i] >= nb.value[i]) {
                       if (na.requires_grad) na.grad[i] += self.grad[i];
                     } else if (nb.requires_grad) {
                       nb.grad[i] += self.grad[i];
                     }
                   }
                 });
}

// ---- reductions -----------------------------------------------------------

namespace {

Tensor reduce(const char* name, const Tensor& x, double denom) {
  const auto& xv = x.value();
  double acc = 0.0;
  for (double v : xv) acc += v;
  acc /= denom;
  return make_op(name, {x}, {1}, {acc},
                 [denom](Node& self, std::span<const NodePtr> in) {
                   if (!in[0]->requires_grad) return;
                   in[0]->ensure_grad();
                   const double g = self.grad[0] / denom;
                   for (auto& gi : in[0]->grad) gi += g;
                 });
}

}  // namespace

Tensor sum(const Tensor& x) { return reduce("sum", x, 1.0); }
Tensor mean(const Tensor& x) {
  return reduce("mean", x, static_cast<double>(x.numel()));
}

// ---- concat / slice -------------------------------------------------------

Tensor concat(const Tensor& a, const Tensor& b, int axis) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || axis < 0 || axis > 1)
    shape_error("concat", a.shape(), b.shape());
  const std::size_t other = axis == 0 ? 1 : 0;
  if (a.shape()[other] != b.shape()[other])
    shape_error("concat", a.shape(), b.shape());

  Shape os = a.shape();
  os[axis] += b.shape()[axis];
  std::vector<double> out(shape_numel(os));
  const std::size_t rc = os[1];
  const std::size_t ra = a.shape()[0], ca = a.shape()[1];
  if (axis == 0) {
    std::copy(a.value().begin(), a.value().end(), out.begin());
    std::copy(b.value().begin(), b.value().end(), out.begin() + ra * ca);
  } else {
    for (std::size_t i = 0; i < ra; ++i) {
      std::copy(a.value().begin() + i * ca, a.value().begin() + (i + 1) * ca,
                out.begin() + i * rc);
      std::copy(b.value().begin() + i * b.cols(),
                b.value().begin() + (i + 1) * b.cols(),
                out.begin() + i * rc + ca);
    }
  }
  const std::size_t cb = b.shape()[1];
  return make_op("concat", {a, b}, os, std::move(out),
                 [axis, ra, ca, cb, rc](Node& self,
                                        std::span<const NodePtr> in) {
                   Node& na = *in[0];
                   Node& nb = *in[1];
                   if (na.requires_grad) {
                     na.ensure_grad();
                     if (axis == 0)
                       for (std::size_t i = 0; i < na.grad.size(); ++i)
                         na.grad[i] += self.grad[i];
                     else
                       for (std::size_t i = 0; i < ra; ++i)
                         for (std::size_t j = 0; j < ca; ++j)
                           na.grad[i * ca + j] += self.grad[i * rc + j];
                   }
                   if (nb.requires_grad) {
                     nb.ensure_grad();
                     if (axis == 0) {
                       const std::size_t off = ra * ca;
                       for (std::size_t i = 0; i < nb.grad.size(); ++i)
                         nb.grad[i] += self.grad[off + i];
                     } else {
                       for (std::size_t i = 0; i < ra; ++i)
                         for (std::size_t j = 0; j < cb; ++j)
                           nb.grad[i * cb + j] += self.grad[i * rc + ca + j];
                     }
                   }
                 });
}

namespace {

Tensor slice_impl(const char* name, const Tensor& x, std::size_t a0,
                  std::size_t a1, bool rows) {
  if (x.shape().size() != 2)
    throw std::invalid_argument(std::string(name) + ": tensor " +
                                shape_str(x.shape()) + " is not 2-d");
  const std::size_t r = x.shape()[0], c = x.shape()[1];
  const std::size_t limit = rows ? r : c;
  if (a0 >= a1 || a1 > limit)
    throw std::invalid_argument(std::string(name) + ": range [" +
                                std::to_string(a0) + "," + std::to_string(a1) +
                                ") out of bounds for " + shape_str(x.shape()));
  Shape os = rows ? Shape{a1 - a0, c} : Shape{r, a1 - a0};
  std::vector<double> out(shape_numel(os));
  if (rows) {
    std::copy(x.value().begin() + a0 * c, x.value().begin() + a1 * c,
              out.begin());
  } else {
    for (std::size_t i = 0; i < r; ++i)
      std::copy(x.value().begin() + i * c + a0, x.value().begin() + i * c + a1,
                out.begin() + i * (a1 - a0));
  }
  return make_op(name, {x}, os, std::move(out),
                 [a0, a1, r, c, rows](Node& self, std::span<const NodePtr> in) {
                   if (!in[0]->requires_grad) return;
                   in[0]->ensure_grad();
                   if (rows) {
                     for (std::size_t i = 0; i < self.grad.size(); ++i)
                       in[0]->grad[a0 * c + i] += self.grad[i];
                   } else {
                     const std::size_t w = a1 - a0;
                     for (std::size_t i = 0; i < r; ++i)
                       for (std::size_t j = 0; j < w; ++j)
                         in[0]->grad[i * c + a0 + j] += self.grad[i * w + j];
                   }
                 });
}

}  // namespace

Tensor slice_rows(const Tensor& x, std::size_t r0, std::size_t r1) {
  return slice_impl("slice_rows", x, r0, r1, true);
}

Tensor slice_cols(const Tensor& x, std::size_t c0, std::size_t c1) {
  return slice_impl("slice_cols", x, c0, c1, false);
}

Tensor detach(const Tensor& x) {
  return Tensor::from(x.shape(), x.value());
}

// ---- softmax cross-entropy --------------------------------------------------

Tensor softmax_cross_entropy(const Tensor& logits,
                             const std::vector<int>& targets) {
  if (logits.shape().size() != 2)
    throw std::invalid_argument("softmax_cross_entropy: logits " +
                                shape_str(logits.shape()) + " are not 2-d");
  const std::size_t b = logits.rows(), k = logits.cols();
  if (targets.size() != b)
    throw std::invalid_argument(
        "softmax_cross_entropy: " + std::to_string(targets.size()) +
        " targets for " + std::to_string(b) + " rows");
  for (int t : targets)
    if (t < 0 || static_cast<std::size_t>(t) >= k)
      throw std::invalid_argument("softmax_cross_entropy: target " +
                                  std::to_string(t) + " out of range for " +
                                  std::to_string(k) + " classes");

  const auto& x = logits.value();
  auto probs = std::make_shared<std::vector<double>>(b * k);
  double loss = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const double* row = x.data() + i * k;
    double m = row[0];
    for (std::size_t j = 1; j < k; ++j) m = std::max(m, row[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(row[j] - m);
    const double logz = std::log(z);
    for (std::size_t j = 0; j < k; ++j)
      (*probs)[i * k + j] = std::exp(row[j] - m - logz);
    loss -= row[targets[i]] - m - logz;
  }
  loss /= static_cast<double>(b);

  return make_op("softmax_cross_entropy", {logits}, {1}, {loss},
                 [probs, targets, b, k](Node& self,
                                        std::span<const NodePtr> in) {
                   if (!in[0]->requires_grad) return;
                   in[0]->ensure_grad();
                   const double g = self.grad[0] / static_cast<double>(b);
                   for (std::size_t i = 0; i < b; ++i)
                     for (std::size_t j = 0; j < k; ++j) {
                       double d = (*probs)[i * k + j];
                       if (j == static_cast<std::size_t>(targets[i])) d -= 1.0;
                       in[0]->grad[i * k + j] += g * d;
                     }
                 });
}

// ---- spike ------------------------------------------------------------------

double gaussian_pdf(double x, double mean, double sigma) {
  static const double inv_sqrt_2pi = 0.3989422804014327;
  const double z = (x - mean) / sigma;
  return inv_sqrt_2pi / sigma * std::exp(-0.5 * z * z);
}

Tensor custom_grad_spike(const Tensor& u, const Tensor& theta, double sigma,
                         SpikeForward mode) {
  if (sigma <= 0.0)
    throw std::invalid_argument("custom_grad_spike: sigma must be > 0, got " +
                                std::to_string(sigma));
  const bool theta_scalar = is_scalar(theta);
  if (!theta_scalar && theta.shape() != u.shape())
    shape_error("custom_grad_spike", u.shape(), theta.shape());

  const auto& uv = u.value();
  const auto& tv = theta.value();
  std::vector<double> out(uv.size());
  if (mode == SpikeForward::binary) {
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = uv[i] >= tv[theta_scalar ? 0 : i] ? 1.0 : 0.0;
  } else {
    // Phi((u - theta)/sigma); its derivative in u is exactly the surrogate.
    static const double inv_sqrt2 = 0.7071067811865476;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double z = (uv[i] - tv[theta_scalar ? 0 : i]) / sigma;
      out[i] = 0.5 * std::erfc(-z * inv_sqrt2);
    }
  }

  return make_op(
      "spike", {u, theta}, u.shape(), std::move(out),
      [sigma, theta_scalar](Node& self, std::span<const NodePtr> in) {
        Node& nu = *in[0];
        Node& nt = *in[1];
        if (nu.requires_grad) nu.ensure_grad();
        if (nt.requires_grad) nt.ensure_grad();
        double theta_acc = 0.0;
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          const double th = nt.value[theta_scalar ? 0 : i];
          const double w = self.grad[i] * gaussian_pdf(nu.value[i], th, sigma);
          if (nu.requires_grad) nu.grad[i] += w;
          if (nt.requires_grad) {
            if (theta_scalar)
              theta_acc -= w;
            else
              nt.grad[i] -= w;
          }
        }
        if (nt.requires_grad && theta_scalar) nt.grad[0] += theta_acc;
      });
}

// ---- grad utilities ---------------------------------------------------------

double clip_grad_norm(const std::vector<Tensor>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.has_grad()) continue;
    for (double g : p.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (const auto& p : params) {
      if (!p.has_grad()) continue;
      auto& g = p.node()->grad;
      for (auto& gi : g) gi *= scale;
    }
  }
  return norm;
}

}  // namespace srnn

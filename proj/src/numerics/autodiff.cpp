#include "ssagcn/numerics/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ssagcn/errors.hpp"

namespace ssagcn::numerics {

const Tensor& Var::value() const { return tape_->value(id_); }

bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Tensor Var::grad() const {
  Tensor g = tape_->grad(id_);
  return g;
}

Var Tape::constant(Tensor value) { return push(std::move(value), false); }

Var Tape::leaf(Tensor value) { return push(std::move(value), true); }

Var Tape::push(Tensor value, bool requires_grad) {
  nodes_.push_back(Node{std::move(value), Tensor{}, requires_grad && record_});
  return Var(this, nodes_.size() - 1);
}

void Tape::record(std::function<void()> backward_fn) {
  if (record_) ops_.push_back(std::move(backward_fn));
}

Tensor& Tape::grad(std::size_t id) {
  Node& node = nodes_[id];
  if (node.grad.shape() != node.value.shape() || node.grad.size() != node.value.size()) {
    node.grad = Tensor(node.value.shape());
  }
  return node.grad;
}

void Tape::backward(const Var& loss) {
  if (loss.value().size() != 1) {
    throw NonScalarLoss("backward() needs a scalar loss, got shape " +
                        shape_str(loss.shape()));
  }
  for (auto& node : nodes_) node.grad = Tensor{};
  grad(loss.id())[0] = 1.0;
  ops_replayed_ = 0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
    (*it)();
    ++ops_replayed_;
  }
}

namespace {

Tape& common_tape(std::initializer_list<const Var*> vars) {
  Tape* tape = nullptr;
  for (const Var* v : vars) {
    if (!v->defined()) continue;
    if (tape && &v->tape() != tape) throw ShapeError("operands live on different tapes");
    tape = &v->tape();
  }
  if (!tape) throw ShapeError("operation on undefined variables");
  return *tape;
}

bool any_grad(std::initializer_list<const Var*> vars) {
  for (const Var* v : vars) {
    if (v->defined() && v->requires_grad()) return true;
  }
  return false;
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()) + " differ");
  }
}

// Splits a shape around `axis` into (outer, n, inner) extents.
struct AxisView {
  std::size_t outer = 1, n = 1, inner = 1;
};

AxisView axis_view(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) throw ShapeError("axis out of range for " + shape_str(shape));
  AxisView v;
  for (std::size_t i = 0; i < axis; ++i) v.outer *= shape[i];
  v.n = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) v.inner *= shape[i];
  return v;
}

template <class F>
Var unary(const Var& a, F&& forward, std::function<double(double x, double y)> derivative) {
  Tape& tape = a.tape();
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = forward(av[i]);
  Var y = tape.push(std::move(out), a.requires_grad());
  if (a.requires_grad()) {
    tape.record([a, y, derivative = std::move(derivative)] {
      Tape& t = a.tape();
      const Tensor& gy = t.grad(y.id());
      const Tensor& xv = a.value();
      const Tensor& yv = y.value();
      Tensor& ga = t.grad(a.id());
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * derivative(xv[i], yv[i]);
    });
  }
  return y;
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  Tape& tape = common_tape({&a, &b});
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(av.shape()) + " x " +
                     shape_str(bv.shape()));
  }
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av.at(i, p);
      if (aip == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out.at(i, j) += aip * bv.at(p, j);
    }
  }
  const bool rg = any_grad({&a, &b});
  Var y = tape.push(std::move(out), rg);
  if (rg) {
    tape.record([a, b, y, m, k, n] {
      Tape& t = y.tape();
      const Tensor& gy = t.grad(y.id());
      const Tensor& av = a.value();
      const Tensor& bv = b.value();
      if (a.requires_grad()) {
        Tensor& ga = t.grad(a.id());
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += gy.at(i, j) * bv.at(p, j);
            ga.at(i, p) += s;
          }
      }
      if (b.requires_grad()) {
        Tensor& gb = t.grad(b.id());
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const double aip = av.at(i, p);
            for (std::size_t j = 0; j < n; ++j) gb.at(p, j) += aip * gy.at(i, j);
          }
      }
    });
  }
  return y;
}

Var transpose(const Var& a) {
  Tape& tape = a.tape();
  const Tensor& av = a.value();
  if (av.rank() != 2) throw ShapeError("transpose expects a matrix, got " + shape_str(av.shape()));
  const std::size_t m = av.dim(0), n = av.dim(1);
  Tensor out({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(j, i) = av.at(i, j);
  Var y = tape.push(std::move(out), a.requires_grad());
  if (a.requires_grad()) {
    tape.record([a, y, m, n] {
      Tape& t = y.tape();
      const Tensor& gy = t.grad(y.id());
      Tensor& ga = t.grad(a.id());
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) ga.at(i, j) += gy.at(j, i);
    });
  }
  return y;
}

namespace {

Var binary_elementwise(const Var& a, const Var& b, const char* name, int kind) {
  Tape& tape = common_tape({&a, &b});
  require_same_shape(a, b, name);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) {
    switch (kind) {
      case 0: out[i] = av[i] + bv[i]; break;
      case 1: out[i] = av[i] - bv[i]; break;
      default: out[i] = av[i] * bv[i]; break;
    }
  }
  const bool rg = any_grad({&a, &b});
  Var y = tape.push(std::move(out), rg);
  if (rg) {
    tape.record([a, b, y, kind] {
      Tape& t = y.tape();
      const Tensor& gy = t.grad(y.id());
      if (a.requires_grad()) {
        Tensor& ga = t.grad(a.id());
        const Tensor& bv = b.value();
        for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += kind == 2 ? gy[i] * bv[i] : gy[i];
      }
      if (b.requires_grad()) {
        Tensor& gb = t.grad(b.id());
        const Tensor& av = a.value();
        for (std::size_t i = 0; i < gy.size(); ++i) {
          gb[i] += kind == 0 ? gy[i] : kind == 1 ? -gy[i] : gy[i] * av[i];
        }
      }
    });
  }
  return y;
}

}  // namespace

Var add(const Var& a, const Var& b) { return binary_elementwise(a, b, "add", 0); }
Var sub(const Var& a, const Var& b) { return binary_elementwise(a, b, "sub", 1); }
Var mul(const Var& a, const Var& b) { return binary_elementwise(a, b, "mul", 2); }

Var scale(const Var& a, double factor) {
  return unary(
      a, [factor](double x) { return x * factor; },
      [factor](double, double) { return factor; });
}

Var add_bias(const Var& x, const Var& bias) {
  Tape& tape = common_tape({&x, &bias});
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  if (xv.rank() == 0 || bv.rank() != 1 || bv.dim(0) != xv.shape().back()) {
    throw ShapeError("add_bias: bias " + shape_str(bv.shape()) + " does not match " +
                     shape_str(xv.shape()));
  }
  const std::size_t n = bv.dim(0);
  Tensor out = xv;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i % n];
  const bool rg = any_grad({&x, &bias});
  Var y = tape.push(std::move(out), rg);
  if (rg) {
    tape.record([x, bias, y, n] {
      Tape& t = y.tape();
      const Tensor& gy = t.grad(y.id());
      if (x.requires_grad()) {
        Tensor& gx = t.grad(x.id());
        for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
      }
      if (bias.requires_grad()) {
        Tensor& gb = t.grad(bias.id());
        for (std::size_t i = 0; i < gy.size(); ++i) gb[i % n] += gy[i];
      }
    });
  }
  return y;
}

Var exp(const Var& a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(const Var& a) {
  return unary(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var tanh(const Var& a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var prelu(const Var& x, const Var& slope, std::size_t axis) {
  Tape& tape = common_tape({&x, &slope});
  const Tensor& xv = x.value();
  const Tensor& sv = slope.value();
  const AxisView v = axis_view(xv.shape(), axis);
  const bool shared = sv.size() == 1;
  if (!shared && sv.size() != v.n) {
    throw ShapeError("prelu: slope " + shape_str(sv.shape()) + " does not match axis " +
                     std::to_string(axis) + " of " + shape_str(xv.shape()));
  }
  Tensor out(xv.shape());
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t c = 0; c < v.n; ++c) {
      const double a = sv[shared ? 0 : c];
      for (std::size_t i = 0; i < v.inner; ++i) {
        const std::size_t idx = (o * v.n + c) * v.inner + i;
        out[idx] = xv[idx] > 0.0 ? xv[idx] : a * xv[idx];
        tape.note_branch(xv[idx] > 0.0 ? 1 : 2);
      }
    }
  const bool rg = any_grad({&x, &slope});
  Var y = tape.push(std::move(out), rg);
  if (rg) {
    tape.record([x, slope, y, v, shared] {
      Tape& t = y.tape();
      const Tensor& gy = t.grad(y.id());
      const Tensor& xv = x.value();
      const Tensor& sv = slope.value();
      Tensor* gx = x.requires_grad() ? &t.grad(x.id()) : nullptr;
      Tensor* gs = slope.requires_grad() ? &t.grad(slope.id()) : nullptr;
      for (std::size_t o = 0; o < v.outer; ++o)
        for (std::size_t c = 0; c < v.n; ++c) {
          const std::size_t si = shared ? 0 : c;
          for (std::size_t i = 0; i < v.inner; ++i) {
            const std::size_t idx = (o * v.n + c) * v.inner + i;
            const bool pos = xv[idx] > 0.0;
            if (gx) (*gx)[idx] += pos ? gy[idx] : sv[si] * gy[idx];
            if (gs && !pos) (*gs)[si] += xv[idx] * gy[idx];
          }
        }
    });
  }
  return y;
}

Var softmax(const Var& x) {
  Tape& tape = x.tape();
  const Tensor& xv = x.value();
  if (xv.rank() == 0) throw ShapeError("softmax of a scalar");
  const std::size_t n = xv.shape().back();
  const std::size_t rows = n == 0 ? 0 : xv.size() / n;
  Tensor out(xv.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xv.data().data() + r * n;
    const double mx = *std::max_element(row, row + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      out[r * n + j] = std::exp(row[j] - mx);
      z += out[r * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] /= z;
  }
  Var y = tape.push(std::move(out), x.requires_grad());
  if (x.requires_grad()) {
    tape.record([x, y, rows, n] {
      Tape& t = y.tape();
      const Tensor& gy = t.grad(y.id());
      const Tensor& yv = y.value();
      Tensor& gx = t.grad(x.id());
      for (std::size_t r = 0; r < rows; ++r) {
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += gy[r * n + j] * yv[r * n + j];
        for (std::size_t j = 0; j < n; ++j) {
          gx[r * n + j] += yv[r * n + j] * (gy[r * n + j] - dot);
        }
      }
    });
  }
  return y;
}

Var sum(const Var& x) {
  Tape& tape = x.tape();
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  Var y = tape.push(Tensor::scalar(s), x.requires_grad());
  if (x.requires_grad()) {
    tape.record([x, y] {
      Tape& t = y.tape();
      const double g = t.grad(y.id())[0];
      Tensor& gx = t.grad(x.id());
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
    });
  }
  return y;
}

Var mean(const Var& x) {
  const std::size_t n = x.value().size();
  if (n == 0) throw ShapeError("mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(n));
}

Var sum(const Var& x, std::size_t axis) {
  Tape& tape = x.tape();
  const Tensor& xv = x.value();
  const AxisView v = axis_view(xv.shape(), axis);
  Shape out_shape = xv.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  Tensor out(out_shape);
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t c = 0; c < v.n; ++c)
      for (std::size_t i = 0; i < v.inner; ++i)
        out[o * v.inner + i] += xv[(o * v.n + c) * v.inner + i];
  Var y = tape.push(std::move(out), x.requires_grad());
  if (x.requires_grad()) {
    tape.record([x, y, v] {
      Tape& t = y.tape();
      const Tensor& gy = t.grad(y.id());
      Tensor& gx = t.grad(x.id());
      for (std::size_t o = 0; o < v.outer; ++o)
        for (std::size_t c = 0; c < v.n; ++c)
          for (std::size_t i = 0; i < v.inner; ++i)
            gx[(o * v.n + c) * v.inner + i] += gy[o * v.inner + i];
    });
  }
  return y;
}

Var mean(const Var& x, std::size_t axis) {
  const std::size_t n = x.value().dim(axis);
  if (n == 0) throw ShapeError("mean over an empty axis");
  return scale(sum(x, axis), 1.0 / static_cast<double>(n));
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  Tape& tape = parts[0].tape();
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) throw ShapeError("concat axis out of range");
  Shape out_shape = first;
  out_shape[axis] = 0;
  bool rg = false;
  for (const Var& p : parts) {
    const Shape& s = p.shape();
    if (&p.tape() != &tape) throw ShapeError("concat operands live on different tapes");
    if (s.size() != first.size()) throw ShapeError("concat: rank mismatch");
    for (std::size_t d = 0; d < s.size(); ++d) {
      if (d != axis && s[d] != first[d]) {
        throw ShapeError("concat: shapes " + shape_str(first) + " and " + shape_str(s) +
                         " differ off-axis");
      }
    }
    out_shape[axis] += s[axis];
    rg = rg || p.requires_grad();
  }
  const AxisView ov = axis_view(out_shape, axis);
  Tensor out(out_shape);
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Var& p : parts) {
    offsets.push_back(offset);
    const Tensor& pv = p.value();
    const std::size_t n = pv.dim(axis);
    for (std::size_t o = 0; o < ov.outer; ++o)
      for (std::size_t c = 0; c < n; ++c)
        for (std::size_t i = 0; i < ov.inner; ++i)
          out[(o * ov.n + offset + c) * ov.inner + i] = pv[(o * n + c) * ov.inner + i];
    offset += n;
  }
  Var y = tape.push(std::move(out), rg);
  if (rg) {
    std::vector<Var> inputs(parts.begin(), parts.end());
    tape.record([inputs, offsets, y, ov, axis] {
      Tape& t = y.tape();
      const Tensor& gy = t.grad(y.id());
      for (std::size_t k = 0; k < inputs.size(); ++k) {
        const Var& p = inputs[k];
        if (!p.requires_grad()) continue;
        Tensor& gp = t.grad(p.id());
        const std::size_t n = p.value().dim(axis);
        for (std::size_t o = 0; o < ov.outer; ++o)
          for (std::size_t c = 0; c < n; ++c)
            for (std::size_t i = 0; i < ov.inner; ++i)
              gp[(o * n + c) * ov.inner + i] += gy[(o * ov.n + offsets[k] + c) * ov.inner + i];
      }
    });
  }
  return y;
}

Var reshape(const Var& x, Shape shape) {
  Tape& tape = x.tape();
  Tensor out = x.value().reshaped(std::move(shape));
  Var y = tape.push(std::move(out), x.requires_grad());
  if (x.requires_grad()) {
    tape.record([x, y] {
      Tape& t = y.tape();
      const Tensor& gy = t.grad(y.id());
      Tensor& gx = t.grad(x.id());
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
    });
  }
  return y;
}

Var stack(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("stack of zero tensors");
  const Shape& first = parts[0].shape();
  if (axis > first.size()) throw ShapeError("stack axis out of range");
  Shape expanded = first;
  expanded.insert(expanded.begin() + static_cast<std::ptrdiff_t>(axis), 1);
  std::vector<Var> reshaped;
  reshaped.reserve(parts.size());
  for (const Var& p : parts) {
    if (p.shape() != first) throw ShapeError("stack: operand shapes differ");
    reshaped.push_back(reshape(p, expanded));
  }
  return concat(reshaped, axis);
}

Var conv2d(const Var& x, const Var& weight, const Var& bias, const Conv2dOptions& opts) {
  Tape& tape = common_tape({&x, &weight, &bias});
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  if (xv.rank() != 3 || wv.rank() != 4 || wv.dim(1) != xv.dim(0)) {
    throw ShapeError("conv2d: input " + shape_str(xv.shape()) + " incompatible with kernel " +
                     shape_str(wv.shape()));
  }
  if (opts.stride_h == 0 || opts.stride_w == 0) throw ShapeError("conv2d: zero stride");
  const std::size_t C = xv.dim(0), H = xv.dim(1), W = xv.dim(2);
  const std::size_t O = wv.dim(0), KH = wv.dim(2), KW = wv.dim(3);
  if (bias.defined() && (bias.value().rank() != 1 || bias.value().dim(0) != O)) {
    throw ShapeError("conv2d: bias " + shape_str(bias.shape()) + " does not match " +
                     std::to_string(O) + " output channels");
  }
  if (H + 2 * opts.pad_h < KH || W + 2 * opts.pad_w < KW) {
    throw ShapeError("conv2d: kernel larger than padded input");
  }
  const std::size_t OH = (H + 2 * opts.pad_h - KH) / opts.stride_h + 1;
  const std::size_t OW = (W + 2 * opts.pad_w - KW) / opts.stride_w + 1;
  Tensor out({O, OH, OW});
  // Input row/col for output (r, c) and kernel tap (kh, kw); -1 when padded.
  auto in_row = [=](std::size_t r, std::size_t kh) -> std::ptrdiff_t {
    const std::ptrdiff_t ir = static_cast<std::ptrdiff_t>(r * opts.stride_h + kh) -
                              static_cast<std::ptrdiff_t>(opts.pad_h);
    return ir >= 0 && ir < static_cast<std::ptrdiff_t>(H) ? ir : -1;
  };
  auto in_col = [=](std::size_t c, std::size_t kw) -> std::ptrdiff_t {
    const std::ptrdiff_t ic = static_cast<std::ptrdiff_t>(c * opts.stride_w + kw) -
                              static_cast<std::ptrdiff_t>(opts.pad_w);
    return ic >= 0 && ic < static_cast<std::ptrdiff_t>(W) ? ic : -1;
  };
  for (std::size_t o = 0; o < O; ++o) {
    const double b = bias.defined() ? bias.value()[o] : 0.0;
    for (std::size_t r = 0; r < OH; ++r)
      for (std::size_t c = 0; c < OW; ++c) {
        double acc = b;
        for (std::size_t ci = 0; ci < C; ++ci)
          for (std::size_t kh = 0; kh < KH; ++kh) {
            const auto ir = in_row(r, kh);
            if (ir < 0) continue;
            for (std::size_t kw = 0; kw < KW; ++kw) {
              const auto ic = in_col(c, kw);
              if (ic < 0) continue;
              acc += wv.at(o, ci, kh, kw) * xv.at(ci, static_cast<std::size_t>(ir),
                                                   static_cast<std::size_t>(ic));
            }
          }
        out.at(o, r, c) = acc;
      }
  }
  const bool rg = any_grad({&x, &weight, &bias});
  Var y = tape.push(std::move(out), rg);
  if (rg) {
    tape.record([x, weight, bias, y, C, O, OH, OW, KH, KW, in_row, in_col] {
      Tape& t = y.tape();
      const Tensor& gy = t.grad(y.id());
      const Tensor& xv = x.value();
      const Tensor& wv = weight.value();
      Tensor* gx = x.requires_grad() ? &t.grad(x.id()) : nullptr;
      Tensor* gw = weight.requires_grad() ? &t.grad(weight.id()) : nullptr;
      if (bias.defined() && bias.requires_grad()) {
        Tensor& gb = t.grad(bias.id());
        for (std::size_t o = 0; o < O; ++o)
          for (std::size_t r = 0; r < OH; ++r)
            for (std::size_t c = 0; c < OW; ++c) gb[o] += gy.at(o, r, c);
      }
      for (std::size_t o = 0; o < O; ++o)
        for (std::size_t r = 0; r < OH; ++r)
          for (std::size_t c = 0; c < OW; ++c) {
            const double g = gy.at(o, r, c);
            if (g == 0.0) continue;
            for (std::size_t ci = 0; ci < C; ++ci)
              for (std::size_t kh = 0; kh < KH; ++kh) {
                const auto ir = in_row(r, kh);
                if (ir < 0) continue;
                for (std::size_t kw = 0; kw < KW; ++kw) {
                  const auto ic = in_col(c, kw);
                  if (ic < 0) continue;
                  const auto uir = static_cast<std::size_t>(ir);
                  const auto uic = static_cast<std::size_t>(ic);
                  if (gw) gw->at(o, ci, kh, kw) += g * xv.at(ci, uir, uic);
                  if (gx) gx->at(ci, uir, uic) += g * wv.at(o, ci, kh, kw);
                }
              }
          }
    });
  }
  return y;
}

Var mean_others(const Var& x, std::size_t axis) {
  Tape& tape = x.tape();
  const Tensor& xv = x.value();
  const AxisView v = axis_view(xv.shape(), axis);
  Tensor out(xv.shape());
  if (v.n > 1) {
    const double inv = 1.0 / static_cast<double>(v.n - 1);
    for (std::size_t o = 0; o < v.outer; ++o)
      for (std::size_t i = 0; i < v.inner; ++i) {
        double total = 0.0;
        for (std::size_t c = 0; c < v.n; ++c) total += xv[(o * v.n + c) * v.inner + i];
        for (std::size_t c = 0; c < v.n; ++c) {
          const std::size_t idx = (o * v.n + c) * v.inner + i;
          out[idx] = (total - xv[idx]) * inv;
        }
      }
  }
  Var y = tape.push(std::move(out), x.requires_grad());
  if (x.requires_grad() && v.n > 1) {
    tape.record([x, y, v] {
      Tape& t = y.tape();
      const Tensor& gy = t.grad(y.id());
      Tensor& gx = t.grad(x.id());
      const double inv = 1.0 / static_cast<double>(v.n - 1);
      for (std::size_t o = 0; o < v.outer; ++o)
        for (std::size_t i = 0; i < v.inner; ++i) {
          double total = 0.0;
          for (std::size_t c = 0; c < v.n; ++c) total += gy[(o * v.n + c) * v.inner + i];
          for (std::size_t c = 0; c < v.n; ++c) {
            const std::size_t idx = (o * v.n + c) * v.inner + i;
            gx[idx] += (total - gy[idx]) * inv;
          }
        }
    });
  }
  return y;
}

Var max_others(const Var& x, std::size_t axis) {
  Tape& tape = x.tape();
  const Tensor& xv = x.value();
  const AxisView v = axis_view(xv.shape(), axis);
  Tensor out(xv.shape());
  // Source index along `axis` that supplied each output entry.
  std::vector<std::size_t> argmax(xv.size(), 0);
  if (v.n > 1) {
    for (std::size_t o = 0; o < v.outer; ++o)
      for (std::size_t i = 0; i < v.inner; ++i) {
        // Top two entries give the max over "all but c" in one pass.
        std::size_t best = 0, second = 1;
        auto at = [&](std::size_t c) { return xv[(o * v.n + c) * v.inner + i]; };
        if (at(second) > at(best)) std::swap(best, second);
        for (std::size_t c = 2; c < v.n; ++c) {
          if (at(c) > at(best)) {
            second = best;
            best = c;
          } else if (at(c) > at(second)) {
            second = c;
          }
        }
        for (std::size_t c = 0; c < v.n; ++c) {
          const std::size_t src = c == best ? second : best;
          const std::size_t idx = (o * v.n + c) * v.inner + i;
          out[idx] = at(src);
          argmax[idx] = (o * v.n + src) * v.inner + i;
          tape.note_branch(src + 3);
        }
      }
  }
  Var y = tape.push(std::move(out), x.requires_grad());
  if (x.requires_grad() && v.n > 1) {
    tape.record([x, y, argmax = std::move(argmax)] {
      Tape& t = y.tape();
      const Tensor& gy = t.grad(y.id());
      Tensor& gx = t.grad(x.id());
      for (std::size_t idx = 0; idx < gy.size(); ++idx) gx[argmax[idx]] += gy[idx];
    });
  }
  return y;
}

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // ln(2*pi)
constexpr double kRhoFloor = 1e-9;

}  // namespace

Var gaussian_nll(const Var& raw, const Tensor& targets) {
  Tape& tape = raw.tape();
  const Tensor& rv = raw.value();
  if (rv.rank() != 2 || rv.dim(1) != 5 || targets.rank() != 2 || targets.dim(1) != 2 ||
      targets.dim(0) != rv.dim(0)) {
    throw ShapeError("gaussian_nll: raw " + shape_str(rv.shape()) + " vs targets " +
                     shape_str(targets.shape()));
  }
  const std::size_t m = rv.dim(0);
  double total = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const double sx = std::exp(rv.at(r, 2));
    const double sy = std::exp(rv.at(r, 3));
    const double rho = std::tanh(rv.at(r, 4));
    const double zx = (targets.at(r, 0) - rv.at(r, 0)) / sx;
    const double zy = (targets.at(r, 1) - rv.at(r, 1)) / sy;
    const double om = std::max(1.0 - rho * rho, kRhoFloor);
    tape.note_branch(om == kRhoFloor ? 4 : 5);
    const double q = zx * zx + zy * zy - 2.0 * rho * zx * zy;
    total += kLog2Pi + rv.at(r, 2) + rv.at(r, 3) + 0.5 * std::log(om) + q / (2.0 * om);
  }
  Var y = tape.push(Tensor::scalar(total), raw.requires_grad());
  if (raw.requires_grad()) {
    tape.record([raw, y, targets, m] {
      Tape& t = y.tape();
      const double g = t.grad(y.id())[0];
      const Tensor& rv = raw.value();
      Tensor& gr = t.grad(raw.id());
      for (std::size_t r = 0; r < m; ++r) {
        const double sx = std::exp(rv.at(r, 2));
        const double sy = std::exp(rv.at(r, 3));
        const double rho = std::tanh(rv.at(r, 4));
        const double zx = (targets.at(r, 0) - rv.at(r, 0)) / sx;
        const double zy = (targets.at(r, 1) - rv.at(r, 1)) / sy;
        const double raw_om = 1.0 - rho * rho;
        const bool floored = raw_om < kRhoFloor;
        const double om = floored ? kRhoFloor : raw_om;
        const double q = zx * zx + zy * zy - 2.0 * rho * zx * zy;
        double d_rho = -zx * zy / om;
        if (!floored) d_rho += -rho / om + q * rho / (om * om);
        gr.at(r, 0) += g * (-(zx - rho * zy) / (sx * om));
        gr.at(r, 1) += g * (-(zy - rho * zx) / (sy * om));
        gr.at(r, 2) += g * (1.0 - (zx * zx - rho * zx * zy) / om);
        gr.at(r, 3) += g * (1.0 - (zy * zy - rho * zx * zy) / om);
        gr.at(r, 4) += g * d_rho * (1.0 - rho * rho);
      }
    });
  }
  return y;
}

}  // namespace ssagcn::numerics

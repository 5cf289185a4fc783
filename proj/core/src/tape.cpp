#include "uvae/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uvae/errors.hpp"

namespace uvae {

const char* op_name(Op op) {
    switch (op) {
        case Op::Constant: return "constant";
        case Op::Leaf: return "leaf";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::Neg: return "neg";
        case Op::Scale: return "scale";
        case Op::AddConst: return "add_const";
        case Op::Tanh: return "tanh";
        case Op::Softplus: return "softplus";
        case Op::Sigmoid: return "sigmoid";
        case Op::Exp: return "exp";
        case Op::Log: return "log";
        case Op::Square: return "square";
        case Op::Softmax: return "softmax";
        case Op::Clamp: return "clamp";
        case Op::Sum: return "sum";
        case Op::Mean: return "mean";
        case Op::Dot: return "dot";
        case Op::Affine: return "affine";
        case Op::Concat: return "concat";
    }
    return "?";
}

namespace {

double stable_softplus(double x) {
    // max(x,0) + log1p(exp(-|x|)) never overflows
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double stable_sigmoid(double x) {
    if (x >= 0.0) {
        double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

Var Tape::constant(Tensor value) {
    nodes_.push_back(Node{Op::Constant, -1, -1, -1, 0.0, 0.0, std::move(value), {}});
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Tensor value) {
    nodes_.push_back(Node{Op::Leaf, -1, -1, -1, 0.0, 0.0, std::move(value), {}});
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

const Tensor& Tape::value(Var v) const {
    if (!v.valid() || v.tape != this) throw ContractError("Var does not belong to this tape");
    return node(v.id).value;
}

const Tensor& Tape::adjoint(Var v) const {
    if (!v.valid() || v.tape != this) throw ContractError("Var does not belong to this tape");
    return node(v.id).grad;
}

Var Tape::emit(Op op, int a, int b, int c, double p0, double p1) {
    Tensor out = compute(op, a, b, c, p0, p1);
    if (!out.all_finite()) {
        throw NumericError(std::string("non-finite value produced by primitive '") + op_name(op) + "'");
    }
    nodes_.push_back(Node{op, a, b, c, p0, p1, std::move(out), {}});
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Tensor Tape::compute(Op op, int a, int b, int c, double p0, double p1) const {
    auto unary = [&](auto f) {
        Tensor out = node(a).value;
        for (double& v : out.data) v = f(v);
        return out;
    };
    switch (op) {
        case Op::Constant:
        case Op::Leaf:
            throw ContractError("constant/leaf nodes are not computed");
        case Op::Add: {
            Tensor out = node(a).value;
            const Tensor& vb = node(b).value;
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += vb[i];
            return out;
        }
        case Op::Sub: {
            Tensor out = node(a).value;
            const Tensor& vb = node(b).value;
            for (std::size_t i = 0; i < out.size(); ++i) out[i] -= vb[i];
            return out;
        }
        case Op::Mul: {
            Tensor out = node(a).value;
            const Tensor& vb = node(b).value;
            for (std::size_t i = 0; i < out.size(); ++i) out[i] *= vb[i];
            return out;
        }
        case Op::Neg:
            return unary([](double v) { return -v; });
        case Op::Scale:
            return unary([p0](double v) { return p0 * v; });
        case Op::AddConst:
            return unary([p0](double v) { return v + p0; });
        case Op::Tanh:
            return unary([](double v) { return std::tanh(v); });
        case Op::Softplus:
            return unary(stable_softplus);
        case Op::Sigmoid:
            return unary(stable_sigmoid);
        case Op::Exp:
            return unary([](double v) { return std::exp(v); });
        case Op::Log:
            return unary([](double v) { return std::log(v); });
        case Op::Square:
            return unary([](double v) { return v * v; });
        case Op::Softmax: {
            const Tensor& va = node(a).value;
            Tensor out = va;
            double mx = *std::max_element(va.data.begin(), va.data.end());
            double total = 0.0;
            for (std::size_t i = 0; i < out.size(); ++i) {
                out[i] = std::exp(va[i] - mx);
                total += out[i];
            }
            for (double& v : out.data) v /= total;
            return out;
        }
        case Op::Clamp:
            return unary([p0, p1](double v) { return std::min(std::max(v, p0), p1); });
        case Op::Sum: {
            double t = 0.0;
            for (double v : node(a).value.data) t += v;
            return Tensor::scalar(t);
        }
        case Op::Mean: {
            const Tensor& va = node(a).value;
            double t = 0.0;
            for (double v : va.data) t += v;
            return Tensor::scalar(t / static_cast<double>(va.size()));
        }
        case Op::Dot: {
            const Tensor& va = node(a).value;
            const Tensor& vb = node(b).value;
            double t = 0.0;
            for (std::size_t i = 0; i < va.size(); ++i) t += va[i] * vb[i];
            return Tensor::scalar(t);
        }
        case Op::Affine: {
            const Tensor& w = node(a).value;
            const Tensor& bias = node(b).value;
            const Tensor& x = node(c).value;
            std::size_t rows = w.extent(0), cols = w.extent(1);
            Tensor out = bias;
            for (std::size_t r = 0; r < rows; ++r) {
                const double* wr = &w.data[r * cols];
                double acc = 0.0;
                for (std::size_t j = 0; j < cols; ++j) acc += wr[j] * x[j];
                out[r] += acc;
            }
            return out;
        }
        case Op::Concat: {
            const Tensor& va = node(a).value;
            const Tensor& vb = node(b).value;
            Tensor out = Tensor::zeros({va.size() + vb.size()});
            std::copy(va.data.begin(), va.data.end(), out.data.begin());
            std::copy(vb.data.begin(), vb.data.end(),
                      out.data.begin() + static_cast<std::ptrdiff_t>(va.size()));
            return out;
        }
    }
    throw ContractError("unknown op");
}

void Tape::backward(Var root) {
    if (!root.valid() || root.tape != this) throw ContractError("backward root is not on this tape");
    if (node(root.id).value.size() != 1) {
        throw ContractError("backward requires a scalar objective, got shape " +
                            shape_to_string(node(root.id).value.shape));
    }
    for (int i = 0; i <= root.id; ++i) {
        Node& n = node(i);
        n.grad = Tensor::zeros(n.value.shape);
    }
    node(root.id).grad[0] = 1.0;
    for (int i = root.id; i >= 0; --i) accumulate(i);
}

void Tape::accumulate(int id) {
    Node& n = node(id);
    const Tensor& g = n.grad;
    switch (n.op) {
        case Op::Constant:
        case Op::Leaf:
            return;
        case Op::Add: {
            Tensor& ga = node(n.a).grad;
            Tensor& gb = node(n.b).grad;
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i] += g[i];
                gb[i] += g[i];
            }
            return;
        }
        case Op::Sub: {
            Tensor& ga = node(n.a).grad;
            Tensor& gb = node(n.b).grad;
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i] += g[i];
                gb[i] -= g[i];
            }
            return;
        }
        case Op::Mul: {
            Tensor& ga = node(n.a).grad;
            Tensor& gb = node(n.b).grad;
            const Tensor& va = node(n.a).value;
            const Tensor& vb = node(n.b).value;
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i] += g[i] * vb[i];
                gb[i] += g[i] * va[i];
            }
            return;
        }
        case Op::Neg: {
            Tensor& ga = node(n.a).grad;
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] -= g[i];
            return;
        }
        case Op::Scale: {
            Tensor& ga = node(n.a).grad;
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += n.p0 * g[i];
            return;
        }
        case Op::AddConst: {
            Tensor& ga = node(n.a).grad;
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            return;
        }
        case Op::Tanh: {
            Tensor& ga = node(n.a).grad;
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
            return;
        }
        case Op::Softplus: {
            Tensor& ga = node(n.a).grad;
            const Tensor& va = node(n.a).value;
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * stable_sigmoid(va[i]);
            return;
        }
        case Op::Sigmoid: {
            Tensor& ga = node(n.a).grad;
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.value[i] * (1.0 - n.value[i]);
            return;
        }
        case Op::Exp: {
            Tensor& ga = node(n.a).grad;
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.value[i];
            return;
        }
        case Op::Log: {
            Tensor& ga = node(n.a).grad;
            const Tensor& va = node(n.a).value;
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / va[i];
            return;
        }
        case Op::Square: {
            Tensor& ga = node(n.a).grad;
            const Tensor& va = node(n.a).value;
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * 2.0 * va[i];
            return;
        }
        case Op::Softmax: {
            Tensor& ga = node(n.a).grad;
            double gy = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) gy += g[i] * n.value[i];
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += n.value[i] * (g[i] - gy);
            return;
        }
        case Op::Clamp: {
            Tensor& ga = node(n.a).grad;
            const Tensor& va = node(n.a).value;
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (va[i] >= n.p0 && va[i] <= n.p1) ga[i] += g[i];
            }
            return;
        }
        case Op::Sum: {
            Tensor& ga = node(n.a).grad;
            for (double& v : ga.data) v += g[0];
            return;
        }
        case Op::Mean: {
            Tensor& ga = node(n.a).grad;
            double s = g[0] / static_cast<double>(ga.size());
            for (double& v : ga.data) v += s;
            return;
        }
        case Op::Dot: {
            Tensor& ga = node(n.a).grad;
            Tensor& gb = node(n.b).grad;
            const Tensor& va = node(n.a).value;
            const Tensor& vb = node(n.b).value;
            for (std::size_t i = 0; i < ga.size(); ++i) {
                ga[i] += g[0] * vb[i];
                gb[i] += g[0] * va[i];
            }
            return;
        }
        case Op::Affine: {
            Tensor& gw = node(n.a).grad;
            Tensor& gb = node(n.b).grad;
            Tensor& gx = node(n.c).grad;
            const Tensor& w = node(n.a).value;
            const Tensor& x = node(n.c).value;
            std::size_t rows = w.extent(0), cols = w.extent(1);
            for (std::size_t r = 0; r < rows; ++r) {
                double gr = g[r];
                gb[r] += gr;
                double* gwr = &gw.data[r * cols];
                const double* wr = &w.data[r * cols];
                for (std::size_t j = 0; j < cols; ++j) {
                    gwr[j] += gr * x[j];
                    gx[j] += gr * wr[j];
                }
            }
            return;
        }
        case Op::Concat: {
            Tensor& ga = node(n.a).grad;
            Tensor& gb = node(n.b).grad;
            std::size_t na = ga.size();
            for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
            for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[na + i];
            return;
        }
    }
}

namespace {

Tape* same_tape(Var a, Var b) {
    if (!a.valid() || !b.valid() || a.tape != b.tape) {
        throw ContractError("operands must be valid Vars on the same tape");
    }
    return a.tape;
}

void require_same_shape(Var a, Var b, const char* what) {
    const Tensor& va = a.tape->value(a);
    const Tensor& vb = b.tape->value(b);
    if (va.size() != vb.size()) {
        throw ContractError(std::string(what) + ": size mismatch " + shape_to_string(va.shape) +
                            " vs " + shape_to_string(vb.shape));
    }
}

} // namespace

Var operator+(Var a, Var b) {
    Tape* t = same_tape(a, b);
    require_same_shape(a, b, "add");
    return t->emit(Op::Add, a.id, b.id, -1, 0, 0);
}

Var operator-(Var a, Var b) {
    Tape* t = same_tape(a, b);
    require_same_shape(a, b, "sub");
    return t->emit(Op::Sub, a.id, b.id, -1, 0, 0);
}

Var operator*(Var a, Var b) {
    Tape* t = same_tape(a, b);
    require_same_shape(a, b, "mul");
    return t->emit(Op::Mul, a.id, b.id, -1, 0, 0);
}

Var operator-(Var a) { return a.tape->emit(Op::Neg, a.id, -1, -1, 0, 0); }

Var scale(Var a, double factor) { return a.tape->emit(Op::Scale, a.id, -1, -1, factor, 0); }
Var add_const(Var a, double shift) { return a.tape->emit(Op::AddConst, a.id, -1, -1, shift, 0); }
Var tanh(Var a) { return a.tape->emit(Op::Tanh, a.id, -1, -1, 0, 0); }
Var softplus(Var a) { return a.tape->emit(Op::Softplus, a.id, -1, -1, 0, 0); }
Var sigmoid(Var a) { return a.tape->emit(Op::Sigmoid, a.id, -1, -1, 0, 0); }
Var exp(Var a) { return a.tape->emit(Op::Exp, a.id, -1, -1, 0, 0); }
Var log(Var a) { return a.tape->emit(Op::Log, a.id, -1, -1, 0, 0); }
Var square(Var a) { return a.tape->emit(Op::Square, a.id, -1, -1, 0, 0); }
Var softmax(Var a) { return a.tape->emit(Op::Softmax, a.id, -1, -1, 0, 0); }

Var clamp(Var a, double lo, double hi) {
    if (!(lo <= hi)) throw ContractError("clamp: lo must not exceed hi");
    return a.tape->emit(Op::Clamp, a.id, -1, -1, lo, hi);
}

Var sum(Var a) { return a.tape->emit(Op::Sum, a.id, -1, -1, 0, 0); }
Var mean(Var a) { return a.tape->emit(Op::Mean, a.id, -1, -1, 0, 0); }

Var dot(Var a, Var b) {
    Tape* t = same_tape(a, b);
    require_same_shape(a, b, "dot");
    return t->emit(Op::Dot, a.id, b.id, -1, 0, 0);
}

Var affine(Var w, Var b, Var x) {
    Tape* t = same_tape(w, x);
    same_tape(w, b);
    const Tensor& vw = t->value(w);
    const Tensor& vb = t->value(b);
    const Tensor& vx = t->value(x);
    if (vw.rank() != 2) throw ContractError("affine: W must be rank 2, got " + shape_to_string(vw.shape));
    if (vw.extent(1) != vx.size()) {
        throw ContractError("affine: W columns " + std::to_string(vw.extent(1)) +
                            " != input length " + std::to_string(vx.size()));
    }
    if (vw.extent(0) != vb.size()) {
        throw ContractError("affine: W rows " + std::to_string(vw.extent(0)) + " != bias length " +
                            std::to_string(vb.size()));
    }
    return t->emit(Op::Affine, w.id, b.id, x.id, 0, 0);
}

Var concat(Var a, Var b) {
    Tape* t = same_tape(a, b);
    return t->emit(Op::Concat, a.id, b.id, -1, 0, 0);
}

} // namespace uvae

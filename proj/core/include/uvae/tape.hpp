#pragma once

#include <cstddef>
#include <vector>

#include "uvae/tensor.hpp"

namespace uvae {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
struct Var {
    Tape* tape = nullptr;
    int id = -1;
    bool valid() const { return tape != nullptr && id >= 0; }
};

enum class Op : unsigned char {
    Constant,
    Leaf,
    Add,
    Sub,
    Mul,
    Neg,
    Scale,     // p0 * a
    AddConst,  // a + p0
    Tanh,
    Softplus,
    Sigmoid,
    Exp,
    Log,
    Square,
    Softmax,  // max-subtracted
    Clamp,    // into [p0, p1]
    Sum,
    Mean,
    Dot,
    Affine,  // W*x + b with inputs (W, b, x)
    Concat,
};

const char* op_name(Op op);

/// Eager expression recorder with a reverse sweep. Forward values are
/// computed at node creation and checked finite; backward() fills adjoints
/// for every node below the requested scalar root.
class Tape {
public:
    Var constant(Tensor value);
    Var leaf(Tensor value);

    Var emit(Op op, int a, int b, int c, double p0, double p1);

    /// Forward value of v. The reference is into the node store: creating
    /// any further node may invalidate it, so copy before emitting.
    const Tensor& value(Var v) const;
    /// Adjoint of v after backward(); zeros if v was unreachable from the root.
    const Tensor& adjoint(Var v) const;

    /// Reverse sweep from a scalar root. ContractError if root is not scalar.
    void backward(Var root);

    std::size_t node_count() const { return nodes_.size(); }
    void reserve(std::size_t n) { nodes_.reserve(n); }

private:
    struct Node {
        Op op;
        int a = -1, b = -1, c = -1;
        double p0 = 0.0, p1 = 0.0;
        Tensor value;
        Tensor grad;
    };
    std::vector<Node> nodes_;

    Tensor compute(Op op, int a, int b, int c, double p0, double p1) const;
    void accumulate(int id);
    const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
    Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
};

// Graph builders. Shapes are validated on entry; every result is a new node.
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);  // elementwise
Var operator-(Var a);

Var scale(Var a, double factor);
Var add_const(Var a, double shift);
Var tanh(Var a);
Var softplus(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
Var softmax(Var a);
Var clamp(Var a, double lo, double hi);
Var sum(Var a);
Var mean(Var a);
Var dot(Var a, Var b);
/// activation-free dense map: W (m x n) times x (n) plus b (m).
Var affine(Var w, Var b, Var x);
Var concat(Var a, Var b);

} // namespace uvae

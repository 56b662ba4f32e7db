#pragma once

#include <cstddef>
#include <vector>

namespace forge::nn {

/// Dense row-major matrix of doubles. The whole reference stack runs in
/// double precision; tolerances in the tests assume it.
struct Tensor {
    int rows = 0, cols = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}
    Tensor(int r, int c, std::vector<double> data);

    double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
    std::size_t size() const { return v.size(); }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
    bool finite() const;

    static Tensor zeros(int r, int c) { return Tensor(r, c); }
};

Tensor matmul(const Tensor& a, const Tensor& b);

/// Reverse-mode autodiff over a per-step expression graph. Nodes hold their
/// forward values; backward() fills gradients in reverse topological order
/// (which is construction order). Graphs are rebuilt every step; the node
/// count per training step is small enough that this costs little next to
/// the matmuls.
class Tape {
public:
    using Var = int;

    Var input(Tensor t);                 // constant, no gradient tracked
    Var param(const Tensor& t);          // leaf with gradient
    Var matmul(Var a, Var b);            // (n,k)x(k,m)
    Var matmul_bt(Var a, Var b);         // a * b^T, (n,k)x(m,k) -> (n,m)
    Var add(Var a, Var b);               // same shape
    Var add_rowvec(Var a, Var row);      // broadcast (1,c) over rows of (n,c)
    Var scale(Var a, double s);
    Var tanh_(Var a);
    Var softmax_rows(Var a);
    Var layernorm(Var a, Var gamma, Var beta);  // gamma, beta (1,c)
    Var slice_rows(Var a, int r0, int r1);      // [r0, r1)
    Var concat_rows(Var a, Var b);
    Var concat_rows(Var a, Var b, Var c);
    Var reshape(Var a, int r, int c);
    /// Mean over all entries of (a - target)^2; scalar output (1,1).
    Var mse_against(Var a, const Tensor& target);

    const Tensor& value(Var v) const { return nodes_[static_cast<std::size_t>(v)].val; }
    const Tensor& grad(Var v) const { return nodes_[static_cast<std::size_t>(v)].grad; }

    /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be scalar.
    void backward(Var loss);

    std::size_t node_count() const { return nodes_.size(); }

private:
    enum class Op {
        Input, Param, MatMul, MatMulBT, Add, AddRow, Scale, Tanh,
        SoftmaxRows, LayerNorm, SliceRows, ConcatRows2, ConcatRows3,
        Reshape, Mse
    };
    struct Node {
        Op op;
        int a = -1, b = -1, c = -1;
        double scalar = 0.0;     // Scale factor / slice bounds packed below
        int i0 = 0, i1 = 0;      // SliceRows bounds
        Tensor val;
        Tensor grad;
        Tensor aux;              // Mse: target; LayerNorm: cached (mu|inv_sigma)
    };
    Var push(Node n);
    std::vector<Node> nodes_;
};

}  // namespace forge::nn

#include "forge/tensor.hpp"

#include <cmath>
#include <cstring>

#include "forge/errors.hpp"

namespace forge::nn {

Tensor::Tensor(int r, int c, std::vector<double> data) : rows(r), cols(c), v(std::move(data)) {
    if (v.size() != static_cast<std::size_t>(r) * c)
        throw ShapeMismatch("tensor data length does not match shape");
}

bool Tensor::finite() const {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

namespace {

// out += a * b, ikj loop order for contiguous inner access.
void matmul_acc(const Tensor& a, const Tensor& b, Tensor& out) {
    const int n = a.rows, k = a.cols, m = b.cols;
    for (int i = 0; i < n; ++i) {
        const double* arow = a.v.data() + static_cast<std::size_t>(i) * k;
        double* orow = out.v.data() + static_cast<std::size_t>(i) * m;
        for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b.v.data() + static_cast<std::size_t>(p) * m;
            for (int j = 0; j < m; ++j) orow[j] += av * brow[j];
        }
    }
}

// out += a * b^T
void matmul_bt_acc(const Tensor& a, const Tensor& b, Tensor& out) {
    const int n = a.rows, k = a.cols, m = b.rows;
    for (int i = 0; i < n; ++i) {
        const double* arow = a.v.data() + static_cast<std::size_t>(i) * k;
        double* orow = out.v.data() + static_cast<std::size_t>(i) * m;
        for (int j = 0; j < m; ++j) {
            const double* brow = b.v.data() + static_cast<std::size_t>(j) * k;
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
            orow[j] += s;
        }
    }
}

// out += a^T * b
void matmul_at_acc(const Tensor& a, const Tensor& b, Tensor& out) {
    const int n = a.cols, k = a.rows, m = b.cols;
    for (int p = 0; p < k; ++p) {
        const double* arow = a.v.data() + static_cast<std::size_t>(p) * n;
        const double* brow = b.v.data() + static_cast<std::size_t>(p) * m;
        for (int i = 0; i < n; ++i) {
            const double av = arow[i];
            if (av == 0.0) continue;
            double* orow = out.v.data() + static_cast<std::size_t>(i) * m;
            for (int j = 0; j < m; ++j) orow[j] += av * brow[j];
        }
    }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols != b.rows) throw ShapeMismatch("matmul inner dimensions differ");
    Tensor out(a.rows, b.cols);
    matmul_acc(a, b, out);
    return out;
}

Tape::Var Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<Var>(nodes_.size() - 1);
}

Tape::Var Tape::input(Tensor t) {
    Node n;
    n.op = Op::Input;
    n.val = std::move(t);
    return push(std::move(n));
}

Tape::Var Tape::param(const Tensor& t) {
    Node n;
    n.op = Op::Param;
    n.val = t;
    return push(std::move(n));
}

Tape::Var Tape::matmul(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.cols != tb.rows) throw ShapeMismatch("matmul inner dimensions differ");
    Node n;
    n.op = Op::MatMul;
    n.a = a;
    n.b = b;
    n.val = Tensor(ta.rows, tb.cols);
    matmul_acc(ta, tb, n.val);
    return push(std::move(n));
}

Tape::Var Tape::matmul_bt(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.cols != tb.cols) throw ShapeMismatch("matmul_bt inner dimensions differ");
    Node n;
    n.op = Op::MatMulBT;
    n.a = a;
    n.b = b;
    n.val = Tensor(ta.rows, tb.rows);
    matmul_bt_acc(ta, tb, n.val);
    return push(std::move(n));
}

Tape::Var Tape::add(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (!ta.same_shape(tb)) throw ShapeMismatch("add shapes differ");
    Node n;
    n.op = Op::Add;
    n.a = a;
    n.b = b;
    n.val = ta;
    for (std::size_t i = 0; i < n.val.size(); ++i) n.val.v[i] += tb.v[i];
    return push(std::move(n));
}

Tape::Var Tape::add_rowvec(Var a, Var row) {
    const Tensor& ta = value(a);
    const Tensor& tr = value(row);
    if (tr.rows != 1 || tr.cols != ta.cols) throw ShapeMismatch("add_rowvec needs (1,c) row");
    Node n;
    n.op = Op::AddRow;
    n.a = a;
    n.b = row;
    n.val = ta;
    for (int i = 0; i < ta.rows; ++i) {
        for (int j = 0; j < ta.cols; ++j) n.val.at(i, j) += tr.v[static_cast<std::size_t>(j)];
    }
    return push(std::move(n));
}

Tape::Var Tape::scale(Var a, double s) {
    Node n;
    n.op = Op::Scale;
    n.a = a;
    n.scalar = s;
    n.val = value(a);
    for (double& x : n.val.v) x *= s;
    return push(std::move(n));
}

Tape::Var Tape::tanh_(Var a) {
    Node n;
    n.op = Op::Tanh;
    n.a = a;
    n.val = value(a);
    for (double& x : n.val.v) x = std::tanh(x);
    return push(std::move(n));
}

Tape::Var Tape::softmax_rows(Var a) {
    Node n;
    n.op = Op::SoftmaxRows;
    n.a = a;
    n.val = value(a);
    for (int i = 0; i < n.val.rows; ++i) {
        double* row = n.val.v.data() + static_cast<std::size_t>(i) * n.val.cols;
        double mx = row[0];
        for (int j = 1; j < n.val.cols; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < n.val.cols; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        for (int j = 0; j < n.val.cols; ++j) row[j] /= sum;
    }
    return push(std::move(n));
}

Tape::Var Tape::layernorm(Var a, Var gamma, Var beta) {
    const Tensor& ta = value(a);
    const Tensor& tg = value(gamma);
    const Tensor& tb = value(beta);
    if (tg.rows != 1 || tg.cols != ta.cols || tb.rows != 1 || tb.cols != ta.cols)
        throw ShapeMismatch("layernorm affine params must be (1,c)");
    constexpr double kEps = 1e-5;
    Node n;
    n.op = Op::LayerNorm;
    n.a = a;
    n.b = gamma;
    n.c = beta;
    n.val = Tensor(ta.rows, ta.cols);
    n.aux = Tensor(ta.rows, 2);  // per-row mean and 1/sigma
    for (int i = 0; i < ta.rows; ++i) {
        const double* row = ta.v.data() + static_cast<std::size_t>(i) * ta.cols;
        double mu = 0.0;
        for (int j = 0; j < ta.cols; ++j) mu += row[j];
        mu /= ta.cols;
        double var = 0.0;
        for (int j = 0; j < ta.cols; ++j) var += (row[j] - mu) * (row[j] - mu);
        var /= ta.cols;
        const double inv_sigma = 1.0 / std::sqrt(var + kEps);
        n.aux.at(i, 0) = mu;
        n.aux.at(i, 1) = inv_sigma;
        for (int j = 0; j < ta.cols; ++j) {
            n.val.at(i, j) = tg.v[static_cast<std::size_t>(j)] * (row[j] - mu) * inv_sigma +
                             tb.v[static_cast<std::size_t>(j)];
        }
    }
    return push(std::move(n));
}

Tape::Var Tape::slice_rows(Var a, int r0, int r1) {
    const Tensor& ta = value(a);
    if (r0 < 0 || r1 > ta.rows || r0 >= r1) throw ShapeMismatch("slice_rows bounds invalid");
    Node n;
    n.op = Op::SliceRows;
    n.a = a;
    n.i0 = r0;
    n.i1 = r1;
    n.val = Tensor(r1 - r0, ta.cols);
    std::memcpy(n.val.v.data(), ta.v.data() + static_cast<std::size_t>(r0) * ta.cols,
                n.val.size() * sizeof(double));
    return push(std::move(n));
}

Tape::Var Tape::concat_rows(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.cols != tb.cols) throw ShapeMismatch("concat_rows column mismatch");
    Node n;
    n.op = Op::ConcatRows2;
    n.a = a;
    n.b = b;
    n.val = Tensor(ta.rows + tb.rows, ta.cols);
    std::memcpy(n.val.v.data(), ta.v.data(), ta.size() * sizeof(double));
    std::memcpy(n.val.v.data() + ta.size(), tb.v.data(), tb.size() * sizeof(double));
    return push(std::move(n));
}

Tape::Var Tape::concat_rows(Var a, Var b, Var c) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    const Tensor& tc = value(c);
    if (ta.cols != tb.cols || ta.cols != tc.cols)
        throw ShapeMismatch("concat_rows column mismatch");
    Node n;
    n.op = Op::ConcatRows3;
    n.a = a;
    n.b = b;
    n.c = c;
    n.val = Tensor(ta.rows + tb.rows + tc.rows, ta.cols);
    std::memcpy(n.val.v.data(), ta.v.data(), ta.size() * sizeof(double));
    std::memcpy(n.val.v.data() + ta.size(), tb.v.data(), tb.size() * sizeof(double));
    std::memcpy(n.val.v.data() + ta.size() + tb.size(), tc.v.data(), tc.size() * sizeof(double));
    return push(std::move(n));
}

Tape::Var Tape::reshape(Var a, int r, int c) {
    const Tensor& ta = value(a);
    if (static_cast<std::size_t>(r) * c != ta.size()) throw ShapeMismatch("reshape size mismatch");
    Node n;
    n.op = Op::Reshape;
    n.a = a;
    n.val = Tensor(r, c, ta.v);
    return push(std::move(n));
}

Tape::Var Tape::mse_against(Var a, const Tensor& target) {
    const Tensor& ta = value(a);
    if (!ta.same_shape(target)) throw ShapeMismatch("mse target shape differs");
    Node n;
    n.op = Op::Mse;
    n.a = a;
    n.aux = target;
    n.val = Tensor(1, 1);
    double s = 0.0;
    for (std::size_t i = 0; i < ta.size(); ++i) {
        const double d = ta.v[i] - target.v[i];
        s += d * d;
    }
    n.val.v[0] = s / static_cast<double>(ta.size());
    return push(std::move(n));
}

void Tape::backward(Var loss) {
    auto& ln = nodes_[static_cast<std::size_t>(loss)];
    if (ln.val.size() != 1) throw ShapeMismatch("backward needs a scalar loss");
    for (auto& n : nodes_) {
        n.grad = Tensor(n.val.rows, n.val.cols);
    }
    ln.grad.v[0] = 1.0;

    for (auto idx = static_cast<std::ptrdiff_t>(nodes_.size()) - 1; idx >= 0; --idx) {
        Node& n = nodes_[static_cast<std::size_t>(idx)];
        bool any = false;
        for (double g : n.grad.v) {
            if (g != 0.0) {
                any = true;
                break;
            }
        }
        if (!any) continue;
        switch (n.op) {
            case Op::Input:
            case Op::Param:
                break;
            case Op::MatMul: {
                // dA += G * B^T ; dB += A^T * G
                matmul_bt_acc(n.grad, nodes_[n.b].val, nodes_[n.a].grad);
                matmul_at_acc(nodes_[n.a].val, n.grad, nodes_[n.b].grad);
                break;
            }
            case Op::MatMulBT: {
                // C = A * B^T: dA += G * B ; dB += G^T * A
                matmul_acc(n.grad, nodes_[n.b].val, nodes_[n.a].grad);
                matmul_at_acc(n.grad, nodes_[n.a].val, nodes_[n.b].grad);
                break;
            }
            case Op::Add: {
                for (std::size_t i = 0; i < n.grad.size(); ++i) {
                    nodes_[n.a].grad.v[i] += n.grad.v[i];
                    nodes_[n.b].grad.v[i] += n.grad.v[i];
                }
                break;
            }
            case Op::AddRow: {
                Tensor& ga = nodes_[n.a].grad;
                Tensor& gr = nodes_[n.b].grad;
                for (int i = 0; i < n.grad.rows; ++i) {
                    for (int j = 0; j < n.grad.cols; ++j) {
                        const double g = n.grad.at(i, j);
                        ga.at(i, j) += g;
                        gr.v[static_cast<std::size_t>(j)] += g;
                    }
                }
                break;
            }
            case Op::Scale: {
                for (std::size_t i = 0; i < n.grad.size(); ++i)
                    nodes_[n.a].grad.v[i] += n.scalar * n.grad.v[i];
                break;
            }
            case Op::Tanh: {
                for (std::size_t i = 0; i < n.grad.size(); ++i) {
                    const double y = n.val.v[i];
                    nodes_[n.a].grad.v[i] += (1.0 - y * y) * n.grad.v[i];
                }
                break;
            }
            case Op::SoftmaxRows: {
                Tensor& ga = nodes_[n.a].grad;
                for (int i = 0; i < n.val.rows; ++i) {
                    double dot = 0.0;
                    for (int j = 0; j < n.val.cols; ++j) dot += n.grad.at(i, j) * n.val.at(i, j);
                    for (int j = 0; j < n.val.cols; ++j)
                        ga.at(i, j) += n.val.at(i, j) * (n.grad.at(i, j) - dot);
                }
                break;
            }
            case Op::LayerNorm: {
                const Tensor& x = nodes_[n.a].val;
                const Tensor& gamma = nodes_[n.b].val;
                Tensor& gx = nodes_[n.a].grad;
                Tensor& ggamma = nodes_[n.b].grad;
                Tensor& gbeta = nodes_[n.c].grad;
                const int c = x.cols;
                for (int i = 0; i < x.rows; ++i) {
                    const double mu = n.aux.at(i, 0);
                    const double inv_sigma = n.aux.at(i, 1);
                    double sum_gy = 0.0, sum_gy_xhat = 0.0;
                    for (int j = 0; j < c; ++j) {
                        const double xhat = (x.at(i, j) - mu) * inv_sigma;
                        const double gy = n.grad.at(i, j) * gamma.v[static_cast<std::size_t>(j)];
                        sum_gy += gy;
                        sum_gy_xhat += gy * xhat;
                        ggamma.v[static_cast<std::size_t>(j)] += n.grad.at(i, j) * xhat;
                        gbeta.v[static_cast<std::size_t>(j)] += n.grad.at(i, j);
                    }
                    for (int j = 0; j < c; ++j) {
                        const double xhat = (x.at(i, j) - mu) * inv_sigma;
                        const double gy = n.grad.at(i, j) * gamma.v[static_cast<std::size_t>(j)];
                        gx.at(i, j) +=
                            inv_sigma * (gy - sum_gy / c - xhat * sum_gy_xhat / c);
                    }
                }
                break;
            }
            case Op::SliceRows: {
                Tensor& ga = nodes_[n.a].grad;
                std::size_t off = static_cast<std::size_t>(n.i0) * ga.cols;
                for (std::size_t i = 0; i < n.grad.size(); ++i) ga.v[off + i] += n.grad.v[i];
                break;
            }
            case Op::ConcatRows2: {
                Tensor& ga = nodes_[n.a].grad;
                Tensor& gb = nodes_[n.b].grad;
                for (std::size_t i = 0; i < ga.size(); ++i) ga.v[i] += n.grad.v[i];
                for (std::size_t i = 0; i < gb.size(); ++i) gb.v[i] += n.grad.v[ga.size() + i];
                break;
            }
            case Op::ConcatRows3: {
                Tensor& ga = nodes_[n.a].grad;
                Tensor& gb = nodes_[n.b].grad;
                Tensor& gc = nodes_[n.c].grad;
                for (std::size_t i = 0; i < ga.size(); ++i) ga.v[i] += n.grad.v[i];
                for (std::size_t i = 0; i < gb.size(); ++i) gb.v[i] += n.grad.v[ga.size() + i];
                for (std::size_t i = 0; i < gc.size(); ++i)
                    gc.v[i] += n.grad.v[ga.size() + gb.size() + i];
                break;
            }
            case Op::Reshape: {
                Tensor& ga = nodes_[n.a].grad;
                for (std::size_t i = 0; i < ga.size(); ++i) ga.v[i] += n.grad.v[i];
                break;
            }
            case Op::Mse: {
                const Tensor& a = nodes_[n.a].val;
                Tensor& ga = nodes_[n.a].grad;
                const double g = n.grad.v[0] * 2.0 / static_cast<double>(a.size());
                for (std::size_t i = 0; i < a.size(); ++i)
                    ga.v[i] += g * (a.v[i] - n.aux.v[i]);
                break;
            }
        }
    }
}

}  // namespace forge::nn

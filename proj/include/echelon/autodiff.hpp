#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "echelon/matrix.hpp"

namespace echelon::ad {

/// Reverse-mode tape over dense matrices. Nodes are appended in evaluation
/// order, which is already a topological order, so backward() is a single
/// reverse sweep. The tape is single-owner; build a fresh one per step.
class Tape {
    enum class Op {
        kLeaf,
        kAdd,
        kSub,
        kMul,
        kDiv,
        kMatmul,
        kTanh,
        kSigmoid,
        kRelu,
        kSquare,
        kMean,
        kScale,
        kConcatRows,
        kSliceRows,
    };

    struct Node {
        Op op;
        int a = -1;
        int b = -1;
        double scalar = 0.0;  // kScale factor / kSliceRows offset
        Matrix value;
        Matrix grad;
    };

public:
    using NodeId = int;

    NodeId leaf(Matrix v) { return push(Op::kLeaf, std::move(v), -1, -1); }

    NodeId add(NodeId x, NodeId y) { return binary_elementwise(Op::kAdd, x, y); }
    NodeId sub(NodeId x, NodeId y) { return binary_elementwise(Op::kSub, x, y); }
    NodeId mul(NodeId x, NodeId y) { return binary_elementwise(Op::kMul, x, y); }
    NodeId div(NodeId x, NodeId y) { return binary_elementwise(Op::kDiv, x, y); }

    NodeId matmul(NodeId x, NodeId y) {
        Matrix v = echelon::matmul(val(x), val(y));
        return push(Op::kMatmul, std::move(v), x, y);
    }

    NodeId tanh(NodeId x) {
        Matrix v = val(x);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::tanh(v[i]);
        return push(Op::kTanh, std::move(v), x, -1);
    }

    NodeId sigmoid(NodeId x) {
        Matrix v = val(x);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / (1.0 + std::exp(-v[i]));
        return push(Op::kSigmoid, std::move(v), x, -1);
    }

    NodeId relu(NodeId x) {
        Matrix v = val(x);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = v[i] > 0.0 ? v[i] : 0.0;
        return push(Op::kRelu, std::move(v), x, -1);
    }

    NodeId square(NodeId x) {
        Matrix v = val(x);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] *= v[i];
        return push(Op::kSquare, std::move(v), x, -1);
    }

    /// Full reduction to a 1x1 mean.
    NodeId mean(NodeId x) {
        const Matrix& xv = val(x);
        if (xv.size() == 0) throw std::invalid_argument("Tape::mean: empty operand");
        Matrix v(1, 1);
        double s = 0.0;
        for (std::size_t i = 0; i < xv.size(); ++i) s += xv[i];
        v[0] = s / static_cast<double>(xv.size());
        return push(Op::kMean, std::move(v), x, -1);
    }

    NodeId scale(NodeId x, double c) {
        Matrix v = val(x);
        v *= c;
        NodeId id = push(Op::kScale, std::move(v), x, -1);
        nodes_[static_cast<std::size_t>(id)].scalar = c;
        return id;
    }

    /// Stack two column blocks vertically (column counts must match).
    NodeId concat_rows(NodeId x, NodeId y) {
        const Matrix &xv = val(x), &yv = val(y);
        if (xv.cols() != yv.cols()) throw std::invalid_argument("concat_rows: column mismatch");
        Matrix v(xv.rows() + yv.rows(), xv.cols());
        for (std::size_t i = 0; i < xv.size(); ++i) v[i] = xv[i];
        for (std::size_t i = 0; i < yv.size(); ++i) v[xv.size() + i] = yv[i];
        return push(Op::kConcatRows, std::move(v), x, y);
    }

    NodeId slice_rows(NodeId x, std::size_t row_begin, std::size_t row_count) {
        const Matrix& xv = val(x);
        if (row_begin + row_count > xv.rows()) throw std::invalid_argument("slice_rows: out of range");
        Matrix v(row_count, xv.cols());
        for (std::size_t r = 0; r < row_count; ++r)
            for (std::size_t c = 0; c < xv.cols(); ++c) v(r, c) = xv(row_begin + r, c);
        NodeId id = push(Op::kSliceRows, std::move(v), x, -1);
        nodes_[static_cast<std::size_t>(id)].scalar = static_cast<double>(row_begin);
        return id;
    }

    const Matrix& val(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    const Matrix& grad(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].grad; }

    /// Reverse sweep from a scalar loss node. Gradients accumulate into every
    /// node; forward values are left untouched.
    void backward(NodeId loss) {
        Node& top = nodes_[static_cast<std::size_t>(loss)];
        if (top.value.rows() != 1 || top.value.cols() != 1)
            throw std::invalid_argument("Tape::backward: loss must be scalar");
        if (!std::isfinite(top.value[0]))
            throw std::runtime_error("Tape::backward: non-finite loss");
        for (Node& n : nodes_) n.grad = Matrix(n.value.rows(), n.value.cols());
        top.grad[0] = 1.0;

        for (int id = loss; id >= 0; --id) {
            Node& n = nodes_[static_cast<std::size_t>(id)];
            const Matrix& g = n.grad;
            switch (n.op) {
                case Op::kLeaf:
                    break;
                case Op::kAdd:
                    acc(n.a, g);
                    acc(n.b, g);
                    break;
                case Op::kSub: {
                    acc(n.a, g);
                    Matrix neg = g;
                    neg *= -1.0;
                    acc(n.b, neg);
                    break;
                }
                case Op::kMul: {
                    Matrix ga = g, gb = g;
                    const Matrix &av = val(n.a), &bv = val(n.b);
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        ga[i] *= bv[i];
                        gb[i] *= av[i];
                    }
                    acc(n.a, ga);
                    acc(n.b, gb);
                    break;
                }
                case Op::kDiv: {
                    Matrix ga = g, gb = g;
                    const Matrix &av = val(n.a), &bv = val(n.b);
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        ga[i] /= bv[i];
                        gb[i] *= -av[i] / (bv[i] * bv[i]);
                    }
                    acc(n.a, ga);
                    acc(n.b, gb);
                    break;
                }
                case Op::kMatmul: {
                    acc(n.a, echelon::matmul(g, transpose(val(n.b))));
                    acc(n.b, echelon::matmul(transpose(val(n.a)), g));
                    break;
                }
                case Op::kTanh: {
                    Matrix ga = g;
                    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= 1.0 - n.value[i] * n.value[i];
                    acc(n.a, ga);
                    break;
                }
                case Op::kSigmoid: {
                    Matrix ga = g;
                    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= n.value[i] * (1.0 - n.value[i]);
                    acc(n.a, ga);
                    break;
                }
                case Op::kRelu: {
                    Matrix ga = g;
                    const Matrix& av = val(n.a);
                    for (std::size_t i = 0; i < ga.size(); ++i)
                        if (av[i] <= 0.0) ga[i] = 0.0;
                    acc(n.a, ga);
                    break;
                }
                case Op::kSquare: {
                    Matrix ga = g;
                    const Matrix& av = val(n.a);
                    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= 2.0 * av[i];
                    acc(n.a, ga);
                    break;
                }
                case Op::kMean: {
                    const Matrix& av = val(n.a);
                    Matrix ga(av.rows(), av.cols());
                    const double share = g[0] / static_cast<double>(av.size());
                    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] = share;
                    acc(n.a, ga);
                    break;
                }
                case Op::kScale: {
                    Matrix ga = g;
                    ga *= n.scalar;
                    acc(n.a, ga);
                    break;
                }
                case Op::kConcatRows: {
                    const Matrix &av = val(n.a), &bv = val(n.b);
                    Matrix ga(av.rows(), av.cols()), gb(bv.rows(), bv.cols());
                    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] = g[i];
                    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] = g[ga.size() + i];
                    acc(n.a, ga);
                    acc(n.b, gb);
                    break;
                }
                case Op::kSliceRows: {
                    const Matrix& av = val(n.a);
                    Matrix ga(av.rows(), av.cols());
                    const auto off = static_cast<std::size_t>(n.scalar);
                    for (std::size_t r = 0; r < g.rows(); ++r)
                        for (std::size_t c = 0; c < g.cols(); ++c) ga(off + r, c) = g(r, c);
                    acc(n.a, ga);
                    break;
                }
            }
        }
    }

    std::size_t node_count() const { return nodes_.size(); }

private:
    NodeId binary_elementwise(Op op, NodeId x, NodeId y) {
        const Matrix &xv = val(x), &yv = val(y);
        if (!xv.same_shape(yv)) throw std::invalid_argument("Tape: elementwise shape mismatch");
        Matrix v = xv;
        switch (op) {
            case Op::kAdd:
                for (std::size_t i = 0; i < v.size(); ++i) v[i] += yv[i];
                break;
            case Op::kSub:
                for (std::size_t i = 0; i < v.size(); ++i) v[i] -= yv[i];
                break;
            case Op::kMul:
                for (std::size_t i = 0; i < v.size(); ++i) v[i] *= yv[i];
                break;
            case Op::kDiv:
                for (std::size_t i = 0; i < v.size(); ++i) v[i] /= yv[i];
                break;
            default:
                throw std::logic_error("not an elementwise op");
        }
        return push(op, std::move(v), x, y);
    }

    NodeId push(Op op, Matrix v, int a, int b) {
        Node n;
        n.op = op;
        n.a = a;
        n.b = b;
        n.value = std::move(v);
        nodes_.push_back(std::move(n));
        return static_cast<NodeId>(nodes_.size() - 1);
    }

    void acc(int id, const Matrix& g) { nodes_[static_cast<std::size_t>(id)].grad += g; }

    std::vector<Node> nodes_;
};

/// mean((pred - target)^2), the training loss used throughout.
inline Tape::NodeId mse(Tape& t, Tape::NodeId pred, Tape::NodeId target) {
    return t.mean(t.square(t.sub(pred, target)));
}

}  // namespace echelon::ad

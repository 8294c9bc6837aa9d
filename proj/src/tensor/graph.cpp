#include "ulab/tensor/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ulab {

namespace {

std::size_t as_index(double v, std::size_t bound, NodeId node) {
    if (!(v >= 0.0) || v != std::floor(v) || v >= static_cast<double>(bound)) {
        throw std::out_of_range("node " + std::to_string(node) + ": index " + std::to_string(v) +
                                " outside [0, " + std::to_string(bound) + ")");
    }
    return static_cast<std::size_t>(v);
}

[[noreturn]] void shape_fail(NodeId node, OpKind kind, const std::string& what) {
    throw ShapeError("node " + std::to_string(node) + " (" + std::string(op_name(kind)) + "): " + what);
}

void require_rank(NodeId node, OpKind kind, const Tensor& t, std::size_t rank) {
    if (t.rank() != rank) {
        shape_fail(node, kind, "expected rank " + std::to_string(rank) + ", got " + shape_string(t.shape()));
    }
}

void require_same(NodeId node, OpKind kind, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        shape_fail(node, kind, "shape " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
    }
}

double log_sum_exp(std::span<const double> row) {
    const double mx = *std::max_element(row.begin(), row.end());
    double s = 0.0;
    for (double v : row) s += std::exp(v - mx);
    return mx + std::log(s);
}

double sigmoid_value(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void accumulate(Tensor& dst, const Tensor& src) {
    auto d = dst.data();
    auto s = src.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

}  // namespace

std::string_view op_name(OpKind kind) {
    switch (kind) {
        case OpKind::Input: return "input";
        case OpKind::Parameter: return "parameter";
        case OpKind::Constant: return "constant";
        case OpKind::MatMul: return "matmul";
        case OpKind::AddBias: return "add_bias";
        case OpKind::Add: return "add";
        case OpKind::Sub: return "sub";
        case OpKind::Mul: return "mul";
        case OpKind::Scale: return "scale";
        case OpKind::Relu: return "relu";
        case OpKind::Sigmoid: return "sigmoid";
        case OpKind::Sum: return "sum";
        case OpKind::Mean: return "mean";
        case OpKind::SumSquares: return "sum_squares";
        case OpKind::GatherRows: return "gather_rows";
        case OpKind::SoftmaxCrossEntropy: return "softmax_cross_entropy";
        case OpKind::SigmoidCrossEntropy: return "sigmoid_cross_entropy";
        case OpKind::LogSoftmax: return "log_softmax";
        case OpKind::Pick: return "pick";
        case OpKind::SelectColumn: return "select_column";
    }
    return "unknown";
}

NonFiniteError::NonFiniteError(NodeId node, OpKind kind)
    : std::runtime_error("node " + std::to_string(node) + " (" + std::string(op_name(kind)) +
                         ") produced a non-finite value"),
      node_(node) {}

const Tensor& Gradients::operator[](NodeId id) const {
    auto it = grads_.find(id);
    if (it == grads_.end()) throw std::out_of_range("no gradient stored for node " + std::to_string(id));
    return it->second;
}

// ---------------------------------------------------------------------------
// construction

NodeId Graph::push(OpKind kind, std::vector<NodeId> inputs) {
    for (auto in : inputs) check_id(in);
    nodes_.push_back(Node{kind, std::move(inputs), {}, 0.0, 0, Tensor{}, false});
    return nodes_.size() - 1;
}

void Graph::check_id(NodeId id) const {
    if (id >= nodes_.size()) throw std::out_of_range("unknown node id " + std::to_string(id));
}

NodeId Graph::input(std::string name) {
    auto id = push(OpKind::Input, {});
    nodes_[id].name = std::move(name);
    return id;
}

NodeId Graph::parameter(std::string name, Tensor init) {
    if (!init.all_finite()) throw std::invalid_argument("parameter '" + name + "' is not finite");
    auto id = push(OpKind::Parameter, {});
    nodes_[id].name = std::move(name);
    nodes_[id].value = std::move(init);
    nodes_[id].evaluated = true;
    return id;
}

NodeId Graph::constant(Tensor value) {
    auto id = push(OpKind::Constant, {});
    nodes_[id].value = std::move(value);
    nodes_[id].evaluated = true;
    return id;
}

NodeId Graph::matmul(NodeId a, NodeId b) { return push(OpKind::MatMul, {a, b}); }
NodeId Graph::add_bias(NodeId x, NodeId bias) { return push(OpKind::AddBias, {x, bias}); }
NodeId Graph::add(NodeId a, NodeId b) { return push(OpKind::Add, {a, b}); }
NodeId Graph::sub(NodeId a, NodeId b) { return push(OpKind::Sub, {a, b}); }
NodeId Graph::mul(NodeId a, NodeId b) { return push(OpKind::Mul, {a, b}); }
NodeId Graph::scale(NodeId x, double factor) {
    auto id = push(OpKind::Scale, {x});
    nodes_[id].factor = factor;
    return id;
}
NodeId Graph::relu(NodeId x) { return push(OpKind::Relu, {x}); }
NodeId Graph::sigmoid(NodeId x) { return push(OpKind::Sigmoid, {x}); }
NodeId Graph::sum(NodeId x) { return push(OpKind::Sum, {x}); }
NodeId Graph::mean(NodeId x) { return push(OpKind::Mean, {x}); }
NodeId Graph::sum_squares(NodeId x) { return push(OpKind::SumSquares, {x}); }
NodeId Graph::gather_rows(NodeId table, NodeId indices) { return push(OpKind::GatherRows, {table, indices}); }
NodeId Graph::softmax_cross_entropy(NodeId logits, NodeId labels) {
    return push(OpKind::SoftmaxCrossEntropy, {logits, labels});
}
NodeId Graph::sigmoid_cross_entropy(NodeId logits, NodeId targets) {
    return push(OpKind::SigmoidCrossEntropy, {logits, targets});
}
NodeId Graph::log_softmax(NodeId logits) { return push(OpKind::LogSoftmax, {logits}); }
NodeId Graph::pick(NodeId x, NodeId indices) { return push(OpKind::Pick, {x, indices}); }
NodeId Graph::select_column(NodeId x, std::size_t column) {
    auto id = push(OpKind::SelectColumn, {x});
    nodes_[id].column = column;
    return id;
}

// ---------------------------------------------------------------------------
// accessors

const Tensor& Graph::value(NodeId id) const {
    check_id(id);
    if (!nodes_[id].evaluated) throw std::logic_error("node " + std::to_string(id) + " has not been evaluated");
    return nodes_[id].value;
}

std::vector<NodeId> Graph::parameters() const {
    std::vector<NodeId> out;
    for (NodeId i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].kind == OpKind::Parameter) out.push_back(i);
    }
    return out;
}

Tensor& Graph::parameter_value(NodeId id) {
    check_id(id);
    if (nodes_[id].kind != OpKind::Parameter) throw std::invalid_argument("node is not a parameter");
    return nodes_[id].value;
}

const Tensor& Graph::parameter_value(NodeId id) const {
    check_id(id);
    if (nodes_[id].kind != OpKind::Parameter) throw std::invalid_argument("node is not a parameter");
    return nodes_[id].value;
}

const std::string& Graph::name(NodeId id) const {
    check_id(id);
    return nodes_[id].name;
}

NodeId Graph::find(std::string_view name) const {
    for (NodeId i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].name == name) return i;
    }
    throw std::out_of_range("no node named '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// forward

void Graph::forward(const Feed& feed, std::span<const NodeId> targets) {
    std::vector<bool> needed(nodes_.size(), targets.empty());
    for (auto t : targets) {
        check_id(t);
        needed[t] = true;
    }
    for (NodeId i = nodes_.size(); i-- > 0;) {
        if (!needed[i]) continue;
        for (auto in : nodes_[i].inputs) needed[in] = true;
    }

    for (NodeId i = 0; i < nodes_.size(); ++i) {
        Node& n = nodes_[i];
        if (n.kind == OpKind::Parameter || n.kind == OpKind::Constant) continue;
        n.evaluated = false;
        if (!needed[i]) continue;
        if (n.kind == OpKind::Input) {
            auto it = feed.find(n.name);
            if (it == feed.end()) {
                throw std::invalid_argument("node " + std::to_string(i) + ": input '" + n.name + "' is not bound");
            }
            if (!it->second.all_finite()) throw NonFiniteError(i, n.kind);
            n.value = it->second;
            n.evaluated = true;
            continue;
        }
        evaluate(i);
        if (!n.value.all_finite()) throw NonFiniteError(i, n.kind);
        n.evaluated = true;
    }
}

void Graph::evaluate(NodeId id) {
    Node& n = nodes_[id];
    const auto in = [&](std::size_t k) -> const Tensor& { return nodes_[n.inputs[k]].value; };

    switch (n.kind) {
        case OpKind::MatMul: {
            const Tensor& a = in(0);
            const Tensor& b = in(1);
            require_rank(id, n.kind, a, 2);
            require_rank(id, n.kind, b, 2);
            const std::size_t rows = a.dim(0), inner = a.dim(1), cols = b.dim(1);
            if (b.dim(0) != inner) {
                shape_fail(id, n.kind, shape_string(a.shape()) + " x " + shape_string(b.shape()));
            }
            Tensor out(Shape{rows, cols});
            const double* pa = a.data().data();
            const double* pb = b.data().data();
            double* po = out.data().data();
            for (std::size_t i = 0; i < rows; ++i) {
                double* orow = po + i * cols;
                for (std::size_t p = 0; p < inner; ++p) {
                    const double av = pa[i * inner + p];
                    if (av == 0.0) continue;
                    const double* brow = pb + p * cols;
                    for (std::size_t j = 0; j < cols; ++j) orow[j] += av * brow[j];
                }
            }
            n.value = std::move(out);
            break;
        }
        case OpKind::AddBias: {
            const Tensor& x = in(0);
            const Tensor& b = in(1);
            require_rank(id, n.kind, x, 2);
            require_rank(id, n.kind, b, 1);
            if (b.dim(0) != x.dim(1)) shape_fail(id, n.kind, "bias " + shape_string(b.shape()) + " for " + shape_string(x.shape()));
            Tensor out = x;
            for (std::size_t r = 0; r < x.dim(0); ++r) {
                auto row = out.row(r);
                for (std::size_t c = 0; c < row.size(); ++c) row[c] += b[c];
            }
            n.value = std::move(out);
            break;
        }
        case OpKind::Add:
        case OpKind::Sub:
        case OpKind::Mul: {
            const Tensor& a = in(0);
            const Tensor& b = in(1);
            require_same(id, n.kind, a, b);
            Tensor out(a.shape());
            for (std::size_t i = 0; i < a.size(); ++i) {
                out[i] = n.kind == OpKind::Add ? a[i] + b[i] : n.kind == OpKind::Sub ? a[i] - b[i] : a[i] * b[i];
            }
            n.value = std::move(out);
            break;
        }
        case OpKind::Scale: {
            Tensor out = in(0);
            for (auto& v : out.data()) v *= n.factor;
            n.value = std::move(out);
            break;
        }
        case OpKind::Relu: {
            Tensor out = in(0);
            for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
            n.value = std::move(out);
            break;
        }
        case OpKind::Sigmoid: {
            Tensor out = in(0);
            for (auto& v : out.data()) v = sigmoid_value(v);
            n.value = std::move(out);
            break;
        }
        case OpKind::Sum:
        case OpKind::Mean:
        case OpKind::SumSquares: {
            const Tensor& x = in(0);
            double s = 0.0;
            for (double v : x.data()) s += n.kind == OpKind::SumSquares ? v * v : v;
            if (n.kind == OpKind::Mean) {
                if (x.size() == 0) shape_fail(id, n.kind, "mean of empty tensor");
                s /= static_cast<double>(x.size());
            }
            n.value = Tensor::scalar(s);
            break;
        }
        case OpKind::GatherRows: {
            const Tensor& table = in(0);
            const Tensor& idx = in(1);
            require_rank(id, n.kind, table, 2);
            require_rank(id, n.kind, idx, 2);
            const std::size_t vocab = table.dim(0), width = table.dim(1);
            const std::size_t batch = idx.dim(0), window = idx.dim(1);
            Tensor out(Shape{batch, window * width});
            for (std::size_t b = 0; b < batch; ++b) {
                for (std::size_t w = 0; w < window; ++w) {
                    const auto t = as_index(idx.at(b, w), vocab, id);
                    auto src = table.row(t);
                    std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>((b * window + w) * width));
                }
            }
            n.value = std::move(out);
            break;
        }
        case OpKind::SoftmaxCrossEntropy: {
            const Tensor& logits = in(0);
            const Tensor& labels = in(1);
            require_rank(id, n.kind, logits, 2);
            require_rank(id, n.kind, labels, 1);
            if (labels.dim(0) != logits.dim(0) || logits.dim(0) == 0) {
                shape_fail(id, n.kind, "labels " + shape_string(labels.shape()) + " for " + shape_string(logits.shape()));
            }
            double total = 0.0;
            for (std::size_t r = 0; r < logits.dim(0); ++r) {
                const auto row = logits.row(r);
                const auto y = as_index(labels[r], row.size(), id);
                total += log_sum_exp(row) - row[y];
            }
            n.value = Tensor::scalar(total / static_cast<double>(logits.dim(0)));
            break;
        }
        case OpKind::SigmoidCrossEntropy: {
            const Tensor& z = in(0);
            const Tensor& t = in(1);
            require_same(id, n.kind, z, t);
            if (z.size() == 0) shape_fail(id, n.kind, "empty logits");
            double total = 0.0;
            for (std::size_t i = 0; i < z.size(); ++i) {
                const double v = z[i];
                total += std::max(v, 0.0) - v * t[i] + std::log1p(std::exp(-std::abs(v)));
            }
            n.value = Tensor::scalar(total / static_cast<double>(z.size()));
            break;
        }
        case OpKind::LogSoftmax: {
            const Tensor& x = in(0);
            require_rank(id, n.kind, x, 2);
            Tensor out = x;
            for (std::size_t r = 0; r < x.dim(0); ++r) {
                auto row = out.row(r);
                const double lse = log_sum_exp(row);
                for (auto& v : row) v -= lse;
            }
            n.value = std::move(out);
            break;
        }
        case OpKind::Pick: {
            const Tensor& x = in(0);
            const Tensor& idx = in(1);
            require_rank(id, n.kind, x, 2);
            require_rank(id, n.kind, idx, 1);
            if (idx.dim(0) != x.dim(0)) shape_fail(id, n.kind, "indices " + shape_string(idx.shape()) + " for " + shape_string(x.shape()));
            Tensor out(Shape{x.dim(0)});
            for (std::size_t r = 0; r < x.dim(0); ++r) out[r] = x.at(r, as_index(idx[r], x.dim(1), id));
            n.value = std::move(out);
            break;
        }
        case OpKind::SelectColumn: {
            const Tensor& x = in(0);
            require_rank(id, n.kind, x, 2);
            if (n.column >= x.dim(1)) shape_fail(id, n.kind, "column " + std::to_string(n.column) + " of " + shape_string(x.shape()));
            Tensor out(Shape{x.dim(0)});
            for (std::size_t r = 0; r < x.dim(0); ++r) out[r] = x.at(r, n.column);
            n.value = std::move(out);
            break;
        }
        case OpKind::Input:
        case OpKind::Parameter:
        case OpKind::Constant:
            break;
    }
}

// ---------------------------------------------------------------------------
// backward

Gradients Graph::backward(NodeId loss, std::span<const NodeId> wrt) {
    check_id(loss);
    const Tensor& lv = value(loss);
    if (lv.size() != 1) {
        throw ShapeError("backward: loss node " + std::to_string(loss) + " is not scalar " + shape_string(lv.shape()));
    }

    std::vector<bool> is_target(nodes_.size(), false);
    for (auto w : wrt) {
        check_id(w);
        is_target[w] = true;
    }
    std::vector<bool> needs_grad(nodes_.size(), false);
    for (NodeId i = 0; i <= loss; ++i) {
        const Node& n = nodes_[i];
        bool need = n.kind == OpKind::Parameter || is_target[i];
        for (auto in : n.inputs) need = need || needs_grad[in];
        needs_grad[i] = need;
    }

    std::vector<Tensor> adjoints(loss + 1, Tensor(Shape{0}));
    std::vector<bool> has_adjoint(loss + 1, false);
    adjoints[loss] = Tensor(lv.shape(), 1.0);
    has_adjoint[loss] = true;

    for (NodeId i = loss + 1; i-- > 0;) {
        if (!has_adjoint[i] || !needs_grad[i]) continue;
        const Node& n = nodes_[i];
        if (n.inputs.empty()) continue;
        if (!n.evaluated) throw std::logic_error("backward through unevaluated node " + std::to_string(i));
        std::vector<Tensor> local(n.inputs.size(), Tensor(Shape{0}));
        propagate(i, adjoints[i], local, needs_grad);
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
            const NodeId src = n.inputs[k];
            if (!needs_grad[src] || local[k].size() == 0) continue;
            if (!has_adjoint[src]) {
                adjoints[src] = std::move(local[k]);
                has_adjoint[src] = true;
            } else {
                accumulate(adjoints[src], local[k]);
            }
        }
    }

    Gradients grads;
    for (NodeId i = 0; i < nodes_.size(); ++i) {
        const bool want = nodes_[i].kind == OpKind::Parameter || is_target[i];
        if (!want) continue;
        if (i <= loss && has_adjoint[i]) {
            grads.set(i, std::move(adjoints[i]));
        } else {
            grads.set(i, Tensor(nodes_[i].evaluated || nodes_[i].kind == OpKind::Parameter ? nodes_[i].value.shape() : Shape{0}));
        }
    }
    return grads;
}

void Graph::propagate(NodeId id, const Tensor& up, std::vector<Tensor>& out,
                      const std::vector<bool>& needs_grad) const {
    const Node& n = nodes_[id];
    const auto in = [&](std::size_t k) -> const Tensor& { return nodes_[n.inputs[k]].value; };
    const auto wants = [&](std::size_t k) { return needs_grad[n.inputs[k]]; };

    switch (n.kind) {
        case OpKind::MatMul: {
            const Tensor& a = in(0);
            const Tensor& b = in(1);
            const std::size_t rows = a.dim(0), inner = a.dim(1), cols = b.dim(1);
            const double* pu = up.data().data();
            if (wants(0)) {
                Tensor da(a.shape());
                const double* pb = b.data().data();
                for (std::size_t i = 0; i < rows; ++i) {
                    const double* urow = pu + i * cols;
                    for (std::size_t p = 0; p < inner; ++p) {
                        const double* brow = pb + p * cols;
                        double s = 0.0;
                        for (std::size_t j = 0; j < cols; ++j) s += urow[j] * brow[j];
                        da[i * inner + p] = s;
                    }
                }
                out[0] = std::move(da);
            }
            if (wants(1)) {
                Tensor db(b.shape());
                const double* pa = a.data().data();
                double* pdb = db.data().data();
                for (std::size_t i = 0; i < rows; ++i) {
                    const double* urow = pu + i * cols;
                    for (std::size_t p = 0; p < inner; ++p) {
                        const double av = pa[i * inner + p];
                        if (av == 0.0) continue;
                        double* drow = pdb + p * cols;
                        for (std::size_t j = 0; j < cols; ++j) drow[j] += av * urow[j];
                    }
                }
                out[1] = std::move(db);
            }
            break;
        }
        case OpKind::AddBias: {
            if (wants(0)) out[0] = up;
            if (wants(1)) {
                Tensor db(in(1).shape());
                for (std::size_t r = 0; r < up.dim(0); ++r) {
                    auto row = up.row(r);
                    for (std::size_t c = 0; c < row.size(); ++c) db[c] += row[c];
                }
                out[1] = std::move(db);
            }
            break;
        }
        case OpKind::Add:
            if (wants(0)) out[0] = up;
            if (wants(1)) out[1] = up;
            break;
        case OpKind::Sub:
            if (wants(0)) out[0] = up;
            if (wants(1)) {
                Tensor d = up;
                for (auto& v : d.data()) v = -v;
                out[1] = std::move(d);
            }
            break;
        case OpKind::Mul: {
            const Tensor& a = in(0);
            const Tensor& b = in(1);
            if (wants(0)) {
                Tensor d(a.shape());
                for (std::size_t i = 0; i < d.size(); ++i) d[i] = up[i] * b[i];
                out[0] = std::move(d);
            }
            if (wants(1)) {
                Tensor d(b.shape());
                for (std::size_t i = 0; i < d.size(); ++i) d[i] = up[i] * a[i];
                out[1] = std::move(d);
            }
            break;
        }
        case OpKind::Scale: {
            Tensor d = up;
            for (auto& v : d.data()) v *= n.factor;
            out[0] = std::move(d);
            break;
        }
        case OpKind::Relu: {
            const Tensor& x = in(0);
            Tensor d = up;
            for (std::size_t i = 0; i < d.size(); ++i) {
                if (!(x[i] > 0.0)) d[i] = 0.0;
            }
            out[0] = std::move(d);
            break;
        }
        case OpKind::Sigmoid: {
            const Tensor& y = n.value;
            Tensor d = up;
            for (std::size_t i = 0; i < d.size(); ++i) d[i] *= y[i] * (1.0 - y[i]);
            out[0] = std::move(d);
            break;
        }
        case OpKind::Sum:
        case OpKind::Mean:
        case OpKind::SumSquares: {
            const Tensor& x = in(0);
            const double g = up.item();
            Tensor d(x.shape());
            if (n.kind == OpKind::SumSquares) {
                for (std::size_t i = 0; i < d.size(); ++i) d[i] = 2.0 * x[i] * g;
            } else {
                d.fill(n.kind == OpKind::Mean ? g / static_cast<double>(x.size()) : g);
            }
            out[0] = std::move(d);
            break;
        }
        case OpKind::GatherRows: {
            if (!wants(0)) break;
            const Tensor& table = in(0);
            const Tensor& idx = in(1);
            const std::size_t width = table.dim(1), window = idx.dim(1);
            Tensor d(table.shape());
            for (std::size_t b = 0; b < idx.dim(0); ++b) {
                for (std::size_t w = 0; w < window; ++w) {
                    const auto t = static_cast<std::size_t>(idx.at(b, w));
                    auto drow = d.row(t);
                    const double* src = up.data().data() + (b * window + w) * width;
                    for (std::size_t c = 0; c < width; ++c) drow[c] += src[c];
                }
            }
            out[0] = std::move(d);
            break;
        }
        case OpKind::SoftmaxCrossEntropy: {
            if (!wants(0)) break;
            const Tensor& logits = in(0);
            const Tensor& labels = in(1);
            const double g = up.item() / static_cast<double>(logits.dim(0));
            Tensor d(logits.shape());
            for (std::size_t r = 0; r < logits.dim(0); ++r) {
                const auto row = logits.row(r);
                const auto p = softmax(row);
                auto drow = d.row(r);
                for (std::size_t c = 0; c < row.size(); ++c) drow[c] = p[c] * g;
                drow[static_cast<std::size_t>(labels[r])] -= g;
            }
            out[0] = std::move(d);
            break;
        }
        case OpKind::SigmoidCrossEntropy: {
            const Tensor& z = in(0);
            const Tensor& t = in(1);
            const double g = up.item() / static_cast<double>(z.size());
            if (wants(0)) {
                Tensor d(z.shape());
                for (std::size_t i = 0; i < d.size(); ++i) d[i] = (sigmoid_value(z[i]) - t[i]) * g;
                out[0] = std::move(d);
            }
            if (wants(1)) {
                Tensor d(t.shape());
                for (std::size_t i = 0; i < d.size(); ++i) d[i] = -z[i] * g;
                out[1] = std::move(d);
            }
            break;
        }
        case OpKind::LogSoftmax: {
            const Tensor& y = n.value;
            Tensor d = up;
            for (std::size_t r = 0; r < y.dim(0); ++r) {
                const auto urow = up.row(r);
                double s = 0.0;
                for (double v : urow) s += v;
                auto drow = d.row(r);
                const auto yrow = y.row(r);
                for (std::size_t c = 0; c < drow.size(); ++c) drow[c] = urow[c] - std::exp(yrow[c]) * s;
            }
            out[0] = std::move(d);
            break;
        }
        case OpKind::Pick: {
            if (!wants(0)) break;
            const Tensor& x = in(0);
            const Tensor& idx = in(1);
            Tensor d(x.shape());
            for (std::size_t r = 0; r < x.dim(0); ++r) d.at(r, static_cast<std::size_t>(idx[r])) = up[r];
            out[0] = std::move(d);
            break;
        }
        case OpKind::SelectColumn: {
            const Tensor& x = in(0);
            Tensor d(x.shape());
            for (std::size_t r = 0; r < x.dim(0); ++r) d.at(r, n.column) = up[r];
            out[0] = std::move(d);
            break;
        }
        case OpKind::Input:
        case OpKind::Parameter:
        case OpKind::Constant:
            break;
    }
}

// ---------------------------------------------------------------------------
// free functions

Tensor finite_diff_grad(Graph& graph, const Feed& feed, NodeId loss, NodeId parameter, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: step must be positive");
    Tensor& p = graph.parameter_value(parameter);
    Tensor grad(p.shape());
    const NodeId targets[] = {loss};
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double orig = p[i];
        p[i] = orig + h;
        graph.forward(feed, targets);
        const double plus = graph.value(loss).item();
        p[i] = orig - h;
        graph.forward(feed, targets);
        const double minus = graph.value(loss).item();
        p[i] = orig;
        grad[i] = (plus - minus) / (2.0 * h);
    }
    graph.forward(feed, targets);
    return grad;
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> p(logits.begin(), logits.end());
    if (p.empty()) return p;
    const double mx = *std::max_element(p.begin(), p.end());
    double s = 0.0;
    for (auto& v : p) {
        v = std::exp(v - mx);
        s += v;
    }
    for (auto& v : p) v /= s;
    return p;
}

double cross_entropy(std::span<const double> logits, std::size_t label) {
    if (logits.size() < 2) throw std::invalid_argument("cross_entropy needs at least two classes");
    if (label >= logits.size()) {
        throw std::out_of_range("cross_entropy: label " + std::to_string(label) + " outside " +
                                std::to_string(logits.size()) + " classes");
    }
    return log_sum_exp(logits) - logits[label];
}

Tensor label_tensor(std::span<const std::size_t> labels) {
    std::vector<double> v(labels.size());
    std::transform(labels.begin(), labels.end(), v.begin(), [](std::size_t l) { return static_cast<double>(l); });
    return Tensor::vector(std::move(v));
}

}  // namespace ulab

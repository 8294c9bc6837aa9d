#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ulab/tensor/tensor.hpp"

namespace ulab {

using NodeId = std::size_t;

enum class OpKind {
    Input,
    Parameter,
    Constant,
    MatMul,
    AddBias,
    Add,
    Sub,
    Mul,
    Scale,
    Relu,
    Sigmoid,
    Sum,
    Mean,
    SumSquares,
    GatherRows,
    SoftmaxCrossEntropy,
    SigmoidCrossEntropy,
    LogSoftmax,
    Pick,
    SelectColumn,
};

std::string_view op_name(OpKind kind);

/// Raised when a node produces NaN or Inf; carries the offending node.
class NonFiniteError : public std::runtime_error {
public:
    NonFiniteError(NodeId node, OpKind kind);
    NodeId node() const noexcept { return node_; }

private:
    NodeId node_;
};

/// Values bound to named input nodes for one forward pass.
using Feed = std::map<std::string, Tensor, std::less<>>;

/// Gradients of a scalar loss with respect to parameters (and any inputs
/// explicitly requested in `Graph::backward`).
class Gradients {
public:
    bool contains(NodeId id) const { return grads_.contains(id); }
    const Tensor& operator[](NodeId id) const;
    const std::map<NodeId, Tensor>& all() const noexcept { return grads_; }
    void set(NodeId id, Tensor grad) { grads_[id] = std::move(grad); }

private:
    std::map<NodeId, Tensor> grads_;
};

/// Define-then-run computation graph with reverse-mode differentiation.
///
/// Nodes are appended in construction order, so node ids are a topological
/// order by construction. Parameters live inside the graph; copying a graph
/// copies its parameter values, which is how models get value semantics.
/// Shapes are resolved at forward time, so the leading batch dimension of an
/// input may change between passes.
class Graph {
public:
    NodeId input(std::string name);
    NodeId parameter(std::string name, Tensor init);
    NodeId constant(Tensor value);

    NodeId matmul(NodeId a, NodeId b);
    NodeId add_bias(NodeId x, NodeId bias);
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId scale(NodeId x, double factor);
    NodeId relu(NodeId x);
    NodeId sigmoid(NodeId x);
    NodeId sum(NodeId x);
    NodeId mean(NodeId x);
    NodeId sum_squares(NodeId x);
    // table [V, E] indexed by integer-valued [B, w] -> [B, w * E]
    NodeId gather_rows(NodeId table, NodeId indices);
    // mean over rows of -log softmax(logits)[label]; labels are [B] class ids
    NodeId softmax_cross_entropy(NodeId logits, NodeId labels);
    // mean over all elements of binary cross-entropy on logits
    NodeId sigmoid_cross_entropy(NodeId logits, NodeId targets);
    NodeId log_softmax(NodeId logits);
    // [B, C] and [B] ids -> [B]
    NodeId pick(NodeId x, NodeId indices);
    NodeId select_column(NodeId x, std::size_t column);

    /// Evaluates the nodes needed for `targets` (all nodes when empty).
    void forward(const Feed& feed, std::span<const NodeId> targets = {});

    /// Gradient of scalar `loss` for every parameter, plus the listed nodes.
    /// Requires a forward pass that evaluated `loss`.
    Gradients backward(NodeId loss, std::span<const NodeId> wrt = {});

    const Tensor& value(NodeId id) const;

    std::vector<NodeId> parameters() const;
    Tensor& parameter_value(NodeId id);
    const Tensor& parameter_value(NodeId id) const;
    const std::string& name(NodeId id) const;
    NodeId find(std::string_view name) const;

    OpKind kind(NodeId id) const { return nodes_.at(id).kind; }
    std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct Node {
        OpKind kind;
        std::vector<NodeId> inputs;
        std::string name;
        double factor = 0.0;
        std::size_t column = 0;
        Tensor value;
        bool evaluated = false;
    };

    NodeId push(OpKind kind, std::vector<NodeId> inputs);
    void check_id(NodeId id) const;
    void evaluate(NodeId id);
    void propagate(NodeId id, const Tensor& upstream, std::vector<Tensor>& adjoints,
                   const std::vector<bool>& needs_grad) const;

    std::vector<Node> nodes_;
};

/// Central-difference estimate (L(p+h) - L(p-h)) / 2h for every coordinate
/// of `parameter`. Leaves the parameter value unchanged.
Tensor finite_diff_grad(Graph& graph, const Feed& feed, NodeId loss, NodeId parameter, double h = 1e-5);

/// Row-wise numerically stable softmax of a logit vector.
std::vector<double> softmax(std::span<const double> logits);

/// -ln softmax(logits)[label] with max subtraction.
double cross_entropy(std::span<const double> logits, std::size_t label);

/// Builds a [n] tensor of class ids.
Tensor label_tensor(std::span<const std::size_t> labels);

}  // namespace ulab

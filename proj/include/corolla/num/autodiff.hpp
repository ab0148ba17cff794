#pragma once

#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "corolla/num/tensor.hpp"

namespace corolla::num {

// Define-by-run reverse-mode graph. Every operation records a node holding
// its output value, parent links, and a closure that pushes the node's
// gradient to the parents. backward() visits nodes in reverse topological
// order exactly once.
template <class T>
struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool grad_set = false;
    bool requires_grad = false;
    const char* op = "leaf";
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backprop;

    void accumulate(const Tensor<T>& g) {
        if (!grad_set) {
            grad = g;
            grad_set = true;
        } else {
            for (size_t i = 0; i < grad.data.size(); ++i)
                grad.data[i] += g.data[i];
        }
    }
};

template <class T>
class Var {
  public:
    Var() = default;
    explicit Var(std::shared_ptr<Node<T>> n) : node_(std::move(n)) {}

    static Var leaf(Tensor<T> value, bool requires_grad = false) {
        auto n = std::make_shared<Node<T>>();
        n->value = std::move(value);
        n->requires_grad = requires_grad;
        return Var(std::move(n));
    }

    bool valid() const { return node_ != nullptr; }
    const Tensor<T>& value() const { return node_->value; }
    Tensor<T>& value() { return node_->value; }
    const Tensor<T>& grad() const { return node_->grad; }
    bool has_grad() const { return node_->grad_set; }
    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool b) { node_->requires_grad = b; }
    const std::shared_ptr<Node<T>>& node() const { return node_; }

    void zero_grad() {
        node_->grad = Tensor<T>();
        node_->grad_set = false;
    }

  private:
    std::shared_ptr<Node<T>> node_;
};

template <class T>
Var<T> make_op(const char* name, Tensor<T> value,
               std::vector<Var<T>> parents,
               std::function<void(Node<T>&)> backprop) {
    check_finite(value, name);
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    n->op = name;
    bool needs = false;
    for (auto& p : parents) {
        needs = needs || p.node()->requires_grad;
        n->parents.push_back(p.node());
    }
    n->requires_grad = needs;
    if (needs) n->backprop = std::move(backprop);
    return Var<T>(std::move(n));
}

// Iterative post-order topological sort rooted at `root`.
template <class T>
std::vector<Node<T>*> topo_order(Node<T>* root) {
    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> seen;
    std::vector<std::pair<Node<T>*, size_t>> stack;
    stack.emplace_back(root, 0);
    seen.insert(root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node<T>* p = node->parents[next++].get();
            if (p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    return order;  // parents before children
}

// Reverse-mode sweep from a scalar root.
template <class T>
void backward(const Var<T>& root) {
    require(root.value().numel() == 1, ErrorCode::invalid_argument,
            "backward requires a scalar root");
    require(root.node()->requires_grad, ErrorCode::invalid_argument,
            "backward on a graph with no differentiable leaves");
    auto order = topo_order(root.node().get());
    root.node()->accumulate(Tensor<T>(root.value().shape, T(1)));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node<T>* n = *it;
        if (n->backprop && n->grad_set) n->backprop(*n);
    }
}

}  // namespace corolla::num

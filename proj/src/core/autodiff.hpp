#pragma once

#include <functional>
#include <memory>

#include "core/tensor.hpp"

namespace semples {

// Reverse-mode autodiff over Tensor. Graphs are built per training step and
// discarded afterwards; everything is float64 and single-threaded.
struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
    Tensor val;
    Tensor grad;  // allocated on demand during backward
    bool requires_grad = false;
    std::vector<Var> parents;
    std::function<void(Node&)> back;  // accumulates self.grad into parents

    double scalar() const {
        if (val.size() != 1) throw std::logic_error("Node::scalar on non-scalar");
        return val.v[0];
    }
};

Var leaf(Tensor t, bool requires_grad);
inline Var constant(Tensor t) { return leaf(std::move(t), false); }
Var detach(const Var& a);

/// Runs reverse accumulation from a scalar root; fills `grad` of every
/// reachable node with requires_grad set.
void backward(const Var& root);

// Elementwise / scalar ops
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var one_minus(const Var& a);
Var log_op(const Var& a);
/// max(x, lo) elementwise; subgradient convention: the pass-through branch
/// derivative is used when x == lo exactly.
Var clamp_min(const Var& a, double lo);
Var relu(const Var& a);
Var sigmoid(const Var& a);

// Reductions & linear algebra
Var sum(const Var& a);
Var mean(const Var& a);
Var dot(const Var& a, const Var& b);
Var l2_normalize(const Var& a);
/// cos(a, b); throws NumericError on a zero vector.
Var cosine(const Var& a, const Var& b);
Var matvec(const Tensor& w, const Var& x);  // w is a frozen {m,n} matrix
Var mean_rows(const Var& x);                // {L,D} -> {D}
Var select_seq(const Var& bank, int k);     // {K,L,D} -> {L,D}, grad scattered to row k
Var reshape(const Var& a, std::vector<int> shape);

// Image / conv ops (channel-planar {C,H,W})
Var mask_mul(const Var& img, const Var& mask_hw);  // {C,H,W} * broadcast {H,W}
Var conv2d(const Var& x, const Var& w, const Var& b);  // 3x3 or any odd kernel, same pad
Var avgpool2(const Var& x);
Var bilinear_resize(const Var& x, int out_h, int out_w);
Var grid_avgpool(const Var& x, int gh, int gw);

}  // namespace semples

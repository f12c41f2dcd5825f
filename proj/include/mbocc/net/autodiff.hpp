#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mbocc/grid.hpp"

namespace mbocc::net {

struct Shape {
    int c = 0, h = 0, w = 0;
    std::size_t size() const { return static_cast<std::size_t>(c) * h * w; }
    bool operator==(const Shape&) const = default;
};

struct TensorBuf {
    Shape shape;
    std::vector<Real> v;

    TensorBuf() = default;
    TensorBuf(int c, int h, int w, Real fill = 0.0)
        : shape{c, h, w}, v(static_cast<std::size_t>(c) * h * w, fill) {}

    std::size_t plane() const { return static_cast<std::size_t>(shape.h) * shape.w; }
    Real* plane_ptr(int c) { return v.data() + c * plane(); }
    const Real* plane_ptr(int c) const { return v.data() + c * plane(); }
    Real& at(int c, int y, int x) { return v[c * plane() + static_cast<std::size_t>(y) * shape.w + x]; }
    Real at(int c, int y, int x) const { return v[c * plane() + static_cast<std::size_t>(y) * shape.w + x]; }
};

struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode tape. Nodes are created in topological order; backward walks
// ids from the loss down. Ops that only touch constant inputs skip gradient
// closures entirely.
class Tape {
public:
    Var input(TensorBuf val);                                // constant leaf
    Var param(const std::string& name, const TensorBuf& val);  // differentiable leaf

    const TensorBuf& value(Var x) const { return nodes_[x.id].val; }
    const TensorBuf& grad(Var x) const;
    bool needs_grad(Var x) const { return nodes_[x.id].needs_grad; }
    const std::map<std::string, int>& params() const { return param_ids_; }
    const TensorBuf* grad_of(const std::string& param_name) const;

    // ---- ops ----
    Var conv3x3(Var x, Var w, Var b, int stride);  // pad 1; stride 1 or 2
    Var conv1x1(Var x, Var w, Var b);
    // 1-channel transposed conv, stride f, kernel k, pad p; output out_h x out_w.
    Var deconv1(Var x, Var w, Var b, int stride, int ksize, int pad, int out_h, int out_w);
    Var leaky_relu(Var x, Real slope);
    Var sigmoid(Var x);
    Var add(Var a, Var b);
    Var add_const(Var a, Real c);
    Var concat(const std::vector<Var>& parts);
    Var hadamard_broadcast(Var x, Var a);   // x:(C,H,W) * a:(1,H,W)
    Var avgpool2(Var x);                    // ceil(H/2) x ceil(W/2), edge-replicated
    Var bilinear_resize(Var x, int out_h, int out_w);  // corner-aligned
    Var grad_mag(Var x, Real eps);          // 1-channel, smoothed magnitude
    // 1-channel forward splat with MAX collisions; undefined targets are 0 and
    // reported in *out_mask (1 = defined) when non-null.
    Var warp_direct_max(Var x, std::shared_ptr<const FlowField> flow, TensorBuf* out_mask);
    Var warp_reverse(Var x, std::shared_ptr<const FlowField> flow);
    // B(x) = min_d sqrt(|fa(x) - fb(x+F(x)+d)|^2 + eps), |d|_inf <= radius.
    Var cost_block_min(Var fa, Var fb, std::shared_ptr<const FlowField> flow, int radius,
                       Real eps);
    // Mean focal loss of a probability map against a constant binary target.
    Var focal_loss(Var pred, std::shared_ptr<const TensorBuf> target, Real gamma, Real alpha,
                   Real clamp_eps = 1e-7);
    Var weighted_sum(const std::vector<Var>& scalars, const std::vector<Real>& weights);
    // Scalar contraction against a constant tensor of the same shape.
    Var dot_const(Var x, std::shared_ptr<const TensorBuf> w);

    void backward(Var loss);

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        TensorBuf val;
        TensorBuf grad;
        bool needs_grad = false;
        std::function<void(Tape&)> back;
    };

    int push(TensorBuf val, bool needs_grad, std::function<void(Tape&)> back);
    TensorBuf& grad_buf(int id);  // lazily allocated, zero-filled
    bool has_grad(int id) const { return !nodes_[id].grad.v.empty(); }

    std::vector<Node> nodes_;
    std::map<std::string, int> param_ids_;
};

}  // namespace mbocc::net

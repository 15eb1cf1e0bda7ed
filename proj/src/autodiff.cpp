#include "covnli/autodiff.hpp"

namespace covnli {

void Parameter::zero_grad() {
    if (grad.shape() != value.shape())
        grad = Tensor::zeros(value.shape());
    else
        for (auto& g : grad.data()) g = 0.0;
}

const Tensor& Var::value() const {
    if (!tape_) throw GraphError("use of an unbound Var");
    return tape_->value(id_);
}

const Tensor& Var::grad() const {
    if (!tape_) throw GraphError("use of an unbound Var");
    return tape_->grad(id_);
}

bool Var::requires_grad() const { return tape_ && tape_->requires_grad(id_); }

Var Tape::constant(Tensor value) {
    Node& n = nodes_.emplace_back();
    n.value = std::move(value);
    return Var(this, nodes_.size() - 1);
}

Var Tape::leaf(Tensor value) {
    Node& n = nodes_.emplace_back();
    n.value = std::move(value);
    n.requires_grad = true;
    return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Parameter& p) {
    Node& n = nodes_.emplace_back();
    n.external = &p.value;
    if (p.trainable && grad_enabled_) {
        n.param = &p;
        n.requires_grad = true;
    }
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, bool requires_grad, Backprop backprop) {
    Node& n = nodes_.emplace_back();
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    if (requires_grad) n.backprop = std::move(backprop);
    return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::value(std::size_t id) const {
    const Node& n = nodes_.at(id);
    return n.external ? *n.external : n.value;
}

const Tensor& Tape::grad(std::size_t id) const {
    const Node& n = nodes_.at(id);
    return n.param ? n.param->grad : n.grad;
}

Tensor& Tape::grad_buffer(std::size_t id) {
    Node& n = nodes_[id];
    Tensor& g = n.param ? n.param->grad : n.grad;
    const Shape& s = n.external ? n.external->shape() : n.value.shape();
    if (g.shape() != s) g = Tensor::zeros(s);
    return g;
}

void Tape::check_same(const Var& v) const {
    if (&v.tape() != this) throw GraphError("operands recorded on different tapes");
}

void Tape::backward(Var root) {
    check_same(root);
    if (backward_done_) throw GraphError("backward called twice without reset");
    const Tensor& rv = value(root.id());
    if (rv.size() != 1) throw GraphError("backward root must be scalar, got shape " + to_string(rv.shape()));
    backward_done_ = true;
    if (!nodes_[root.id()].requires_grad) return;

    grad_buffer(root.id())[0] += 1.0;
    for (std::size_t id = root.id() + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (!n.requires_grad) continue;
        if (n.backprop && !n.grad.empty()) n.backprop(*this, id);
    }
    for (std::size_t id = 0; id < nodes_.size(); ++id)
        if (nodes_[id].requires_grad) grad_buffer(id);
}

void Tape::reset() {
    nodes_.clear();
    backward_done_ = false;
    kink_margin_ = std::numeric_limits<double>::infinity();
}

}  // namespace covnli

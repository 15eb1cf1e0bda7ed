#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

#include "covnli/tensor.hpp"

namespace covnli {

/// Misuse of the differentiation graph (non-scalar root, second backward, mixed tapes).
class GraphError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A named trainable tensor living outside any tape. Gradients from every
/// backward pass that touches it accumulate into `grad` until zero_grad().
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    bool trainable = true;

    void zero_grad();
};

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid until the tape is reset.
class Var {
public:
    Var() = default;

    const Tensor& value() const;
    const Tensor& grad() const;
    bool requires_grad() const;
    const Shape& shape() const { return value().shape(); }

    Tape& tape() const { return *tape_; }
    std::size_t id() const noexcept { return id_; }
    bool valid() const noexcept { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Reverse-mode differentiation record. Nodes are appended in evaluation
/// order, so reverse insertion order is a valid reverse topological order.
class Tape {
public:
    using Backprop = std::function<void(Tape&, std::size_t self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    Var leaf(Tensor value);
    /// Leaf that reads `p.value` in place; its gradient accumulates into `p.grad`.
    /// Non-trainable parameters enter as constants.
    Var parameter(Parameter& p);

    /// Records an op result. The backprop rule is dropped when no input needs a gradient.
    Var record(Tensor value, bool requires_grad, Backprop backprop);

    void backward(Var root);
    void reset();

    std::size_t size() const noexcept { return nodes_.size(); }
    bool backward_done() const noexcept { return backward_done_; }

    const Tensor& value(std::size_t id) const;
    const Tensor& grad(std::size_t id) const;
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
    /// Gradient accumulator for a node, zero-initialized on first access.
    Tensor& grad_buffer(std::size_t id);

    /// Non-smooth ops report how far their input sits from a kink (relu at 0,
    /// max near-ties, |a-b| at a=b); the smallest margin seen since reset().
    /// Bitwise-equal maxima (zero padding, repeated tokens) are exact ties that
    /// persist under perturbation and are not reported.
    void note_kink(double margin) noexcept {
        if (margin < kink_margin_) kink_margin_ = margin;
    }
    double kink_margin() const noexcept { return kink_margin_; }

    void check_same(const Var& v) const;

    /// With gradients disabled, parameters enter as constants and no backprop rules are kept.
    void set_grad_enabled(bool enabled) noexcept { grad_enabled_ = enabled; }
    bool grad_enabled() const noexcept { return grad_enabled_; }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        const Tensor* external = nullptr;
        Parameter* param = nullptr;
        bool requires_grad = false;
        Backprop backprop;
    };

    std::deque<Node> nodes_;
    bool backward_done_ = false;
    bool grad_enabled_ = true;
    double kink_margin_ = std::numeric_limits<double>::infinity();
};

}  // namespace covnli

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cflux/errors.hpp"

namespace cflux {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape &shape);
std::size_t shape_product(const Shape &shape);

class Tape;
class GradAccum;
class Gradients;

/// Dense n-dimensional array of 64-bit floats, row-major.
///
/// Tensors are immutable values: every operation returns a fresh tensor and
/// the underlying storage is shared, never written after construction.
/// Structural operations (reshape, row/prefix slices) alias the parent
/// storage through an offset instead of copying.
///
/// A tensor optionally carries a node handle into the tape that recorded it;
/// the handle is only meaningful while that tape is alive and active.
class Tensor {
public:
  /// Scalar zero (rank 0).
  Tensor() : Tensor(Shape{}, std::vector<double>{0.0}) {}

  static Tensor scalar(double v) { return Tensor(Shape{}, {v}); }
  static Tensor zeros(Shape shape);
  static Tensor ones(Shape shape);
  static Tensor full(Shape shape, double v);
  static Tensor from_data(Shape shape, std::vector<double> data);

  const Shape &shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return size_; }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }

  std::span<const double> data() const noexcept {
    return std::span<const double>(storage_->data() + offset_, size_);
  }

  /// Value of a single-element tensor.
  double value() const;
  double at(std::size_t i) const;
  double at(std::size_t i, std::size_t j) const;
  bool is_scalar_like() const noexcept { return size_ == 1; }

  /// True when this tensor was recorded on the currently active tape.
  bool on_active_tape() const noexcept;
  int node() const noexcept { return node_; }
  std::uint64_t tape_id() const noexcept { return tape_id_; }

private:
  friend class Tape;

  Tensor(Shape shape, std::vector<double> data);
  /// Aliasing constructor: shares `storage` starting at `offset`.
  Tensor(Shape shape, std::shared_ptr<const std::vector<double>> storage,
         std::size_t offset);

  Shape shape_;
  std::shared_ptr<const std::vector<double>> storage_;
  std::size_t offset_ = 0;
  std::size_t size_ = 1;
  int node_ = -1;
  std::uint64_t tape_id_ = 0;

  friend Tensor detail_make_view(const Tensor &parent, Shape shape,
                                 std::size_t offset);
};

/// Internal: aliasing view over `parent`'s storage (contiguous slices only).
Tensor detail_make_view(const Tensor &parent, Shape shape, std::size_t offset);

/// Collects gradients flowing into the inputs of one recorded operation.
class GradAccum {
public:
  /// Accumulates `grad` (same shape as `input`) into the gradient slot of
  /// `input`'s node. No-op when the input is not tracked on the tape that
  /// is running backward.
  void add(const Tensor &input, const Tensor &grad);
  void add(const Tensor &input, std::vector<double> grad_data);
  void add_to_node(int node, std::span<const double> grad_data,
                   const Shape &shape);

private:
  friend class Tape;
  explicit GradAccum(Tape &tape) : tape_(tape) {}
  Tape &tape_;
};

/// Result of Tape::backward: a map node id -> gradient tensor.
class Gradients {
public:
  bool contains(const Tensor &t) const;
  /// Gradient of the loss w.r.t. `t`; throws ContractError when `t` was
  /// never recorded on the originating tape.
  const Tensor &at(const Tensor &t) const;
  /// Like at(), but returns zeros shaped like `t` when the loss does not
  /// depend on it.
  Tensor at_or_zero(const Tensor &t) const;

private:
  friend class Tape;
  std::uint64_t tape_id_ = 0;
  std::vector<std::optional<Tensor>> by_node_;
};

/// Records operations for reverse-mode differentiation (define-by-run).
///
/// One tape is active per thread at a time; operations record themselves on
/// the active tape whenever at least one input is tracked on it. Tensors
/// tracked on a dead or different tape are treated as constants.
class Tape {
public:
  using GradFn = std::function<void(const Tensor &upstream, GradAccum &acc)>;

  Tape();
  ~Tape();
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  /// RAII activation: makes this tape the thread's active tape.
  class Activation {
  public:
    explicit Activation(Tape &tape);
    ~Activation();
    Activation(const Activation &) = delete;
    Activation &operator=(const Activation &) = delete;

  private:
    Tape *prev_;
  };

  Activation activate() { return Activation(*this); }
  static Tape *active() noexcept;

  /// Registers `t` as a differentiable leaf of this tape and returns a
  /// tracked alias of it.
  Tensor watch(const Tensor &t);

  /// Reverse accumulation from a scalar loss recorded on this tape.
  /// Visits each node at most once, in reverse topological order.
  Gradients backward(const Tensor &loss);

  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::uint64_t id() const noexcept { return id_; }

  /// Used by operation implementations: appends a node whose inputs are the
  /// tracked tensors among the operation's operands.
  int record(std::vector<int> input_nodes, GradFn fn);
  /// Convenience used by ops.cpp: marks `out` as produced by node `node`.
  Tensor adopt(const Tensor &out, int node) const;

  const std::vector<int> &input_nodes(int node) const {
    return nodes_.at(static_cast<std::size_t>(node)).inputs;
  }

private:
  friend class GradAccum;

  struct Node {
    std::vector<int> inputs;
    GradFn fn; // null for leaves
  };

  struct Slot {
    std::vector<double> data;
    Shape shape;
    bool present = false;
  };

  std::vector<Node> nodes_;
  std::vector<Slot> slots_; // live only during backward
  std::uint64_t id_;
};

/// True when `t` participates in the currently active tape.
inline bool tracked_on_active(const Tensor &t) { return t.on_active_tape(); }

} // namespace cflux

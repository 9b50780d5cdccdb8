#include "cflux/tensor.hpp"

#include <atomic>
#include <sstream>
#include <utility>

namespace cflux {

namespace {

thread_local Tape *tls_active_tape = nullptr;
std::atomic<std::uint64_t> next_tape_id{1};

} // namespace

std::string shape_to_string(const Shape &shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) {
      os << 'x';
    }
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_product(const Shape &shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) {
    n *= d;
  }
  return n;
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)),
      storage_(std::make_shared<const std::vector<double>>(std::move(data))),
      offset_(0), size_(shape_product(shape_)) {
  if (size_ != storage_->size()) {
    throw DimensionError("tensor: shape " + shape_to_string(shape_) +
                         " expects " + std::to_string(size_) +
                         " values, got " + std::to_string(storage_->size()));
  }
}

Tensor::Tensor(Shape shape, std::shared_ptr<const std::vector<double>> storage,
               std::size_t offset)
    : shape_(std::move(shape)), storage_(std::move(storage)), offset_(offset),
      size_(shape_product(shape_)) {
  if (offset_ + size_ > storage_->size()) {
    throw DimensionError("tensor view out of bounds: offset " +
                         std::to_string(offset_) + " + size " +
                         std::to_string(size_) + " > storage " +
                         std::to_string(storage_->size()));
  }
}

Tensor Tensor::zeros(Shape shape) {
  std::size_t n = shape_product(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::ones(Shape shape) { return full(std::move(shape), 1.0); }

Tensor Tensor::full(Shape shape, double v) {
  std::size_t n = shape_product(shape);
  return Tensor(std::move(shape), std::vector<double>(n, v));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data) {
  return Tensor(std::move(shape), std::move(data));
}

double Tensor::value() const {
  if (size_ != 1) {
    throw ContractError("value() requires a single-element tensor, shape is " +
                        shape_to_string(shape_));
  }
  return (*storage_)[offset_];
}

double Tensor::at(std::size_t i) const {
  if (rank() != 1) {
    throw DimensionError("at(i) requires rank 1, shape is " +
                         shape_to_string(shape_));
  }
  if (i >= shape_[0]) {
    throw IndexError("index " + std::to_string(i) + " out of range for " +
                     shape_to_string(shape_));
  }
  return (*storage_)[offset_ + i];
}

double Tensor::at(std::size_t i, std::size_t j) const {
  if (rank() != 2) {
    throw DimensionError("at(i,j) requires rank 2, shape is " +
                         shape_to_string(shape_));
  }
  if (i >= shape_[0] || j >= shape_[1]) {
    throw IndexError("index (" + std::to_string(i) + "," + std::to_string(j) +
                     ") out of range for " + shape_to_string(shape_));
  }
  return (*storage_)[offset_ + i * shape_[1] + j];
}

bool Tensor::on_active_tape() const noexcept {
  const Tape *tape = Tape::active();
  return tape != nullptr && node_ >= 0 && tape_id_ == tape->id();
}

Tensor detail_make_view(const Tensor &parent, Shape shape,
                        std::size_t offset) {
  return Tensor(std::move(shape), parent.storage_, parent.offset_ + offset);
}

// ---------------------------------------------------------------------------
// Tape

Tape::Tape() : id_(next_tape_id.fetch_add(1)) {}

Tape::~Tape() {
  if (tls_active_tape == this) {
    tls_active_tape = nullptr;
  }
}

Tape::Activation::Activation(Tape &tape) : prev_(tls_active_tape) {
  tls_active_tape = &tape;
}

Tape::Activation::~Activation() { tls_active_tape = prev_; }

Tape *Tape::active() noexcept { return tls_active_tape; }

int Tape::record(std::vector<int> input_nodes, GradFn fn) {
  nodes_.push_back(Node{std::move(input_nodes), std::move(fn)});
  return static_cast<int>(nodes_.size()) - 1;
}

Tensor Tape::adopt(const Tensor &out, int node) const {
  Tensor t = out;
  t.node_ = node;
  t.tape_id_ = id_;
  return t;
}

Tensor Tape::watch(const Tensor &t) {
  int node = record({}, nullptr);
  return adopt(t, node);
}

Gradients Tape::backward(const Tensor &loss) {
  if (loss.size() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " +
                        shape_to_string(loss.shape()));
  }
  if (loss.node() < 0 || loss.tape_id() != id_) {
    throw ContractError("backward: loss was not recorded on this tape");
  }

  slots_.assign(nodes_.size(), Slot{});
  const int loss_node = loss.node();
  slots_[static_cast<std::size_t>(loss_node)] =
      Slot{std::vector<double>{1.0}, loss.shape(), true};

  Gradients result;
  result.tape_id_ = id_;
  result.by_node_.assign(nodes_.size(), std::nullopt);

  GradAccum acc(*this);
  for (int i = loss_node; i >= 0; --i) {
    Slot &slot = slots_[static_cast<std::size_t>(i)];
    if (!slot.present) {
      continue;
    }
    // Every consumer of node i sits later in the tape and has already run,
    // so the accumulated gradient is final; move it out.
    Tensor upstream =
        Tensor::from_data(std::move(slot.shape), std::move(slot.data));
    slot.present = false;
    result.by_node_[static_cast<std::size_t>(i)] = upstream;
    const Node &node = nodes_[static_cast<std::size_t>(i)];
    if (node.fn) {
      node.fn(upstream, acc);
    }
  }
  slots_.clear();
  return result;
}

// ---------------------------------------------------------------------------
// GradAccum

void GradAccum::add_to_node(int node, std::span<const double> grad_data,
                            const Shape &shape) {
  Tape::Slot &slot = tape_.slots_.at(static_cast<std::size_t>(node));
  if (!slot.present) {
    slot.data.assign(grad_data.begin(), grad_data.end());
    slot.shape = shape;
    slot.present = true;
    return;
  }
  if (slot.data.size() != grad_data.size()) {
    throw DimensionError("gradient accumulation size mismatch: " +
                         std::to_string(slot.data.size()) + " vs " +
                         std::to_string(grad_data.size()));
  }
  for (std::size_t i = 0; i < grad_data.size(); ++i) {
    slot.data[i] += grad_data[i];
  }
}

void GradAccum::add(const Tensor &input, const Tensor &grad) {
  if (input.node() < 0 || input.tape_id() != tape_.id()) {
    return;
  }
  if (grad.shape() != input.shape()) {
    throw DimensionError("gradient shape " + shape_to_string(grad.shape()) +
                         " does not match input shape " +
                         shape_to_string(input.shape()));
  }
  add_to_node(input.node(), grad.data(), input.shape());
}

void GradAccum::add(const Tensor &input, std::vector<double> grad_data) {
  if (input.node() < 0 || input.tape_id() != tape_.id()) {
    return;
  }
  if (grad_data.size() != input.size()) {
    throw DimensionError("gradient size " + std::to_string(grad_data.size()) +
                         " does not match input " +
                         shape_to_string(input.shape()));
  }
  add_to_node(input.node(),
              std::span<const double>(grad_data.data(), grad_data.size()),
              input.shape());
}

// ---------------------------------------------------------------------------
// Gradients

bool Gradients::contains(const Tensor &t) const {
  return t.node() >= 0 && t.tape_id() == tape_id_ &&
         static_cast<std::size_t>(t.node()) < by_node_.size() &&
         by_node_[static_cast<std::size_t>(t.node())].has_value();
}

const Tensor &Gradients::at(const Tensor &t) const {
  if (t.node() < 0 || t.tape_id() != tape_id_) {
    throw ContractError("gradient lookup for a tensor not on this tape");
  }
  const auto &slot = by_node_.at(static_cast<std::size_t>(t.node()));
  if (!slot.has_value()) {
    throw ContractError("no gradient reached node " + std::to_string(t.node()));
  }
  return *slot;
}

Tensor Gradients::at_or_zero(const Tensor &t) const {
  if (contains(t)) {
    return at(t);
  }
  return Tensor::zeros(t.shape());
}

} // namespace cflux

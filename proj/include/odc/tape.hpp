#pragma once

#include "odc/common.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace odc::ad {

// Reverse-mode autodiff over dense matrices, recorded on a tape.
//
// Values are computed eagerly as nodes are appended, so the tape always
// holds a consistent forward state. Gradients are produced by appending the
// backward pass as ordinary tape nodes (`backward`); because the appended
// subgraph is made of the same primitives, it can be differentiated again.
// That is what makes the gradient-field control u = grad(psi) trainable:
// `input_gradient` records grad_x psi as nodes, and a later `backward`
// differentiates through them with respect to the network parameters.
//
// A Tape is single-threaded; distinct tapes are independent.

struct NodeId {
  int v = -1;
  bool valid() const { return v >= 0; }
};

/// A vector field evaluated row-wise by the kFieldEval primitive. The field
/// supplies its own Jacobian, which the backward pass treats as locally
/// constant (exact to first order; no second derivative is available).
class ExternalField {
 public:
  virtual ~ExternalField() = default;
  virtual int input_dim() const = 0;
  virtual int output_dim() const = 0;
  virtual Vector value(const Vector& x) const = 0;
  virtual Matrix jacobian(const Vector& x) const = 0;
};

enum class Op : std::uint8_t {
  kConstant,
  kInput,
  kAdd,
  kSub,
  kNeg,
  kMul,        // elementwise
  kScale,      // alpha * a
  kAddScalar,  // a + alpha
  kPowScalar,  // a^alpha elementwise
  kLog,
  kTanh,
  kRelu,
  kReluMask,  // 1 where a > 0; derivative defined as zero
  kSin,
  kCos,
  kMatMul,
  kTranspose,
  kAddRowVector,   // (n x c) + (1 x c), broadcast over rows
  kSumAll,         // -> 1x1
  kRowSum,         // (n x c) -> (n x 1)
  kColSum,         // (n x c) -> (1 x c)
  kBroadcastAll,   // 1x1 -> (r x c)
  kBroadcastRows,  // (1 x c) -> (r x c)
  kBroadcastCols,  // (n x 1) -> (n x c)
  kRowMin,         // (n x c) -> (n x 1), argmin saved for the backward rule
  kRowMinVjp,      // scatter cotangent into saved argmin cells
  kFieldEval,      // external field applied row-wise
  kFieldVjp,       // cotangent times field Jacobian, row-wise
};

const char* op_name(Op op);

struct Node {
  Op op = Op::kConstant;
  int a = -1;
  int b = -1;
  double alpha = 0.0;
  int rows = 0;  // target shape for broadcasts
  int cols = 0;
  Matrix value;
  std::vector<int> argmin;                    // kRowMin / kRowMinVjp
  const ExternalField* field = nullptr;       // kFieldEval / kFieldVjp
};

class Tape {
 public:
  // Leaves.
  NodeId constant(Matrix v);
  NodeId scalar(double v);
  NodeId input(Matrix v);

  // Primitives. Shapes are validated on construction and values computed
  // immediately; a non-finite result raises NumericError naming the node.
  NodeId add(NodeId x, NodeId y);
  NodeId sub(NodeId x, NodeId y);
  NodeId neg(NodeId x);
  NodeId mul(NodeId x, NodeId y);
  NodeId scale(NodeId x, double alpha);
  NodeId add_scalar(NodeId x, double alpha);
  NodeId pow_scalar(NodeId x, double alpha);
  NodeId log(NodeId x);
  NodeId tanh(NodeId x);
  NodeId relu(NodeId x);
  NodeId relu_mask(NodeId x);
  NodeId sin(NodeId x);
  NodeId cos(NodeId x);
  NodeId matmul(NodeId x, NodeId y);
  NodeId transpose(NodeId x);
  NodeId add_row_vector(NodeId x, NodeId row);
  NodeId sum_all(NodeId x);
  NodeId row_sum(NodeId x);
  NodeId col_sum(NodeId x);
  NodeId broadcast_all(NodeId x, int rows, int cols);
  NodeId broadcast_rows(NodeId x, int rows);
  NodeId broadcast_cols(NodeId x, int cols);
  NodeId row_min(NodeId x);
  NodeId field_eval(NodeId x, const ExternalField* field);

  // Composites.
  NodeId mean_all(NodeId x);

  const Node& node(NodeId id) const { return nodes_[check(id)]; }
  const Matrix& value(NodeId id) const { return nodes_[check(id)].value; }
  int rows(NodeId id) const { return static_cast<int>(value(id).rows()); }
  int cols(NodeId id) const { return static_cast<int>(value(id).cols()); }
  std::size_t size() const { return nodes_.size(); }

  const std::vector<NodeId>& inputs() const { return input_ids_; }
  void mark_output(NodeId id) { output_ids_.push_back(id); }
  const std::vector<NodeId>& outputs() const { return output_ids_; }

  /// Overwrite the value of the i-th input node (shape must match).
  void set_input(int input_index, Matrix v);

  /// Recompute every node in recorded order from the current leaf values.
  /// With unchanged inputs this reproduces all stored values bit-for-bit.
  void replay();

  /// Set inputs, replay, and return the marked outputs.
  std::vector<Matrix> forward_eval(const std::vector<Matrix>& inputs);

  /// Append the backward pass of `out` seeded with cotangent `seed` (defaults
  /// to 1 for scalar outputs) and return, per entry of `wrt`, the node holding
  /// d<seed, out>/d(wrt). Unreached parameters yield zero nodes.
  std::vector<NodeId> backward(NodeId out, const std::vector<NodeId>& wrt,
                               NodeId seed = NodeId{});

  /// Backward + read values: the gradients of `out` w.r.t. `wrt`.
  std::vector<Matrix> gradients(NodeId out, const std::vector<NodeId>& wrt,
                                NodeId seed = NodeId{});

  /// For scalar-valued `scalar_out`, append nodes computing its gradient with
  /// respect to input node `x`. The result stays differentiable.
  NodeId input_gradient(NodeId scalar_out, NodeId x);

 private:
  int check(NodeId id) const;
  NodeId push(Node n);
  Matrix eval(Node& n) const;
  void emit_vjps(int i, const std::vector<char>& relevant, std::vector<NodeId>& cot);
  void accumulate(std::vector<NodeId>& cot, int target, NodeId piece);

  std::vector<Node> nodes_;
  std::vector<NodeId> input_ids_;
  std::vector<NodeId> output_ids_;
};

/// Expression-style handle: a node on a tape. Arithmetic on Vars appends
/// nodes, so formulas read like the math they implement.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  NodeId id() const { return id_; }
  bool valid() const { return tape_ != nullptr && id_.valid(); }
  const Matrix& value() const { return tape_->value(id_); }
  int rows() const { return tape_->rows(id_); }
  int cols() const { return tape_->cols(id_); }

 private:
  Tape* tape_ = nullptr;
  NodeId id_{};
};

inline Var wrap(Tape& t, NodeId id) { return Var(&t, id); }

inline Var operator+(Var a, Var b) { return wrap(a.tape(), a.tape().add(a.id(), b.id())); }
inline Var operator-(Var a, Var b) { return wrap(a.tape(), a.tape().sub(a.id(), b.id())); }
inline Var operator-(Var a) { return wrap(a.tape(), a.tape().neg(a.id())); }
inline Var operator*(Var a, Var b) { return wrap(a.tape(), a.tape().mul(a.id(), b.id())); }
inline Var operator*(double s, Var a) { return wrap(a.tape(), a.tape().scale(a.id(), s)); }
inline Var operator*(Var a, double s) { return s * a; }
inline Var operator+(Var a, double s) { return wrap(a.tape(), a.tape().add_scalar(a.id(), s)); }
inline Var operator+(double s, Var a) { return a + s; }
inline Var operator-(Var a, double s) { return a + (-s); }

inline Var matmul(Var a, Var b) { return wrap(a.tape(), a.tape().matmul(a.id(), b.id())); }
inline Var transpose(Var a) { return wrap(a.tape(), a.tape().transpose(a.id())); }
inline Var tanh(Var a) { return wrap(a.tape(), a.tape().tanh(a.id())); }
inline Var relu(Var a) { return wrap(a.tape(), a.tape().relu(a.id())); }
inline Var log(Var a) { return wrap(a.tape(), a.tape().log(a.id())); }
inline Var sin(Var a) { return wrap(a.tape(), a.tape().sin(a.id())); }
inline Var cos(Var a) { return wrap(a.tape(), a.tape().cos(a.id())); }
inline Var pow(Var a, double p) { return wrap(a.tape(), a.tape().pow_scalar(a.id(), p)); }
inline Var sum(Var a) { return wrap(a.tape(), a.tape().sum_all(a.id())); }
inline Var mean(Var a) { return wrap(a.tape(), a.tape().mean_all(a.id())); }
inline Var row_sum(Var a) { return wrap(a.tape(), a.tape().row_sum(a.id())); }
inline Var col_sum(Var a) { return wrap(a.tape(), a.tape().col_sum(a.id())); }
inline Var row_min(Var a) { return wrap(a.tape(), a.tape().row_min(a.id())); }
inline Var add_row_vector(Var a, Var row) {
  return wrap(a.tape(), a.tape().add_row_vector(a.id(), row.id()));
}
inline Var broadcast_cols(Var a, int cols) {
  return wrap(a.tape(), a.tape().broadcast_cols(a.id(), cols));
}
inline Var broadcast_rows(Var a, int rows) {
  return wrap(a.tape(), a.tape().broadcast_rows(a.id(), rows));
}

/// Squared rectifier a(x) = max(0,x)^2 as a composite.
inline Var repu(Var a) {
  Var r = relu(a);
  return r * r;
}

/// Per-row squared Euclidean norm: (n x c) -> (n x 1).
inline Var squared_norm_rows(Var a) { return row_sum(a * a); }

}  // namespace odc::ad

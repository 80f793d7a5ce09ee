#include "odc/tape.hpp"

#include <limits>
#include <utility>

namespace odc::ad {

const char* op_name(Op op) {
  switch (op) {
    case Op::kConstant: return "constant";
    case Op::kInput: return "input";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kNeg: return "neg";
    case Op::kMul: return "mul";
    case Op::kScale: return "scale";
    case Op::kAddScalar: return "add_scalar";
    case Op::kPowScalar: return "pow_scalar";
    case Op::kLog: return "log";
    case Op::kTanh: return "tanh";
    case Op::kRelu: return "relu";
    case Op::kReluMask: return "relu_mask";
    case Op::kSin: return "sin";
    case Op::kCos: return "cos";
    case Op::kMatMul: return "matmul";
    case Op::kTranspose: return "transpose";
    case Op::kAddRowVector: return "add_row_vector";
    case Op::kSumAll: return "sum_all";
    case Op::kRowSum: return "row_sum";
    case Op::kColSum: return "col_sum";
    case Op::kBroadcastAll: return "broadcast_all";
    case Op::kBroadcastRows: return "broadcast_rows";
    case Op::kBroadcastCols: return "broadcast_cols";
    case Op::kRowMin: return "row_min";
    case Op::kRowMinVjp: return "row_min_vjp";
    case Op::kFieldEval: return "field_eval";
    case Op::kFieldVjp: return "field_vjp";
  }
  return "?";
}

int Tape::check(NodeId id) const {
  if (!id.valid() || id.v >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument("tape: invalid node id");
  return id.v;
}

NodeId Tape::push(Node n) {
  n.value = eval(n);
  if (!n.value.allFinite())
    throw NumericError("non-finite value in op '" + std::string(op_name(n.op)) + "' (node " +
                       std::to_string(nodes_.size()) + ")");
  nodes_.push_back(std::move(n));
  return NodeId{static_cast<int>(nodes_.size()) - 1};
}

Matrix Tape::eval(Node& n) const {
  const auto& A = [&]() -> const Matrix& { return nodes_[n.a].value; };
  const auto& B = [&]() -> const Matrix& { return nodes_[n.b].value; };
  switch (n.op) {
    case Op::kConstant:
    case Op::kInput:
      return n.value;
    case Op::kAdd: return A() + B();
    case Op::kSub: return A() - B();
    case Op::kNeg: return -A();
    case Op::kMul: return A().cwiseProduct(B());
    case Op::kScale: return n.alpha * A();
    case Op::kAddScalar: return A().array() + n.alpha;
    case Op::kPowScalar: return A().array().pow(n.alpha);
    case Op::kLog: return A().array().log();
    case Op::kTanh: return A().array().tanh();
    case Op::kRelu: return A().cwiseMax(0.0);
    case Op::kReluMask: return (A().array() > 0.0).cast<double>();
    case Op::kSin: return A().array().sin();
    case Op::kCos: return A().array().cos();
    case Op::kMatMul: return A() * B();
    case Op::kTranspose: return A().transpose();
    case Op::kAddRowVector: {
      Matrix out = A();
      out.rowwise() += RowVector(B().row(0));
      return out;
    }
    case Op::kSumAll: {
      Matrix out(1, 1);
      out(0, 0) = A().sum();
      return out;
    }
    case Op::kRowSum: return A().rowwise().sum();
    case Op::kColSum: return A().colwise().sum();
    case Op::kBroadcastAll: return Matrix::Constant(n.rows, n.cols, A()(0, 0));
    case Op::kBroadcastRows: return A().replicate(n.rows, 1);
    case Op::kBroadcastCols: return A().replicate(1, n.cols);
    case Op::kRowMin: {
      const Matrix& a = A();
      Matrix out(a.rows(), 1);
      n.argmin.resize(static_cast<std::size_t>(a.rows()));
      for (Eigen::Index r = 0; r < a.rows(); ++r) {
        Eigen::Index c;
        out(r, 0) = a.row(r).minCoeff(&c);
        n.argmin[static_cast<std::size_t>(r)] = static_cast<int>(c);
      }
      return out;
    }
    case Op::kRowMinVjp: {
      const Matrix& g = A();
      Matrix out = Matrix::Zero(n.rows, n.cols);
      for (Eigen::Index r = 0; r < g.rows(); ++r)
        out(r, n.argmin[static_cast<std::size_t>(r)]) = g(r, 0);
      return out;
    }
    case Op::kFieldEval: {
      const Matrix& x = A();
      Matrix out(x.rows(), n.field->output_dim());
      for (Eigen::Index r = 0; r < x.rows(); ++r)
        out.row(r) = n.field->value(x.row(r).transpose()).transpose();
      return out;
    }
    case Op::kFieldVjp: {
      const Matrix& g = A();
      const Matrix& x = B();
      Matrix out(x.rows(), n.field->input_dim());
      for (Eigen::Index r = 0; r < x.rows(); ++r)
        out.row(r) = g.row(r) * n.field->jacobian(x.row(r).transpose());
      return out;
    }
  }
  throw std::logic_error("tape: unhandled op");
}

NodeId Tape::constant(Matrix v) {
  Node n;
  n.op = Op::kConstant;
  n.value = std::move(v);
  return push(std::move(n));
}

NodeId Tape::scalar(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return constant(std::move(m));
}

NodeId Tape::input(Matrix v) {
  Node n;
  n.op = Op::kInput;
  n.value = std::move(v);
  NodeId id = push(std::move(n));
  input_ids_.push_back(id);
  return id;
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) +
                                "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                                "x" + std::to_string(b.cols()) + ")");
}

}  // namespace

NodeId Tape::add(NodeId x, NodeId y) {
  require_same_shape(value(x), value(y), "add");
  Node n;
  n.op = Op::kAdd;
  n.a = check(x);
  n.b = check(y);
  return push(std::move(n));
}

NodeId Tape::sub(NodeId x, NodeId y) {
  require_same_shape(value(x), value(y), "sub");
  Node n;
  n.op = Op::kSub;
  n.a = check(x);
  n.b = check(y);
  return push(std::move(n));
}

NodeId Tape::neg(NodeId x) {
  Node n;
  n.op = Op::kNeg;
  n.a = check(x);
  return push(std::move(n));
}

NodeId Tape::mul(NodeId x, NodeId y) {
  require_same_shape(value(x), value(y), "mul");
  Node n;
  n.op = Op::kMul;
  n.a = check(x);
  n.b = check(y);
  return push(std::move(n));
}

NodeId Tape::scale(NodeId x, double alpha) {
  Node n;
  n.op = Op::kScale;
  n.a = check(x);
  n.alpha = alpha;
  return push(std::move(n));
}

NodeId Tape::add_scalar(NodeId x, double alpha) {
  Node n;
  n.op = Op::kAddScalar;
  n.a = check(x);
  n.alpha = alpha;
  return push(std::move(n));
}

NodeId Tape::pow_scalar(NodeId x, double alpha) {
  Node n;
  n.op = Op::kPowScalar;
  n.a = check(x);
  n.alpha = alpha;
  return push(std::move(n));
}

NodeId Tape::log(NodeId x) {
  Node n;
  n.op = Op::kLog;
  n.a = check(x);
  return push(std::move(n));
}

NodeId Tape::tanh(NodeId x) {
  Node n;
  n.op = Op::kTanh;
  n.a = check(x);
  return push(std::move(n));
}

NodeId Tape::relu(NodeId x) {
  Node n;
  n.op = Op::kRelu;
  n.a = check(x);
  return push(std::move(n));
}

NodeId Tape::relu_mask(NodeId x) {
  Node n;
  n.op = Op::kReluMask;
  n.a = check(x);
  return push(std::move(n));
}

NodeId Tape::sin(NodeId x) {
  Node n;
  n.op = Op::kSin;
  n.a = check(x);
  return push(std::move(n));
}

NodeId Tape::cos(NodeId x) {
  Node n;
  n.op = Op::kCos;
  n.a = check(x);
  return push(std::move(n));
}

NodeId Tape::matmul(NodeId x, NodeId y) {
  if (value(x).cols() != value(y).rows())
    throw std::invalid_argument("matmul: inner dimensions differ (" +
                                std::to_string(value(x).cols()) + " vs " +
                                std::to_string(value(y).rows()) + ")");
  Node n;
  n.op = Op::kMatMul;
  n.a = check(x);
  n.b = check(y);
  return push(std::move(n));
}

NodeId Tape::transpose(NodeId x) {
  Node n;
  n.op = Op::kTranspose;
  n.a = check(x);
  return push(std::move(n));
}

NodeId Tape::add_row_vector(NodeId x, NodeId row) {
  if (value(row).rows() != 1 || value(row).cols() != value(x).cols())
    throw std::invalid_argument("add_row_vector: row operand must be 1 x cols(x)");
  Node n;
  n.op = Op::kAddRowVector;
  n.a = check(x);
  n.b = check(row);
  return push(std::move(n));
}

NodeId Tape::sum_all(NodeId x) {
  Node n;
  n.op = Op::kSumAll;
  n.a = check(x);
  return push(std::move(n));
}

NodeId Tape::row_sum(NodeId x) {
  Node n;
  n.op = Op::kRowSum;
  n.a = check(x);
  return push(std::move(n));
}

NodeId Tape::col_sum(NodeId x) {
  Node n;
  n.op = Op::kColSum;
  n.a = check(x);
  return push(std::move(n));
}

NodeId Tape::broadcast_all(NodeId x, int rows, int cols) {
  if (value(x).size() != 1) throw std::invalid_argument("broadcast_all: source must be 1x1");
  Node n;
  n.op = Op::kBroadcastAll;
  n.a = check(x);
  n.rows = rows;
  n.cols = cols;
  return push(std::move(n));
}

NodeId Tape::broadcast_rows(NodeId x, int rows) {
  if (value(x).rows() != 1) throw std::invalid_argument("broadcast_rows: source must be 1 x c");
  Node n;
  n.op = Op::kBroadcastRows;
  n.a = check(x);
  n.rows = rows;
  n.cols = static_cast<int>(value(x).cols());
  return push(std::move(n));
}

NodeId Tape::broadcast_cols(NodeId x, int cols) {
  if (value(x).cols() != 1) throw std::invalid_argument("broadcast_cols: source must be n x 1");
  Node n;
  n.op = Op::kBroadcastCols;
  n.a = check(x);
  n.rows = static_cast<int>(value(x).rows());
  n.cols = cols;
  return push(std::move(n));
}

NodeId Tape::row_min(NodeId x) {
  Node n;
  n.op = Op::kRowMin;
  n.a = check(x);
  return push(std::move(n));
}

NodeId Tape::field_eval(NodeId x, const ExternalField* field) {
  if (field == nullptr) throw std::invalid_argument("field_eval: null field");
  if (value(x).cols() != field->input_dim())
    throw std::invalid_argument("field_eval: state width does not match field input_dim");
  Node n;
  n.op = Op::kFieldEval;
  n.a = check(x);
  n.field = field;
  return push(std::move(n));
}

NodeId Tape::mean_all(NodeId x) {
  const double count = static_cast<double>(value(x).size());
  return scale(sum_all(x), 1.0 / count);
}

void Tape::set_input(int input_index, Matrix v) {
  if (input_index < 0 || input_index >= static_cast<int>(input_ids_.size()))
    throw std::invalid_argument("set_input: index out of range");
  Node& n = nodes_[input_ids_[static_cast<std::size_t>(input_index)].v];
  require_same_shape(n.value, v, "set_input");
  n.value = std::move(v);
}

void Tape::replay() {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    Node& n = nodes_[i];
    if (n.op == Op::kConstant || n.op == Op::kInput) continue;
    n.value = eval(n);
    if (!n.value.allFinite())
      throw NumericError("non-finite value in op '" + std::string(op_name(n.op)) + "' (node " +
                         std::to_string(i) + ") during replay");
  }
}

std::vector<Matrix> Tape::forward_eval(const std::vector<Matrix>& inputs) {
  if (inputs.size() != input_ids_.size())
    throw std::invalid_argument("forward_eval: expected " + std::to_string(input_ids_.size()) +
                                " inputs, got " + std::to_string(inputs.size()));
  for (std::size_t i = 0; i < inputs.size(); ++i) set_input(static_cast<int>(i), inputs[i]);
  replay();
  std::vector<Matrix> out;
  out.reserve(output_ids_.size());
  for (NodeId id : output_ids_) out.push_back(value(id));
  return out;
}

void Tape::accumulate(std::vector<NodeId>& cot, int target, NodeId piece) {
  if (cot[static_cast<std::size_t>(target)].valid())
    cot[static_cast<std::size_t>(target)] = add(cot[static_cast<std::size_t>(target)], piece);
  else
    cot[static_cast<std::size_t>(target)] = piece;
}

void Tape::emit_vjps(int i, const std::vector<char>& relevant, std::vector<NodeId>& cot) {
  const Node& n = nodes_[static_cast<std::size_t>(i)];
  const NodeId g = cot[static_cast<std::size_t>(i)];
  const NodeId self{i};
  const int a = n.a;
  const int b = n.b;
  const bool need_a = a >= 0 && relevant[static_cast<std::size_t>(a)];
  const bool need_b = b >= 0 && relevant[static_cast<std::size_t>(b)];
  if (!need_a && !need_b) return;
  const NodeId na{a};
  const NodeId nb{b};

  switch (n.op) {
    case Op::kConstant:
    case Op::kInput:
      return;
    case Op::kAdd:
      if (need_a) accumulate(cot, a, g);
      if (need_b) accumulate(cot, b, g);
      return;
    case Op::kSub:
      if (need_a) accumulate(cot, a, g);
      if (need_b) accumulate(cot, b, neg(g));
      return;
    case Op::kNeg:
      if (need_a) accumulate(cot, a, neg(g));
      return;
    case Op::kMul:
      if (need_a) accumulate(cot, a, mul(g, nb));
      if (need_b) accumulate(cot, b, mul(g, na));
      return;
    case Op::kScale:
      if (need_a) accumulate(cot, a, scale(g, n.alpha));
      return;
    case Op::kAddScalar:
      if (need_a) accumulate(cot, a, g);
      return;
    case Op::kPowScalar:
      if (need_a) accumulate(cot, a, mul(g, scale(pow_scalar(na, n.alpha - 1.0), n.alpha)));
      return;
    case Op::kLog:
      if (need_a) accumulate(cot, a, mul(g, pow_scalar(na, -1.0)));
      return;
    case Op::kTanh:
      // d tanh = 1 - y^2, written with primitives so it stays differentiable.
      if (need_a) accumulate(cot, a, mul(g, add_scalar(neg(mul(self, self)), 1.0)));
      return;
    case Op::kRelu:
      if (need_a) accumulate(cot, a, mul(g, relu_mask(na)));
      return;
    case Op::kReluMask:
      return;  // derivative zero almost everywhere
    case Op::kSin:
      if (need_a) accumulate(cot, a, mul(g, cos(na)));
      return;
    case Op::kCos:
      if (need_a) accumulate(cot, a, neg(mul(g, sin(na))));
      return;
    case Op::kMatMul:
      if (need_a) accumulate(cot, a, matmul(g, transpose(nb)));
      if (need_b) accumulate(cot, b, matmul(transpose(na), g));
      return;
    case Op::kTranspose:
      if (need_a) accumulate(cot, a, transpose(g));
      return;
    case Op::kAddRowVector:
      if (need_a) accumulate(cot, a, g);
      if (need_b) accumulate(cot, b, col_sum(g));
      return;
    case Op::kSumAll:
      if (need_a)
        accumulate(cot, a,
                   broadcast_all(g, static_cast<int>(nodes_[a].value.rows()),
                                 static_cast<int>(nodes_[a].value.cols())));
      return;
    case Op::kRowSum:
      if (need_a) accumulate(cot, a, broadcast_cols(g, static_cast<int>(nodes_[a].value.cols())));
      return;
    case Op::kColSum:
      if (need_a) accumulate(cot, a, broadcast_rows(g, static_cast<int>(nodes_[a].value.rows())));
      return;
    case Op::kBroadcastAll:
      if (need_a) accumulate(cot, a, sum_all(g));
      return;
    case Op::kBroadcastRows:
      if (need_a) accumulate(cot, a, col_sum(g));
      return;
    case Op::kBroadcastCols:
      if (need_a) accumulate(cot, a, row_sum(g));
      return;
    case Op::kRowMin: {
      if (!need_a) return;
      Node v;
      v.op = Op::kRowMinVjp;
      v.a = g.v;
      v.rows = static_cast<int>(nodes_[a].value.rows());
      v.cols = static_cast<int>(nodes_[a].value.cols());
      v.argmin = n.argmin;  // frozen copy; replay keeps the recorded routing
      accumulate(cot, a, push(std::move(v)));
      return;
    }
    case Op::kFieldEval: {
      if (!need_a) return;
      Node v;
      v.op = Op::kFieldVjp;
      v.a = g.v;
      v.b = a;
      v.field = n.field;
      accumulate(cot, a, push(std::move(v)));
      return;
    }
    case Op::kRowMinVjp:
    case Op::kFieldVjp:
      throw std::invalid_argument(std::string("backward rule missing for op '") + op_name(n.op) +
                                  "' (third-order differentiation is not supported)");
  }
}

std::vector<NodeId> Tape::backward(NodeId out, const std::vector<NodeId>& wrt, NodeId seed) {
  const int out_i = check(out);
  if (!seed.valid()) {
    if (value(out).size() != 1)
      throw std::invalid_argument("backward: default seed requires a scalar output");
    seed = scalar(1.0);
  } else {
    require_same_shape(value(out), value(seed), "backward seed");
  }

  // A node is relevant if some differentiation target is reachable from it.
  std::vector<char> relevant(nodes_.size(), 0);
  for (NodeId w : wrt) relevant[static_cast<std::size_t>(check(w))] = 1;
  for (std::size_t i = 0; i < static_cast<std::size_t>(out_i) + 1; ++i) {
    const Node& n = nodes_[i];
    if (n.a >= 0 && relevant[static_cast<std::size_t>(n.a)]) relevant[i] = 1;
    if (n.b >= 0 && relevant[static_cast<std::size_t>(n.b)]) relevant[i] = 1;
  }

  std::vector<NodeId> cot(static_cast<std::size_t>(out_i) + 1);
  cot[static_cast<std::size_t>(out_i)] = seed;
  for (int i = out_i; i >= 0; --i) {
    if (!cot[static_cast<std::size_t>(i)].valid()) continue;
    if (!relevant[static_cast<std::size_t>(i)]) continue;
    emit_vjps(i, relevant, cot);
  }

  std::vector<NodeId> grads;
  grads.reserve(wrt.size());
  for (NodeId w : wrt) {
    NodeId g = cot[static_cast<std::size_t>(w.v)];
    if (!g.valid()) g = constant(Matrix::Zero(value(w).rows(), value(w).cols()));
    grads.push_back(g);
  }
  return grads;
}

std::vector<Matrix> Tape::gradients(NodeId out, const std::vector<NodeId>& wrt, NodeId seed) {
  std::vector<NodeId> ids = backward(out, wrt, seed);
  std::vector<Matrix> vals;
  vals.reserve(ids.size());
  for (NodeId id : ids) vals.push_back(value(id));
  return vals;
}

NodeId Tape::input_gradient(NodeId scalar_out, NodeId x) {
  if (value(scalar_out).size() != 1)
    throw std::invalid_argument("input_gradient: output node must be scalar");
  return backward(scalar_out, {x})[0];
}

}  // namespace odc::ad

#include "pinnmtl/tape.hpp"

#include <array>
#include <cmath>

namespace pinnmtl::ad {

namespace {

int arity(Op op) {
  switch (op) {
    case Op::Constant:
    case Op::Input:
      return 0;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::MatMul:
    case Op::MatMulNT:
    case Op::MatMulTN:
    case Op::AddRow:
    case Op::ScaleVar:
    case Op::ScaledMul:
    case Op::TanhGrad:
      return 2;
    default:
      return 1;
  }
}

bool integral(double x) { return x == std::floor(x) && std::isfinite(x); }

}  // namespace

Var Tape::make_var(std::size_t idx) const {
  return Var{const_cast<Tape*>(this), static_cast<std::uint32_t>(idx),
             generation_};
}

std::uint32_t Tape::check(Var v, const char* where) const {
  if (v.tape != this || v.gen != generation_ || v.id >= size_) {
    throw TapeError(std::string(where) +
                    ": Var does not belong to the live tape generation");
  }
  return v.id;
}

void Tape::check_same_shape(const Node& a, const Node& b,
                            const char* where) const {
  if (a.value.rows() != b.value.rows() || a.value.cols() != b.value.cols()) {
    throw TapeError(std::string(where) + ": operand shapes differ (" +
                    std::to_string(a.value.rows()) + "x" +
                    std::to_string(a.value.cols()) + " vs " +
                    std::to_string(b.value.rows()) + "x" +
                    std::to_string(b.value.cols()) + ")");
  }
}

Tape::Node& Tape::push(Op op, Eigen::Index rows, Eigen::Index cols,
                       std::uint32_t a, std::uint32_t b, double c0,
                       double c1) {
  if (size_ == nodes_.size()) {
    nodes_.emplace_back();
  }
  Node& n = nodes_[size_++];
  n.op = op;
  n.a = a;
  n.b = b;
  n.c0 = c0;
  n.c1 = c1;
  n.value.resize(rows, cols);
  return n;
}

void Tape::reset() {
  ++generation_;
  size_ = 0;
}

Var Tape::input(const Eigen::MatrixXd& v) {
  push(Op::Input, v.rows(), v.cols(), 0, 0, 0, 0).value = v;
  return make_var(size_ - 1);
}

Var Tape::input(double v) {
  push(Op::Input, 1, 1, 0, 0, 0, 0).value(0, 0) = v;
  return make_var(size_ - 1);
}

Var Tape::constant(const Eigen::MatrixXd& v) {
  push(Op::Constant, v.rows(), v.cols(), 0, 0, 0, 0).value = v;
  return make_var(size_ - 1);
}

Var Tape::constant(double v) {
  push(Op::Constant, 1, 1, 0, 0, 0, 0).value(0, 0) = v;
  return make_var(size_ - 1);
}

Var Tape::add(Var a, Var b) {
  const auto ia = check(a, "add"), ib = check(b, "add");
  check_same_shape(nodes_[ia], nodes_[ib], "add");
  const auto& A = nodes_[ia].value;
  const auto& B = nodes_[ib].value;
  push(Op::Add, A.rows(), A.cols(), ia, ib, 0, 0).value = A + B;
  return make_var(size_ - 1);
}

Var Tape::sub(Var a, Var b) {
  const auto ia = check(a, "sub"), ib = check(b, "sub");
  check_same_shape(nodes_[ia], nodes_[ib], "sub");
  const auto& A = nodes_[ia].value;
  const auto& B = nodes_[ib].value;
  push(Op::Sub, A.rows(), A.cols(), ia, ib, 0, 0).value = A - B;
  return make_var(size_ - 1);
}

Var Tape::mul(Var a, Var b) {
  const auto ia = check(a, "mul"), ib = check(b, "mul");
  check_same_shape(nodes_[ia], nodes_[ib], "mul");
  const auto& A = nodes_[ia].value;
  const auto& B = nodes_[ib].value;
  push(Op::Mul, A.rows(), A.cols(), ia, ib, 0, 0).value =
      A.cwiseProduct(B);
  return make_var(size_ - 1);
}

Var Tape::div(Var a, Var b) {
  const auto ia = check(a, "div"), ib = check(b, "div");
  check_same_shape(nodes_[ia], nodes_[ib], "div");
  const auto& A = nodes_[ia].value;
  const auto& B = nodes_[ib].value;
  if ((B.array() == 0.0).any()) {
    throw DomainError("div: division by zero");
  }
  push(Op::Div, A.rows(), A.cols(), ia, ib, 0, 0).value = A.cwiseQuotient(B);
  return make_var(size_ - 1);
}

Var Tape::neg(Var a) {
  const auto ia = check(a, "neg");
  const auto& A = nodes_[ia].value;
  push(Op::Neg, A.rows(), A.cols(), ia, 0, 0, 0).value = -A;
  return make_var(size_ - 1);
}

Var Tape::exp(Var a) {
  const auto ia = check(a, "exp");
  const auto& A = nodes_[ia].value;
  push(Op::Exp, A.rows(), A.cols(), ia, 0, 0, 0).value = A.array().exp();
  return make_var(size_ - 1);
}

Var Tape::log(Var a) {
  const auto ia = check(a, "log");
  const auto& A = nodes_[ia].value;
  if ((A.array() <= 0.0).any()) {
    throw DomainError("log: argument must be positive");
  }
  push(Op::Log, A.rows(), A.cols(), ia, 0, 0, 0).value = A.array().log();
  return make_var(size_ - 1);
}

Var Tape::sin(Var a) {
  const auto ia = check(a, "sin");
  const auto& A = nodes_[ia].value;
  push(Op::Sin, A.rows(), A.cols(), ia, 0, 0, 0).value = A.array().sin();
  return make_var(size_ - 1);
}

Var Tape::cos(Var a) {
  const auto ia = check(a, "cos");
  const auto& A = nodes_[ia].value;
  push(Op::Cos, A.rows(), A.cols(), ia, 0, 0, 0).value = A.array().cos();
  return make_var(size_ - 1);
}

Var Tape::tanh(Var a) {
  const auto ia = check(a, "tanh");
  const auto& A = nodes_[ia].value;
  push(Op::Tanh, A.rows(), A.cols(), ia, 0, 0, 0).value = A.array().tanh();
  return make_var(size_ - 1);
}

Var Tape::square(Var a) {
  const auto ia = check(a, "square");
  const auto& A = nodes_[ia].value;
  push(Op::Square, A.rows(), A.cols(), ia, 0, 0, 0).value =
      A.array().square();
  return make_var(size_ - 1);
}

Var Tape::pow_const(Var a, double exponent) {
  const auto ia = check(a, "pow_const");
  const auto& A = nodes_[ia].value;
  if (!integral(exponent) && (A.array() < 0.0).any()) {
    throw DomainError("pow_const: fractional power of a negative base");
  }
  if (exponent < 0.0 && (A.array() == 0.0).any()) {
    throw DomainError("pow_const: negative power of zero");
  }
  push(Op::PowConst, A.rows(), A.cols(), ia, 0, 0, exponent).value =
      A.array().pow(exponent);
  return make_var(size_ - 1);
}

Var Tape::affine(Var a, double c1, double c0) {
  const auto ia = check(a, "affine");
  const auto& A = nodes_[ia].value;
  push(Op::Affine, A.rows(), A.cols(), ia, 0, c0, c1).value =
      c1 * A.array() + c0;
  return make_var(size_ - 1);
}

Var Tape::scaled_mul(Var a, Var b, double c1) {
  const auto ia = check(a, "scaled_mul"), ib = check(b, "scaled_mul");
  check_same_shape(nodes_[ia], nodes_[ib], "scaled_mul");
  const auto& A = nodes_[ia].value;
  const auto& B = nodes_[ib].value;
  push(Op::ScaledMul, A.rows(), A.cols(), ia, ib, 0, c1).value =
      c1 * A.array() * B.array();
  return make_var(size_ - 1);
}

Var Tape::tanh_grad(Var g, Var y) {
  const auto ia = check(g, "tanh_grad"), ib = check(y, "tanh_grad");
  check_same_shape(nodes_[ia], nodes_[ib], "tanh_grad");
  const auto& G = nodes_[ia].value;
  const auto& Y = nodes_[ib].value;
  push(Op::TanhGrad, G.rows(), G.cols(), ia, ib, 0, 0).value =
      G.array() * (1.0 - Y.array().square());
  return make_var(size_ - 1);
}

Var Tape::matmul(Var a, Var b) {
  const auto ia = check(a, "matmul"), ib = check(b, "matmul");
  const auto& A = nodes_[ia].value;
  const auto& B = nodes_[ib].value;
  if (A.cols() != B.rows()) {
    throw TapeError("matmul: inner dimensions differ");
  }
  push(Op::MatMul, A.rows(), B.cols(), ia, ib, 0, 0).value.noalias() = A * B;
  return make_var(size_ - 1);
}

Var Tape::matmul_nt(Var a, Var b) {
  const auto ia = check(a, "matmul_nt"), ib = check(b, "matmul_nt");
  const auto& A = nodes_[ia].value;
  const auto& B = nodes_[ib].value;
  if (A.cols() != B.cols()) {
    throw TapeError("matmul_nt: inner dimensions differ");
  }
  push(Op::MatMulNT, A.rows(), B.rows(), ia, ib, 0, 0).value.noalias() =
      A * B.transpose();
  return make_var(size_ - 1);
}

Var Tape::matmul_tn(Var a, Var b) {
  const auto ia = check(a, "matmul_tn"), ib = check(b, "matmul_tn");
  const auto& A = nodes_[ia].value;
  const auto& B = nodes_[ib].value;
  if (A.rows() != B.rows()) {
    throw TapeError("matmul_tn: inner dimensions differ");
  }
  push(Op::MatMulTN, A.cols(), B.cols(), ia, ib, 0, 0).value.noalias() =
      A.transpose() * B;
  return make_var(size_ - 1);
}

Var Tape::add_row(Var a, Var row) {
  const auto ia = check(a, "add_row"), ib = check(row, "add_row");
  const auto& A = nodes_[ia].value;
  const auto& B = nodes_[ib].value;
  if (B.rows() != 1 || B.cols() != A.cols()) {
    throw TapeError("add_row: row operand must be 1 x cols(a)");
  }
  push(Op::AddRow, A.rows(), A.cols(), ia, ib, 0, 0).value =
      A.rowwise() + B.row(0);
  return make_var(size_ - 1);
}

Var Tape::scale_var(Var a, Var s) {
  const auto ia = check(a, "scale_var"), is = check(s, "scale_var");
  const auto& A = nodes_[ia].value;
  const auto& S = nodes_[is].value;
  if (S.size() != 1) {
    throw TapeError("scale_var: scale operand must be 1x1");
  }
  push(Op::ScaleVar, A.rows(), A.cols(), ia, is, 0, 0).value = A * S(0, 0);
  return make_var(size_ - 1);
}

Var Tape::sum_all(Var a) {
  const auto ia = check(a, "sum_all");
  push(Op::SumAll, 1, 1, ia, 0, 0, 0).value(0, 0) = nodes_[ia].value.sum();
  return make_var(size_ - 1);
}

Var Tape::sum_rows(Var a) {
  const auto ia = check(a, "sum_rows");
  const auto& A = nodes_[ia].value;
  push(Op::SumRows, 1, A.cols(), ia, 0, 0, 0).value = A.colwise().sum();
  return make_var(size_ - 1);
}

Var Tape::sum_cols(Var a) {
  const auto ia = check(a, "sum_cols");
  const auto& A = nodes_[ia].value;
  push(Op::SumCols, A.rows(), 1, ia, 0, 0, 0).value = A.rowwise().sum();
  return make_var(size_ - 1);
}

Var Tape::broadcast(Var s, Eigen::Index rows, Eigen::Index cols) {
  const auto is = check(s, "broadcast");
  const auto& S = nodes_[is].value;
  if (S.size() != 1) {
    throw TapeError("broadcast: operand must be 1x1");
  }
  push(Op::Broadcast, rows, cols, is, 0, 0, 0).value.setConstant(S(0, 0));
  return make_var(size_ - 1);
}

Var Tape::broadcast_row(Var row, Eigen::Index rows) {
  const auto ir = check(row, "broadcast_row");
  const auto& R = nodes_[ir].value;
  if (R.rows() != 1) {
    throw TapeError("broadcast_row: operand must be a row vector");
  }
  push(Op::BroadcastRow, rows, R.cols(), ir, 0, 0, 0).value =
      R.replicate(rows, 1);
  return make_var(size_ - 1);
}

Var Tape::broadcast_col(Var col, Eigen::Index cols) {
  const auto ic = check(col, "broadcast_col");
  const auto& C = nodes_[ic].value;
  if (C.cols() != 1) {
    throw TapeError("broadcast_col: operand must be a column vector");
  }
  push(Op::BroadcastCol, C.rows(), cols, ic, 0, 0, 0).value =
      C.replicate(1, cols);
  return make_var(size_ - 1);
}

const Eigen::MatrixXd& Tape::value(Var v) const {
  return nodes_[check(v, "value")].value;
}

double Tape::scalar(Var v) const {
  const auto& m = nodes_[check(v, "scalar")].value;
  if (m.size() != 1) {
    throw TapeError("scalar: node is not 1x1");
  }
  return m(0, 0);
}

std::vector<Eigen::MatrixXd> Tape::gradient(Var output,
                                            std::span<const Var> wrt) {
  const auto out = check(output, "gradient");
  if (nodes_[out].value.size() != 1) {
    throw TapeError("gradient: output must be 1x1");
  }
  std::vector<Eigen::MatrixXd> result(wrt.size());
  backward_value(out, wrt, result);
  return result;
}

void Tape::backward_value(std::uint32_t out, std::span<const Var> wrt,
                          std::vector<Eigen::MatrixXd>& result) {
  // ancestors of the output, by reverse scan
  anc_.assign(out + 1, 0);
  anc_[out] = 1;
  for (std::uint32_t i = out + 1; i-- > 0;) {
    if (!anc_[i]) continue;
    const Node& n = nodes_[i];
    const int k = arity(n.op);
    if (k >= 1) anc_[n.a] = 1;
    if (k == 2) anc_[n.b] = 1;
  }

  // adjoints are seeded lazily: the first contribution assigns, later ones
  // accumulate, and nodes never reached keep no buffer at all
  if (adj_.size() < out + 1) adj_.resize(out + 1);
  seeded_.assign(out + 1, 0);
  adj_[out].resize(1, 1);
  adj_[out](0, 0) = 1.0;
  seeded_[out] = 1;

  auto sized = [this](std::uint32_t p) -> Eigen::MatrixXd& {
    adj_[p].resize(nodes_[p].value.rows(), nodes_[p].value.cols());
    return adj_[p];
  };
  // matrix expression
  auto addM = [&](std::uint32_t p, const auto& e) {
    if (seeded_[p]) {
      adj_[p] += e;
    } else {
      adj_[p] = e;
      seeded_[p] = 1;
    }
  };
  auto subM = [&](std::uint32_t p, const auto& e) {
    if (seeded_[p]) {
      adj_[p] -= e;
    } else {
      adj_[p] = -e;
      seeded_[p] = 1;
    }
  };
  // array expression (destination must be pre-sized on first touch)
  auto addA = [&](std::uint32_t p, const auto& e) {
    if (seeded_[p]) {
      adj_[p].array() += e;
    } else {
      sized(p).array() = e;
      seeded_[p] = 1;
    }
  };
  auto subA = [&](std::uint32_t p, const auto& e) {
    if (seeded_[p]) {
      adj_[p].array() -= e;
    } else {
      sized(p).array() = -e;
      seeded_[p] = 1;
    }
  };
  // matrix product (noalias either way)
  auto addP = [&](std::uint32_t p, const auto& e) {
    if (seeded_[p]) {
      adj_[p].noalias() += e;
    } else {
      sized(p).noalias() = e;
      seeded_[p] = 1;
    }
  };
  auto addS = [&](std::uint32_t p, double v) {
    if (seeded_[p]) {
      adj_[p](0, 0) += v;
    } else {
      adj_[p].resize(1, 1);
      adj_[p](0, 0) = v;
      seeded_[p] = 1;
    }
  };

  for (std::uint32_t i = out + 1; i-- > 0;) {
    if (!anc_[i] || !seeded_[i]) continue;
    const Node& n = nodes_[i];
    const Eigen::MatrixXd& g = adj_[i];
    switch (n.op) {
      case Op::Constant:
      case Op::Input:
        break;
      case Op::Add:
        addM(n.a, g);
        addM(n.b, g);
        break;
      case Op::Sub:
        addM(n.a, g);
        subM(n.b, g);
        break;
      case Op::Mul:
        addA(n.a, g.array() * nodes_[n.b].value.array());
        addA(n.b, g.array() * nodes_[n.a].value.array());
        break;
      case Op::Div:
        addA(n.a, g.array() / nodes_[n.b].value.array());
        subA(n.b, g.array() * n.value.array() / nodes_[n.b].value.array());
        break;
      case Op::Neg:
        subM(n.a, g);
        break;
      case Op::MatMul:
        addP(n.a, g * nodes_[n.b].value.transpose());
        addP(n.b, nodes_[n.a].value.transpose() * g);
        break;
      case Op::MatMulNT:
        addP(n.a, g * nodes_[n.b].value);
        addP(n.b, g.transpose() * nodes_[n.a].value);
        break;
      case Op::MatMulTN:
        addP(n.a, nodes_[n.b].value * g.transpose());
        addP(n.b, nodes_[n.a].value * g);
        break;
      case Op::AddRow:
        addM(n.a, g);
        addM(n.b, g.colwise().sum());
        break;
      case Op::ScaleVar:
        addM(n.a, g * nodes_[n.b].value(0, 0));
        addS(n.b, (g.array() * nodes_[n.a].value.array()).sum());
        break;
      case Op::Exp:
        addA(n.a, g.array() * n.value.array());
        break;
      case Op::Log:
        addA(n.a, g.array() / nodes_[n.a].value.array());
        break;
      case Op::Sin:
        addA(n.a, g.array() * nodes_[n.a].value.array().cos());
        break;
      case Op::Cos:
        subA(n.a, g.array() * nodes_[n.a].value.array().sin());
        break;
      case Op::Tanh:
        addA(n.a, g.array() * (1.0 - n.value.array().square()));
        break;
      case Op::Square:
        addA(n.a, 2.0 * g.array() * nodes_[n.a].value.array());
        break;
      case Op::PowConst:
        if (n.c1 != 0.0) {
          addA(n.a,
               n.c1 * g.array() * nodes_[n.a].value.array().pow(n.c1 - 1.0));
        }
        break;
      case Op::Affine:
        if (n.c1 != 0.0) addA(n.a, n.c1 * g.array());
        break;
      case Op::ScaledMul:
        addA(n.a, n.c1 * g.array() * nodes_[n.b].value.array());
        addA(n.b, n.c1 * g.array() * nodes_[n.a].value.array());
        break;
      case Op::TanhGrad:
        addA(n.a, g.array() * (1.0 - nodes_[n.b].value.array().square()));
        subA(n.b, 2.0 * g.array() * nodes_[n.a].value.array() *
                      nodes_[n.b].value.array());
        break;
      case Op::SumAll:
        if (seeded_[n.a]) {
          adj_[n.a].array() += g(0, 0);
        } else {
          sized(n.a).setConstant(g(0, 0));
          seeded_[n.a] = 1;
        }
        break;
      case Op::SumRows:
        if (seeded_[n.a]) {
          adj_[n.a].rowwise() += g.row(0);
        } else {
          addM(n.a, g.replicate(nodes_[n.a].value.rows(), 1));
        }
        break;
      case Op::SumCols:
        if (seeded_[n.a]) {
          adj_[n.a].colwise() += g.col(0);
        } else {
          addM(n.a, g.replicate(1, nodes_[n.a].value.cols()));
        }
        break;
      case Op::Broadcast:
        addS(n.a, g.sum());
        break;
      case Op::BroadcastRow:
        addM(n.a, g.colwise().sum());
        break;
      case Op::BroadcastCol:
        addM(n.a, g.rowwise().sum());
        break;
    }
  }

  for (std::size_t k = 0; k < wrt.size(); ++k) {
    const auto id = check(wrt[k], "gradient");
    if (id <= out && anc_[id] && seeded_[id]) {
      result[k] = adj_[id];
    } else {
      result[k] = Eigen::MatrixXd::Zero(nodes_[id].value.rows(),
                                        nodes_[id].value.cols());
    }
  }
}

std::vector<Var> Tape::gradient_nodes(Var output, std::span<const Var> wrt) {
  const auto out = check(output, "gradient_nodes");
  if (nodes_[out].value.size() != 1) {
    throw TapeError("gradient_nodes: output must be 1x1");
  }
  std::vector<Var> result(wrt.size());
  backward_record(out, wrt, result);
  return result;
}

void Tape::backward_record(std::uint32_t out, std::span<const Var> wrt,
                           std::vector<Var>& result) {
  // descendant closure of the wrt set; adjoints are only propagated along
  // nodes that both feed the output and are fed by some wrt input
  desc_.assign(out + 1, 0);
  for (const Var& v : wrt) {
    const auto id = check(v, "gradient_nodes");
    if (id <= out) desc_[id] = 1;
  }
  for (std::uint32_t i = 0; i <= out; ++i) {
    if (desc_[i]) continue;
    const Node& n = nodes_[i];
    const int k = arity(n.op);
    if ((k >= 1 && desc_[n.a]) || (k == 2 && desc_[n.b])) desc_[i] = 1;
  }

  anc_.assign(out + 1, 0);
  anc_[out] = 1;
  for (std::uint32_t i = out + 1; i-- > 0;) {
    if (!anc_[i]) continue;
    const Node& n = nodes_[i];
    const int k = arity(n.op);
    if (k >= 1) anc_[n.a] = 1;
    if (k == 2) anc_[n.b] = 1;
  }

  adj_node_.assign(out + 1, -1);
  if (desc_[out]) {
    adj_node_[out] = static_cast<std::int32_t>(constant(1.0).id);
  }

  auto var_of = [this](std::uint32_t id) { return make_var(id); };
  auto accumulate = [this, &var_of](std::uint32_t parent, Var g) {
    if (adj_node_[parent] < 0) {
      adj_node_[parent] = static_cast<std::int32_t>(g.id);
    } else {
      adj_node_[parent] = static_cast<std::int32_t>(
          add(var_of(static_cast<std::uint32_t>(adj_node_[parent])), g).id);
    }
  };

  for (std::uint32_t i = out + 1; i-- > 0;) {
    if (!anc_[i] || !desc_[i] || adj_node_[i] < 0) continue;
    // pushes below may reallocate nodes_, so copy the fields first
    const Op op = nodes_[i].op;
    const std::uint32_t pa = nodes_[i].a;
    const std::uint32_t pb = nodes_[i].b;
    const double c1 = nodes_[i].c1;
    const int k = arity(op);
    const bool need_a = k >= 1 && desc_[pa];
    const bool need_b = k == 2 && desc_[pb];
    if (!need_a && !need_b) continue;
    const Var g = var_of(static_cast<std::uint32_t>(adj_node_[i]));
    const Var self = var_of(i);
    const Var va = var_of(pa);
    const Var vb = var_of(pb);
    switch (op) {
      case Op::Constant:
      case Op::Input:
        break;
      case Op::Add:
        if (need_a) accumulate(pa, g);
        if (need_b) accumulate(pb, g);
        break;
      case Op::Sub:
        if (need_a) accumulate(pa, g);
        if (need_b) accumulate(pb, neg(g));
        break;
      case Op::Mul:
        if (need_a) accumulate(pa, mul(g, vb));
        if (need_b) accumulate(pb, mul(g, va));
        break;
      case Op::Div:
        if (need_a) accumulate(pa, div(g, vb));
        if (need_b) accumulate(pb, neg(div(mul(g, self), vb)));
        break;
      case Op::Neg:
        accumulate(pa, neg(g));
        break;
      case Op::MatMul:
        if (need_a) accumulate(pa, matmul_nt(g, vb));
        if (need_b) accumulate(pb, matmul_tn(va, g));
        break;
      case Op::MatMulNT:
        if (need_a) accumulate(pa, matmul(g, vb));
        if (need_b) accumulate(pb, matmul_tn(g, va));
        break;
      case Op::MatMulTN:
        if (need_a) accumulate(pa, matmul_nt(vb, g));
        if (need_b) accumulate(pb, matmul(va, g));
        break;
      case Op::AddRow:
        if (need_a) accumulate(pa, g);
        if (need_b) accumulate(pb, sum_rows(g));
        break;
      case Op::ScaleVar:
        if (need_a) accumulate(pa, scale_var(g, vb));
        if (need_b) accumulate(pb, sum_all(mul(g, va)));
        break;
      case Op::Exp:
        accumulate(pa, mul(g, self));
        break;
      case Op::Log:
        accumulate(pa, div(g, va));
        break;
      case Op::Sin:
        accumulate(pa, mul(g, cos(va)));
        break;
      case Op::Cos:
        accumulate(pa, scaled_mul(g, sin(va), -1.0));
        break;
      case Op::Tanh:
        accumulate(pa, tanh_grad(g, self));
        break;
      case Op::Square:
        accumulate(pa, scaled_mul(g, va, 2.0));
        break;
      case Op::PowConst:
        if (c1 != 0.0) {
          accumulate(pa, scaled_mul(g, pow_const(va, c1 - 1.0), c1));
        }
        break;
      case Op::Affine:
        if (c1 != 0.0) accumulate(pa, affine(g, c1, 0.0));
        break;
      case Op::ScaledMul:
        if (need_a) accumulate(pa, scaled_mul(g, vb, c1));
        if (need_b) accumulate(pb, scaled_mul(g, va, c1));
        break;
      case Op::TanhGrad:
        // d/dg: h * (1 - y^2); d/dy: -2 y g h
        if (need_a) accumulate(pa, tanh_grad(g, vb));
        if (need_b) accumulate(pb, scaled_mul(mul(g, va), vb, -2.0));
        break;
      case Op::SumAll:
        accumulate(pa, broadcast(g, nodes_[pa].value.rows(),
                                 nodes_[pa].value.cols()));
        break;
      case Op::SumRows:
        accumulate(pa, broadcast_row(g, nodes_[pa].value.rows()));
        break;
      case Op::SumCols:
        accumulate(pa, broadcast_col(g, nodes_[pa].value.cols()));
        break;
      case Op::Broadcast:
        accumulate(pa, sum_all(g));
        break;
      case Op::BroadcastRow:
        accumulate(pa, sum_rows(g));
        break;
      case Op::BroadcastCol:
        accumulate(pa, sum_cols(g));
        break;
    }
  }

  for (std::size_t k = 0; k < wrt.size(); ++k) {
    const auto id = check(wrt[k], "gradient_nodes");
    if (id <= out && anc_[id] && adj_node_[id] >= 0) {
      result[k] = make_var(static_cast<std::uint32_t>(adj_node_[id]));
    } else {
      result[k] = constant(Eigen::MatrixXd::Zero(nodes_[id].value.rows(),
                                                 nodes_[id].value.cols()));
    }
  }
}

double nested_derivative(Tape& tape, Var output, Var input, int order) {
  if (order != 1 && order != 2) {
    throw TapeError("nested_derivative: order must be 1 or 2, got " +
                    std::to_string(order));
  }
  const std::array<Var, 1> wrt{input};
  Var g = tape.gradient_nodes(output, wrt)[0];
  if (order == 1) return tape.scalar(g);
  Var g2 = tape.gradient_nodes(g, wrt)[0];
  return tape.scalar(g2);
}

}  // namespace pinnmtl::ad

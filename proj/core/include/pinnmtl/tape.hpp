#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <deque>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pinnmtl::ad {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; invalidated by Tape::reset().
struct Var {
  Tape* tape = nullptr;
  std::uint32_t id = 0;
  std::uint64_t gen = 0;

  bool valid() const noexcept { return tape != nullptr; }
};

/// Raised when an operand's values leave the domain of the operation
/// (division by zero, log of a non-positive value, fractional powers of
/// negative bases).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised on structural misuse: shape mismatches, stale Var handles,
/// derivative orders outside {1, 2}.
class TapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Op : std::uint8_t {
  Constant,
  Input,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  MatMul,    // a * b
  MatMulNT,  // a * b^T
  MatMulTN,  // a^T * b
  AddRow,    // matrix + broadcast row vector
  ScaleVar,  // matrix * broadcast 1x1 scalar node
  Exp,
  Log,
  Sin,
  Cos,
  Tanh,
  Square,
  PowConst,   // elementwise a^e, constant exponent
  Affine,     // elementwise c1 * a + c0, constant coefficients
  ScaledMul,  // elementwise c1 * a * b
  TanhGrad,   // elementwise a * (1 - b^2), the tanh chain step
  SumAll,    // 1x1 sum of all entries
  SumRows,   // 1xm column sums
  SumCols,   // nx1 row sums
  Broadcast,     // replicate 1x1 to r x c
  BroadcastRow,  // replicate 1xm to r x m
  BroadcastCol,  // replicate nx1 to n x c
};

/// Reverse-mode tape over dense real matrices. Scalars are 1x1 nodes.
///
/// Recording is append-only within a generation; reset() starts a new
/// generation and reuses node storage, so shape-stable workloads allocate
/// only on their first pass. Backward sweeps come in two flavours:
///
///  - gradient(): accumulates plain matrix adjoints (no new nodes),
///  - gradient_nodes(): emits the backward pass as tape operations, so the
///    result is itself differentiable. Nesting is supported to second
///    order, which covers every operator in this codebase.
///
/// All sweeps visit nodes in a fixed order, so results are deterministic
/// for a fixed expression.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // -- leaves --------------------------------------------------------------
  Var input(const Eigen::MatrixXd& v);
  Var input(double v);
  Var constant(const Eigen::MatrixXd& v);
  Var constant(double v);

  // -- elementwise binary --------------------------------------------------
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);

  // -- elementwise unary ---------------------------------------------------
  Var neg(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var sin(Var a);
  Var cos(Var a);
  Var tanh(Var a);
  Var square(Var a);
  Var pow_const(Var a, double exponent);
  Var affine(Var a, double c1, double c0);
  // fused kernels; backward sweeps emit these to keep derivative graphs short
  Var scaled_mul(Var a, Var b, double c1);
  Var tanh_grad(Var g, Var y);

  // -- linear algebra ------------------------------------------------------
  Var matmul(Var a, Var b);
  Var matmul_nt(Var a, Var b);
  Var matmul_tn(Var a, Var b);
  Var add_row(Var a, Var row);
  Var scale_var(Var a, Var s);  // s is 1x1

  // -- reductions / broadcasts ----------------------------------------------
  Var sum_all(Var a);
  Var sum_rows(Var a);
  Var sum_cols(Var a);
  Var broadcast(Var s, Eigen::Index rows, Eigen::Index cols);
  Var broadcast_row(Var row, Eigen::Index rows);
  Var broadcast_col(Var col, Eigen::Index cols);

  // -- access ----------------------------------------------------------------
  const Eigen::MatrixXd& value(Var v) const;
  /// Value of a 1x1 node.
  double scalar(Var v) const;
  std::size_t size() const noexcept { return size_; }
  std::uint64_t generation() const noexcept { return generation_; }

  /// Starts a new generation. Node storage is retained and reused slot by
  /// slot, so rebuilding the same expression costs no allocation.
  void reset();

  /// d(output)/d(wrt[i]) as plain matrices, same shapes as the wrt values.
  /// output must be 1x1. Inputs the output does not depend on get zeros.
  std::vector<Eigen::MatrixXd> gradient(Var output, std::span<const Var> wrt);

  /// Same sweep, but recorded: each returned Var is a node whose value is
  /// d(output)/d(wrt[i]) and which can itself be differentiated. Inputs the
  /// output does not depend on get zero-constant nodes.
  std::vector<Var> gradient_nodes(Var output, std::span<const Var> wrt);

 private:
  struct Node {
    Op op = Op::Constant;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    double c0 = 0.0;
    double c1 = 0.0;
    Eigen::MatrixXd value;
  };

  // deque, not vector: op bodies hold references to operand nodes while
  // push() appends, so element references must survive growth
  std::deque<Node> nodes_;
  std::size_t size_ = 0;  // live node count; nodes_ beyond it are free slots
  std::uint64_t generation_ = 1;

  // scratch (pooled across sweeps)
  std::vector<Eigen::MatrixXd> adj_;
  std::vector<std::uint8_t> anc_;
  std::vector<std::uint8_t> seeded_;  // adj_ slot holds a live adjoint
  std::vector<std::uint8_t> desc_;
  std::vector<std::int32_t> adj_node_;

  Node& push(Op op, Eigen::Index rows, Eigen::Index cols, std::uint32_t a,
             std::uint32_t b, double c0, double c1);
  Var make_var(std::size_t idx) const;
  std::uint32_t check(Var v, const char* where) const;
  void check_same_shape(const Node& a, const Node& b, const char* where) const;
  void backward_value(std::uint32_t out, std::span<const Var> wrt,
                      std::vector<Eigen::MatrixXd>& result);
  void backward_record(std::uint32_t out, std::span<const Var> wrt,
                       std::vector<Var>& result);
};

// Operator sugar. All elementwise; scalar overloads record Affine nodes.
inline Var operator+(Var a, Var b) { return a.tape->add(a, b); }
inline Var operator-(Var a, Var b) { return a.tape->sub(a, b); }
inline Var operator*(Var a, Var b) { return a.tape->mul(a, b); }
inline Var operator/(Var a, Var b) { return a.tape->div(a, b); }
inline Var operator-(Var a) { return a.tape->neg(a); }
inline Var operator+(Var a, double c) { return a.tape->affine(a, 1.0, c); }
inline Var operator+(double c, Var a) { return a.tape->affine(a, 1.0, c); }
inline Var operator-(Var a, double c) { return a.tape->affine(a, 1.0, -c); }
inline Var operator-(double c, Var a) { return a.tape->affine(a, -1.0, c); }
inline Var operator*(Var a, double c) { return a.tape->affine(a, c, 0.0); }
inline Var operator*(double c, Var a) { return a.tape->affine(a, c, 0.0); }
inline Var operator/(Var a, double c) { return a.tape->affine(a, 1.0 / c, 0.0); }

inline Var exp(Var a) { return a.tape->exp(a); }
inline Var log(Var a) { return a.tape->log(a); }
inline Var sin(Var a) { return a.tape->sin(a); }
inline Var cos(Var a) { return a.tape->cos(a); }
inline Var tanh(Var a) { return a.tape->tanh(a); }
inline Var square(Var a) { return a.tape->square(a); }
inline Var pow(Var a, double e) { return a.tape->pow_const(a, e); }
inline Var sum(Var a) { return a.tape->sum_all(a); }

/// 0.5 * (1 + tanh(x / 2)); monotone map onto (0, 1).
inline Var sigmoid(Var a) { return 0.5 * (1.0 + tanh(a * 0.5)); }

/// Value of d^order(output)/d(input)^order for 1x1 output and input.
/// order must be 1 or 2; higher orders raise TapeError.
double nested_derivative(Tape& tape, Var output, Var input, int order);

}  // namespace pinnmtl::ad

#include "pinnmtl/nn.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace pinnmtl::nn {

std::size_t param_count(std::span<const ParamRef> params) {
  std::size_t n = 0;
  for (const auto& p : params) n += static_cast<std::size_t>(p.value->size());
  return n;
}

Eigen::VectorXd flatten(std::span<const ParamRef> params) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(param_count(params)));
  Eigen::Index at = 0;
  for (const auto& p : params) {
    out.segment(at, p.value->size()) =
        Eigen::Map<const Eigen::VectorXd>(p.value->data(), p.value->size());
    at += p.value->size();
  }
  return out;
}

Eigen::VectorXd flatten_mats(std::span<const Eigen::MatrixXd> mats) {
  Eigen::Index total = 0;
  for (const auto& m : mats) total += m.size();
  Eigen::VectorXd out(total);
  Eigen::Index at = 0;
  for (const auto& m : mats) {
    out.segment(at, m.size()) =
        Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    at += m.size();
  }
  return out;
}

void unflatten(const Eigen::VectorXd& flat, std::span<const ParamRef> params) {
  if (static_cast<std::size_t>(flat.size()) != param_count(params)) {
    throw std::invalid_argument("unflatten: size mismatch");
  }
  Eigen::Index at = 0;
  for (const auto& p : params) {
    Eigen::Map<Eigen::VectorXd>(p.value->data(), p.value->size()) =
        flat.segment(at, p.value->size());
    at += p.value->size();
  }
}

std::vector<Eigen::MatrixXd> unflatten_like(const Eigen::VectorXd& flat,
                                            std::span<const ParamRef> params) {
  if (static_cast<std::size_t>(flat.size()) != param_count(params)) {
    throw std::invalid_argument("unflatten_like: size mismatch");
  }
  std::vector<Eigen::MatrixXd> out;
  out.reserve(params.size());
  Eigen::Index at = 0;
  for (const auto& p : params) {
    Eigen::MatrixXd m(p.value->rows(), p.value->cols());
    Eigen::Map<Eigen::VectorXd>(m.data(), m.size()) =
        flat.segment(at, m.size());
    at += m.size();
    out.push_back(std::move(m));
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 over the combined word
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

AdamState::AdamState(std::span<const ParamRef> params, AdamConfig cfg)
    : cfg_(cfg) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const auto& p : params) {
    m_.push_back(Eigen::MatrixXd::Zero(p.value->rows(), p.value->cols()));
    v_.push_back(Eigen::MatrixXd::Zero(p.value->rows(), p.value->cols()));
  }
}

void AdamState::step(std::span<const ParamRef> params,
                     std::span<const Eigen::MatrixXd> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw std::invalid_argument("adam: block count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!grads[i].allFinite()) {
      throw std::runtime_error("adam: non-finite gradient for parameter '" +
                               params[i].name + "' at step " +
                               std::to_string(t_ + 1));
    }
    if (grads[i].rows() != m_[i].rows() || grads[i].cols() != m_[i].cols()) {
      throw std::invalid_argument("adam: gradient shape mismatch for '" +
                                  params[i].name + "'");
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grads[i];
    v_[i].array() = cfg_.beta2 * v_[i].array() +
                    (1.0 - cfg_.beta2) * grads[i].array().square();
    params[i].value->array() -=
        cfg_.lr * (m_[i].array() / bc1) /
        ((v_[i].array() / bc2).sqrt() + cfg_.eps);
  }
}

Mlp::Mlp(MlpShape shape) : shape_(std::move(shape)) {
  if (shape_.input_dim < 1 || shape_.output_dim < 1 || shape_.hidden.empty()) {
    throw std::invalid_argument("Mlp: need >=1 input, >=1 output, >=1 hidden layer");
  }
  const int h0 = shape_.hidden.front();
  in_w_.assign(shape_.input_dim, Eigen::MatrixXd::Zero(1, h0));
  in_b_ = Eigen::MatrixXd::Zero(1, h0);
  for (std::size_t k = 0; k + 1 < shape_.hidden.size(); ++k) {
    hw_.push_back(
        Eigen::MatrixXd::Zero(shape_.hidden[k], shape_.hidden[k + 1]));
    hb_.push_back(Eigen::MatrixXd::Zero(1, shape_.hidden[k + 1]));
  }
  const int hl = shape_.hidden.back();
  out_w_.assign(shape_.output_dim, Eigen::MatrixXd::Zero(hl, 1));
  out_b_.assign(shape_.output_dim, Eigen::MatrixXd::Zero(1, 1));
}

void Mlp::init(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto fill = [&rng](Eigen::MatrixXd& m, int fan_in, int fan_out) {
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-a, a);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  };
  const int h0 = shape_.hidden.front();
  for (auto& w : in_w_) fill(w, shape_.input_dim, h0);
  in_b_.setZero();
  for (std::size_t k = 0; k < hw_.size(); ++k) {
    fill(hw_[k], shape_.hidden[k], shape_.hidden[k + 1]);
    hb_[k].setZero();
  }
  for (auto& w : out_w_) fill(w, shape_.hidden.back(), shape_.output_dim);
  for (auto& b : out_b_) b.setZero();
}

std::vector<ParamRef> Mlp::params() {
  std::vector<ParamRef> out;
  for (std::size_t j = 0; j < in_w_.size(); ++j) {
    out.push_back({"in.w" + std::to_string(j), &in_w_[j]});
  }
  out.push_back({"in.b", &in_b_});
  for (std::size_t k = 0; k < hw_.size(); ++k) {
    out.push_back({"h" + std::to_string(k) + ".w", &hw_[k]});
    out.push_back({"h" + std::to_string(k) + ".b", &hb_[k]});
  }
  for (std::size_t j = 0; j < out_w_.size(); ++j) {
    out.push_back({"out.w" + std::to_string(j), &out_w_[j]});
    out.push_back({"out.b" + std::to_string(j), &out_b_[j]});
  }
  return out;
}

std::vector<ParamRef> Mlp::head_params(int head) {
  if (head < 0 || head >= shape_.output_dim) {
    throw std::invalid_argument("Mlp::head_params: no such head");
  }
  return {{"out.w" + std::to_string(head), &out_w_[head]},
          {"out.b" + std::to_string(head), &out_b_[head]}};
}

Mlp::Bound Mlp::bind(ad::Tape& tape) const {
  Bound b;
  auto push = [&](const Eigen::MatrixXd& m) {
    ad::Var v = tape.input(m);
    b.all.push_back(v);
    return v;
  };
  for (const auto& w : in_w_) b.in_w.push_back(push(w));
  b.in_b = push(in_b_);
  for (std::size_t k = 0; k < hw_.size(); ++k) {
    b.hidden.push_back({ad::Var{}, ad::Var{}});
    b.hidden.back().w = push(hw_[k]);
    b.hidden.back().b = push(hb_[k]);
  }
  for (std::size_t j = 0; j < out_w_.size(); ++j) {
    b.out_w.push_back(push(out_w_[j]));
    b.out_b.push_back(push(out_b_[j]));
  }
  return b;
}

ad::Var Mlp::layer0(ad::Tape& tape, const Bound& b,
                    std::span<const ad::Var> cols) {
  if (cols.size() != b.in_w.size()) {
    throw ad::TapeError("Mlp: input column count != input_dim");
  }
  ad::Var z = tape.matmul(cols[0], b.in_w[0]);
  for (std::size_t j = 1; j < cols.size(); ++j) {
    z = tape.add(z, tape.matmul(cols[j], b.in_w[j]));
  }
  return tape.tanh(tape.add_row(z, b.in_b));
}

ad::Var Mlp::layer(ad::Tape& tape, const Bound& b, int k, ad::Var prev) {
  const auto& d = b.hidden.at(static_cast<std::size_t>(k) - 1);
  return tape.tanh(tape.add_row(tape.matmul(prev, d.w), d.b));
}

std::vector<ad::Var> Mlp::heads(ad::Tape& tape, const Bound& b, ad::Var last) {
  std::vector<ad::Var> out;
  out.reserve(b.out_w.size());
  for (std::size_t j = 0; j < b.out_w.size(); ++j) {
    out.push_back(tape.add_row(tape.matmul(last, b.out_w[j]), b.out_b[j]));
  }
  return out;
}

std::vector<ad::Var> Mlp::forward(ad::Tape& tape, const Bound& b,
                                  std::span<const ad::Var> cols) const {
  ad::Var a = layer0(tape, b, cols);
  for (std::size_t k = 1; k < shape_.hidden.size(); ++k) {
    a = layer(tape, b, static_cast<int>(k), a);
  }
  return heads(tape, b, a);
}

Eigen::MatrixXd Mlp::forward_values(const Eigen::MatrixXd& X) const {
  if (X.cols() != shape_.input_dim) {
    throw std::invalid_argument("Mlp::forward_values: wrong input width");
  }
  Eigen::MatrixXd z = X.col(0) * in_w_[0];
  for (int j = 1; j < shape_.input_dim; ++j) {
    z.noalias() += X.col(j) * in_w_[j];
  }
  z.rowwise() += in_b_.row(0);
  Eigen::MatrixXd a = z.array().tanh();
  for (std::size_t k = 0; k < hw_.size(); ++k) {
    z.noalias() = a * hw_[k];
    z.rowwise() += hb_[k].row(0);
    a = z.array().tanh();
  }
  Eigen::MatrixXd y(X.rows(), shape_.output_dim);
  for (int j = 0; j < shape_.output_dim; ++j) {
    y.col(j) = (a * out_w_[j]).array() + out_b_[j](0, 0);
  }
  return y;
}

CrossStitchNet::CrossStitchNet(MlpShape tower_shape)
    : shape_(std::move(tower_shape)) {
  if (shape_.output_dim != 1) {
    throw std::invalid_argument("CrossStitchNet: towers carry one head each");
  }
  towers_[0] = Mlp(shape_);
  towers_[1] = Mlp(shape_);
  Stitch unit;
  unit.g00 = Eigen::MatrixXd::Constant(1, 1, 0.9);
  unit.g01 = Eigen::MatrixXd::Constant(1, 1, 0.1);
  unit.g10 = Eigen::MatrixXd::Constant(1, 1, 0.1);
  unit.g11 = Eigen::MatrixXd::Constant(1, 1, 0.9);
  stitch_.assign(shape_.hidden.size(), unit);
}

void CrossStitchNet::init(std::uint64_t seed) {
  towers_[0].init(derive_seed(seed, 0));
  towers_[1].init(derive_seed(seed, 1));
  for (auto& s : stitch_) {
    s.g00(0, 0) = 0.9;
    s.g01(0, 0) = 0.1;
    s.g10(0, 0) = 0.1;
    s.g11(0, 0) = 0.9;
  }
}

Eigen::Matrix2d CrossStitchNet::stitch_matrix(int k) const {
  const auto& s = stitch_.at(static_cast<std::size_t>(k));
  Eigen::Matrix2d g;
  g << s.g00(0, 0), s.g01(0, 0), s.g10(0, 0), s.g11(0, 0);
  return g;
}

void CrossStitchNet::set_stitch_matrix(int k, const Eigen::Matrix2d& g) {
  auto& s = stitch_.at(static_cast<std::size_t>(k));
  s.g00(0, 0) = g(0, 0);
  s.g01(0, 0) = g(0, 1);
  s.g10(0, 0) = g(1, 0);
  s.g11(0, 0) = g(1, 1);
}

std::vector<ParamRef> CrossStitchNet::params() {
  std::vector<ParamRef> out;
  for (int t = 0; t < 2; ++t) {
    for (auto& p : towers_[t].params()) {
      out.push_back({"t" + std::to_string(t) + "." + p.name, p.value});
    }
  }
  for (std::size_t k = 0; k < stitch_.size(); ++k) {
    const std::string base = "s" + std::to_string(k) + ".g";
    out.push_back({base + "00", &stitch_[k].g00});
    out.push_back({base + "01", &stitch_[k].g01});
    out.push_back({base + "10", &stitch_[k].g10});
    out.push_back({base + "11", &stitch_[k].g11});
  }
  return out;
}

std::vector<ParamRef> CrossStitchNet::head_params(int task) {
  if (task < 0 || task > 1) {
    throw std::invalid_argument("CrossStitchNet::head_params: no such task");
  }
  std::vector<ParamRef> out;
  for (auto& p : towers_[task].head_params(0)) {
    out.push_back({"t" + std::to_string(task) + "." + p.name, p.value});
  }
  return out;
}

CrossStitchNet::Bound CrossStitchNet::bind(ad::Tape& tape) const {
  Bound b;
  b.t0 = towers_[0].bind(tape);
  b.t1 = towers_[1].bind(tape);
  b.all = b.t0.all;
  b.all.insert(b.all.end(), b.t1.all.begin(), b.t1.all.end());
  for (const auto& s : stitch_) {
    Bound::Mix m;
    m.g00 = tape.input(s.g00);
    m.g01 = tape.input(s.g01);
    m.g10 = tape.input(s.g10);
    m.g11 = tape.input(s.g11);
    b.all.insert(b.all.end(), {m.g00, m.g01, m.g10, m.g11});
    b.mix.push_back(m);
  }
  return b;
}

std::vector<ad::Var> CrossStitchNet::forward(
    ad::Tape& tape, const Bound& b, std::span<const ad::Var> cols) const {
  ad::Var a0 = Mlp::layer0(tape, b.t0, cols);
  ad::Var a1 = Mlp::layer0(tape, b.t1, cols);
  const int H = static_cast<int>(shape_.hidden.size());
  for (int k = 0; k < H; ++k) {
    const auto& m = b.mix[static_cast<std::size_t>(k)];
    ad::Var x0 = tape.add(tape.scale_var(a0, m.g00), tape.scale_var(a1, m.g01));
    ad::Var x1 = tape.add(tape.scale_var(a0, m.g10), tape.scale_var(a1, m.g11));
    if (k + 1 < H) {
      a0 = Mlp::layer(tape, b.t0, k + 1, x0);
      a1 = Mlp::layer(tape, b.t1, k + 1, x1);
    } else {
      a0 = x0;
      a1 = x1;
    }
  }
  std::vector<ad::Var> out;
  out.push_back(Mlp::heads(tape, b.t0, a0)[0]);
  out.push_back(Mlp::heads(tape, b.t1, a1)[0]);
  return out;
}

Eigen::MatrixXd CrossStitchNet::forward_values(const Eigen::MatrixXd& X) const {
  // evaluates through a scratch tape so the value path can never drift from
  // the differentiated path
  ad::Tape tape;
  std::vector<ad::Var> cols;
  cols.reserve(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    cols.push_back(tape.constant(X.col(j)));
  }
  Bound b = bind(tape);
  auto heads = forward(tape, b, cols);
  Eigen::MatrixXd y(X.rows(), 2);
  y.col(0) = tape.value(heads[0]);
  y.col(1) = tape.value(heads[1]);
  return y;
}

SolverNet SolverNet::mlp(MlpShape shape) {
  SolverNet s;
  s.net_ = Mlp(std::move(shape));
  return s;
}

SolverNet SolverNet::cross_stitch(MlpShape tower_shape) {
  SolverNet s;
  s.net_ = CrossStitchNet(std::move(tower_shape));
  return s;
}

bool SolverNet::is_cross_stitch() const noexcept {
  return std::holds_alternative<CrossStitchNet>(net_);
}

int SolverNet::n_heads() const {
  if (is_cross_stitch()) return 2;
  return std::get<Mlp>(net_).shape().output_dim;
}

int SolverNet::input_dim() const {
  if (is_cross_stitch()) {
    return std::get<CrossStitchNet>(net_).tower_shape().input_dim;
  }
  return std::get<Mlp>(net_).shape().input_dim;
}

void SolverNet::init(std::uint64_t seed) {
  std::visit([&](auto& n) { n.init(seed); }, net_);
}

std::vector<ParamRef> SolverNet::params() {
  return std::visit([](auto& n) { return n.params(); }, net_);
}

std::vector<ParamRef> SolverNet::head_params(int head) {
  return std::visit([&](auto& n) { return n.head_params(head); }, net_);
}

const std::vector<ad::Var>& SolverNet::Bound::all() const {
  return std::visit([](const auto& b) -> const std::vector<ad::Var>& {
    return b.all;
  }, bound);
}

SolverNet::Bound SolverNet::bind(ad::Tape& tape) const {
  Bound b;
  std::visit([&](const auto& n) { b.bound = n.bind(tape); }, net_);
  return b;
}

std::vector<ad::Var> SolverNet::forward(ad::Tape& tape, const Bound& b,
                                        std::span<const ad::Var> cols) const {
  if (is_cross_stitch()) {
    return std::get<CrossStitchNet>(net_).forward(
        tape, std::get<CrossStitchNet::Bound>(b.bound), cols);
  }
  return std::get<Mlp>(net_).forward(tape, std::get<Mlp::Bound>(b.bound),
                                     cols);
}

Eigen::MatrixXd SolverNet::forward_values(const Eigen::MatrixXd& X) const {
  return std::visit([&](const auto& n) { return n.forward_values(X); }, net_);
}

Mlp& SolverNet::as_mlp() { return std::get<Mlp>(net_); }

CrossStitchNet& SolverNet::as_cross_stitch() {
  return std::get<CrossStitchNet>(net_);
}

}  // namespace pinnmtl::nn

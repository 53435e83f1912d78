#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pinnmtl/tape.hpp"

namespace pinnmtl::nn {

/// Named view of one trainable parameter block. The pointee is owned by the
/// network (or weight holder) the reference came from.
struct ParamRef {
  std::string name;
  Eigen::MatrixXd* value = nullptr;
};

std::size_t param_count(std::span<const ParamRef> params);
Eigen::VectorXd flatten(std::span<const ParamRef> params);
Eigen::VectorXd flatten_mats(std::span<const Eigen::MatrixXd> mats);
void unflatten(const Eigen::VectorXd& flat, std::span<const ParamRef> params);
std::vector<Eigen::MatrixXd> unflatten_like(const Eigen::VectorXd& flat,
                                            std::span<const ParamRef> params);

/// Stable stream derivation so independent consumers (init, sampling, noise,
/// projection order, ...) of one run seed never share a generator.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with the standard bias correction. Moment buffers are laid out per
/// parameter block; step() rejects non-finite gradients by block name.
class AdamState {
 public:
  AdamState() = default;
  AdamState(std::span<const ParamRef> params, AdamConfig cfg);

  void step(std::span<const ParamRef> params,
            std::span<const Eigen::MatrixXd> grads);
  std::int64_t steps() const noexcept { return t_; }
  const AdamConfig& config() const noexcept { return cfg_; }

 private:
  AdamConfig cfg_;
  std::vector<Eigen::MatrixXd> m_, v_;
  std::int64_t t_ = 0;
};

struct MlpShape {
  int input_dim = 1;
  std::vector<int> hidden;
  int output_dim = 1;
};

/// Fully connected tanh network with linear heads. The input layer and the
/// heads are stored as per-column blocks so batched forwards and per-head
/// gradients work on whole matrices, never on slices.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(MlpShape shape);

  /// Xavier-uniform weights, zero biases; deterministic in the seed.
  void init(std::uint64_t seed);

  const MlpShape& shape() const noexcept { return shape_; }
  std::vector<ParamRef> params();
  /// Output-layer blocks of one head (the task-specific parameters).
  std::vector<ParamRef> head_params(int head);

  struct Bound {
    std::vector<ad::Var> in_w;  // input_dim blocks, 1 x h0
    ad::Var in_b;               // 1 x h0
    struct Dense {
      ad::Var w, b;
    };
    std::vector<Dense> hidden;   // transitions between hidden layers
    std::vector<ad::Var> out_w;  // output_dim blocks, h_last x 1
    std::vector<ad::Var> out_b;  // output_dim blocks, 1 x 1
    std::vector<ad::Var> all;    // binding order == params() order
  };
  /// Records the parameter blocks as tape inputs.
  Bound bind(ad::Tape& tape) const;

  static ad::Var layer0(ad::Tape& tape, const Bound& b,
                        std::span<const ad::Var> cols);
  static ad::Var layer(ad::Tape& tape, const Bound& b, int k, ad::Var prev);
  static std::vector<ad::Var> heads(ad::Tape& tape, const Bound& b,
                                    ad::Var last);
  std::vector<ad::Var> forward(ad::Tape& tape, const Bound& b,
                               std::span<const ad::Var> cols) const;

  /// Value-only batched forward; rows of X are samples, columns of the
  /// result are heads.
  Eigen::MatrixXd forward_values(const Eigen::MatrixXd& X) const;

 private:
  MlpShape shape_;
  std::vector<Eigen::MatrixXd> in_w_;
  Eigen::MatrixXd in_b_;
  std::vector<Eigen::MatrixXd> hw_, hb_;
  std::vector<Eigen::MatrixXd> out_w_, out_b_;
};

/// Two equally shaped towers exchanging activations through learned 2x2
/// mixing matrices, one after every hidden activation. Heads stay private
/// to their towers. With identity mixing the towers are exactly independent.
class CrossStitchNet {
 public:
  CrossStitchNet() = default;
  explicit CrossStitchNet(MlpShape tower_shape);

  void init(std::uint64_t seed);

  const MlpShape& tower_shape() const noexcept { return shape_; }
  int stitch_count() const noexcept { return static_cast<int>(stitch_.size()); }
  Eigen::Matrix2d stitch_matrix(int k) const;
  void set_stitch_matrix(int k, const Eigen::Matrix2d& g);

  std::vector<ParamRef> params();
  std::vector<ParamRef> head_params(int task);

  struct Bound {
    Mlp::Bound t0, t1;
    struct Mix {
      ad::Var g00, g01, g10, g11;
    };
    std::vector<Mix> mix;
    std::vector<ad::Var> all;
  };
  Bound bind(ad::Tape& tape) const;

  std::vector<ad::Var> forward(ad::Tape& tape, const Bound& b,
                               std::span<const ad::Var> cols) const;
  Eigen::MatrixXd forward_values(const Eigen::MatrixXd& X) const;

 private:
  MlpShape shape_;
  Mlp towers_[2];
  struct Stitch {
    Eigen::MatrixXd g00, g01, g10, g11;  // 1x1 blocks
  };
  std::vector<Stitch> stitch_;
};

/// Uniform handle over the two solver architectures.
class SolverNet {
 public:
  SolverNet() = default;
  static SolverNet mlp(MlpShape shape);
  static SolverNet cross_stitch(MlpShape tower_shape);

  bool is_cross_stitch() const noexcept;
  int n_heads() const;
  int input_dim() const;
  void init(std::uint64_t seed);
  std::vector<ParamRef> params();
  std::vector<ParamRef> head_params(int head);

  struct Bound {
    std::variant<Mlp::Bound, CrossStitchNet::Bound> bound;
    const std::vector<ad::Var>& all() const;
  };
  Bound bind(ad::Tape& tape) const;
  std::vector<ad::Var> forward(ad::Tape& tape, const Bound& b,
                               std::span<const ad::Var> cols) const;
  Eigen::MatrixXd forward_values(const Eigen::MatrixXd& X) const;

  Mlp& as_mlp();
  CrossStitchNet& as_cross_stitch();

 private:
  std::variant<Mlp, CrossStitchNet> net_;
};

}  // namespace pinnmtl::nn

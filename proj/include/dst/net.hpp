#ifndef DST_NET_HPP
#define DST_NET_HPP

#include "dst/rules.hpp"
#include "dst/types.hpp"

#include <array>
#include <cstdint>

namespace dst::net {

// Gate order in the flat parameter layout.
enum Gate { kInput = 0, kForget = 1, kOutput = 2, kCell = 3 };

// All LSTM and head weights in one flat vector:
// [Wx(i,f,o,g) | Wh(i,f,o,g) | b(i,f,o,g) | head W (2 x hidden) | head b].
// Flat storage keeps the optimizers and serialization shape-agnostic.
class NetParams {
 public:
  NetParams() = default;
  NetParams(int input_size, int hidden_size);

  int input_size() const { return input_size_; }
  int hidden_size() const { return hidden_size_; }
  std::int64_t count() const { return flat_.size(); }

  Vec& flat() { return flat_; }
  const Vec& flat() const { return flat_; }

  Eigen::Map<Mat> wx(Gate g);
  Eigen::Map<const Mat> wx(Gate g) const;
  Eigen::Map<Mat> wh(Gate g);
  Eigen::Map<const Mat> wh(Gate g) const;
  Eigen::Map<Vec> bias(Gate g);
  Eigen::Map<const Vec> bias(Gate g) const;
  Eigen::Map<Mat> head_w();
  Eigen::Map<const Mat> head_w() const;
  Eigen::Map<Vec> head_b();
  Eigen::Map<const Vec> head_b() const;

  bool operator==(const NetParams& other) const;

 private:
  int input_size_ = 0;
  int hidden_size_ = 0;
  Vec flat_;
};

struct LstmState {
  Vec hidden;  // l_t
  Vec cell;
};

LstmState zero_state(int hidden_size);

// Per-step activations kept for the backward pass.
struct LstmStepCache {
  Vec x, h_prev, c_prev;
  Vec gi, gf, go, gg;  // post-nonlinearity gate values
  Vec c, tanh_c, h;
};

LstmState lstm_step(const NetParams& params, const LstmState& state,
                    const Vec& x, LstmStepCache* cache = nullptr);

// Head pre-activation is cached for the backward pass; coefficients are
// the logistic of it, so they always land in (0,1).
rules::RuleCoefficients head_forward(const NetParams& params,
                                     const LstmState& state,
                                     Vec* pre_activation = nullptr);

// Gradient accumulator matching the flat layout of NetParams.
struct NetGradients {
  explicit NetGradients(const NetParams& params);
  Vec flat;

  Eigen::Map<Mat> wx(Gate g);
  Eigen::Map<Mat> wh(Gate g);
  Eigen::Map<Vec> bias(Gate g);
  Eigen::Map<Mat> head_w();
  Eigen::Map<Vec> head_b();

 private:
  int input_size_;
  int hidden_size_;
};

// Backward through the whole cached sequence. upstream_c[t] is the
// gradient on the two head outputs (c_new, c_override) at turn t;
// head_pre[t] the cached pre-activations. Accumulates into grads.
void backward_through_time(const NetParams& params,
                           const std::vector<LstmStepCache>& steps,
                           const std::vector<Vec>& head_pre,
                           const std::vector<Vec>& upstream_c,
                           NetGradients& grads);

// Uniform +-1/sqrt(fan_in) per matrix, forget bias +1, seeded.
NetParams init_params(std::uint64_t seed, int input_size, int hidden_size);

struct OptimizerState {
  enum class Mode { AdaGrad, Adam };
  Mode mode = Mode::AdaGrad;
  double lr = 0.5;
  double clip = 10.0;  // global-norm threshold; <= 0 disables (AdaGrad only)
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  Vec accum;  // AdaGrad sum of squared gradients
  Vec m, v;   // Adam moments
  long step = 0;

  static OptimizerState adagrad(std::int64_t n, double lr = 0.5,
                                double clip = 10.0);
  static OptimizerState adam(std::int64_t n, double lr = 0.01,
                             double beta1 = 0.9, double beta2 = 0.999);
};

// In-place parameter update. Throws on non-finite gradients.
void optimizer_step(OptimizerState& opt, Vec& params, const Vec& grads);

}  // namespace dst::net

#endif

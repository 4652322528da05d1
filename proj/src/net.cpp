#include "dst/net.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace dst::net {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Offsets into the flat layout.
std::int64_t wx_off(int d, int h, int g) {
  return static_cast<std::int64_t>(g) * h * d;
}
std::int64_t wh_off(int d, int h, int g) {
  return 4ll * h * d + static_cast<std::int64_t>(g) * h * h;
}
std::int64_t b_off(int d, int h, int g) {
  return 4ll * h * d + 4ll * h * h + static_cast<std::int64_t>(g) * h;
}
std::int64_t head_w_off(int d, int h) { return 4ll * h * d + 4ll * h * h + 4ll * h; }
std::int64_t head_b_off(int d, int h) { return head_w_off(d, h) + 2ll * h; }
std::int64_t total_size(int d, int h) { return head_b_off(d, h) + 2; }

}  // namespace

NetParams::NetParams(int input_size, int hidden_size)
    : input_size_(input_size), hidden_size_(hidden_size),
      flat_(Vec::Zero(total_size(input_size, hidden_size))) {
  if (input_size <= 0 || hidden_size <= 0)
    throw std::invalid_argument("NetParams: sizes must be positive");
}

Eigen::Map<Mat> NetParams::wx(Gate g) {
  return {flat_.data() + wx_off(input_size_, hidden_size_, g), hidden_size_,
          input_size_};
}
Eigen::Map<const Mat> NetParams::wx(Gate g) const {
  return {flat_.data() + wx_off(input_size_, hidden_size_, g), hidden_size_,
          input_size_};
}
Eigen::Map<Mat> NetParams::wh(Gate g) {
  return {flat_.data() + wh_off(input_size_, hidden_size_, g), hidden_size_,
          hidden_size_};
}
Eigen::Map<const Mat> NetParams::wh(Gate g) const {
  return {flat_.data() + wh_off(input_size_, hidden_size_, g), hidden_size_,
          hidden_size_};
}
Eigen::Map<Vec> NetParams::bias(Gate g) {
  return {flat_.data() + b_off(input_size_, hidden_size_, g), hidden_size_};
}
Eigen::Map<const Vec> NetParams::bias(Gate g) const {
  return {flat_.data() + b_off(input_size_, hidden_size_, g), hidden_size_};
}
Eigen::Map<Mat> NetParams::head_w() {
  return {flat_.data() + head_w_off(input_size_, hidden_size_), 2,
          hidden_size_};
}
Eigen::Map<const Mat> NetParams::head_w() const {
  return {flat_.data() + head_w_off(input_size_, hidden_size_), 2,
          hidden_size_};
}
Eigen::Map<Vec> NetParams::head_b() {
  return {flat_.data() + head_b_off(input_size_, hidden_size_), 2};
}
Eigen::Map<const Vec> NetParams::head_b() const {
  return {flat_.data() + head_b_off(input_size_, hidden_size_), 2};
}

bool NetParams::operator==(const NetParams& other) const {
  return input_size_ == other.input_size_ &&
         hidden_size_ == other.hidden_size_ && flat_ == other.flat_;
}

LstmState zero_state(int hidden_size) {
  return {Vec::Zero(hidden_size), Vec::Zero(hidden_size)};
}

LstmState lstm_step(const NetParams& params, const LstmState& state,
                    const Vec& x, LstmStepCache* cache) {
  if (x.size() != params.input_size())
    throw std::invalid_argument("lstm_step: input dimension mismatch");
  if (state.hidden.size() != params.hidden_size())
    throw std::invalid_argument("lstm_step: state dimension mismatch");

  const Vec pre_i = params.wx(kInput) * x + params.wh(kInput) * state.hidden +
                    params.bias(kInput);
  const Vec pre_f = params.wx(kForget) * x + params.wh(kForget) * state.hidden +
                    params.bias(kForget);
  const Vec pre_o = params.wx(kOutput) * x + params.wh(kOutput) * state.hidden +
                    params.bias(kOutput);
  const Vec pre_g = params.wx(kCell) * x + params.wh(kCell) * state.hidden +
                    params.bias(kCell);

  const Vec gi = pre_i.unaryExpr([](double z) { return sigmoid(z); });
  const Vec gf = pre_f.unaryExpr([](double z) { return sigmoid(z); });
  const Vec go = pre_o.unaryExpr([](double z) { return sigmoid(z); });
  const Vec gg = pre_g.array().tanh();

  LstmState next;
  next.cell = gf.cwiseProduct(state.cell) + gi.cwiseProduct(gg);
  const Vec tanh_c = next.cell.array().tanh();
  next.hidden = go.cwiseProduct(tanh_c);

  if (cache) {
    cache->x = x;
    cache->h_prev = state.hidden;
    cache->c_prev = state.cell;
    cache->gi = gi;
    cache->gf = gf;
    cache->go = go;
    cache->gg = gg;
    cache->c = next.cell;
    cache->tanh_c = tanh_c;
    cache->h = next.hidden;
  }
  return next;
}

rules::RuleCoefficients head_forward(const NetParams& params,
                                     const LstmState& state,
                                     Vec* pre_activation) {
  const Vec pre = params.head_w() * state.hidden + params.head_b();
  if (pre_activation) *pre_activation = pre;
  return {sigmoid(pre[0]), sigmoid(pre[1])};
}

NetGradients::NetGradients(const NetParams& params)
    : flat(Vec::Zero(params.count())),
      input_size_(params.input_size()),
      hidden_size_(params.hidden_size()) {}

Eigen::Map<Mat> NetGradients::wx(Gate g) {
  return {flat.data() + wx_off(input_size_, hidden_size_, g), hidden_size_,
          input_size_};
}
Eigen::Map<Mat> NetGradients::wh(Gate g) {
  return {flat.data() + wh_off(input_size_, hidden_size_, g), hidden_size_,
          hidden_size_};
}
Eigen::Map<Vec> NetGradients::bias(Gate g) {
  return {flat.data() + b_off(input_size_, hidden_size_, g), hidden_size_};
}
Eigen::Map<Mat> NetGradients::head_w() {
  return {flat.data() + head_w_off(input_size_, hidden_size_), 2,
          hidden_size_};
}
Eigen::Map<Vec> NetGradients::head_b() {
  return {flat.data() + head_b_off(input_size_, hidden_size_), 2};
}

void backward_through_time(const NetParams& params,
                           const std::vector<LstmStepCache>& steps,
                           const std::vector<Vec>& head_pre,
                           const std::vector<Vec>& upstream_c,
                           NetGradients& grads) {
  if (steps.size() != head_pre.size() || steps.size() != upstream_c.size())
    throw std::invalid_argument("backward_through_time: length mismatch");

  const int hidden = params.hidden_size();
  Vec carry_dh = Vec::Zero(hidden);
  Vec carry_dc = Vec::Zero(hidden);

  for (int t = static_cast<int>(steps.size()) - 1; t >= 0; --t) {
    const LstmStepCache& s = steps[t];

    // Head: c = sigma(pre), d pre = dc * c * (1 - c).
    const Vec& pre = head_pre[t];
    Vec dpre(2);
    for (int k = 0; k < 2; ++k) {
      const double ck = sigmoid(pre[k]);
      dpre[k] = upstream_c[t][k] * ck * (1.0 - ck);
    }
    grads.head_w() += dpre * s.h.transpose();
    grads.head_b() += dpre;

    Vec dh = params.head_w().transpose() * dpre + carry_dh;
    Vec dc = carry_dc +
             dh.cwiseProduct(s.go)
                 .cwiseProduct(Vec::Ones(hidden) -
                               s.tanh_c.cwiseProduct(s.tanh_c));

    const Vec d_go = dh.cwiseProduct(s.tanh_c);
    const Vec d_gi = dc.cwiseProduct(s.gg);
    const Vec d_gg = dc.cwiseProduct(s.gi);
    const Vec d_gf = dc.cwiseProduct(s.c_prev);

    const Vec dpre_i =
        d_gi.cwiseProduct(s.gi).cwiseProduct(Vec::Ones(hidden) - s.gi);
    const Vec dpre_f =
        d_gf.cwiseProduct(s.gf).cwiseProduct(Vec::Ones(hidden) - s.gf);
    const Vec dpre_o =
        d_go.cwiseProduct(s.go).cwiseProduct(Vec::Ones(hidden) - s.go);
    const Vec dpre_g =
        d_gg.cwiseProduct(Vec::Ones(hidden) - s.gg.cwiseProduct(s.gg));

    grads.wx(kInput) += dpre_i * s.x.transpose();
    grads.wx(kForget) += dpre_f * s.x.transpose();
    grads.wx(kOutput) += dpre_o * s.x.transpose();
    grads.wx(kCell) += dpre_g * s.x.transpose();
    grads.wh(kInput) += dpre_i * s.h_prev.transpose();
    grads.wh(kForget) += dpre_f * s.h_prev.transpose();
    grads.wh(kOutput) += dpre_o * s.h_prev.transpose();
    grads.wh(kCell) += dpre_g * s.h_prev.transpose();
    grads.bias(kInput) += dpre_i;
    grads.bias(kForget) += dpre_f;
    grads.bias(kOutput) += dpre_o;
    grads.bias(kCell) += dpre_g;

    carry_dh = params.wh(kInput).transpose() * dpre_i +
               params.wh(kForget).transpose() * dpre_f +
               params.wh(kOutput).transpose() * dpre_o +
               params.wh(kCell).transpose() * dpre_g;
    carry_dc = dc.cwiseProduct(s.gf);
  }
}

NetParams init_params(std::uint64_t seed, int input_size, int hidden_size) {
  NetParams params(input_size, hidden_size);
  std::mt19937_64 rng(seed);
  auto fill = [&rng](Eigen::Map<Mat> m, int fan_in) {
    std::uniform_real_distribution<double> dist(-1.0 / std::sqrt(fan_in),
                                                1.0 / std::sqrt(fan_in));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = dist(rng);
  };
  for (Gate g : {kInput, kForget, kOutput, kCell}) {
    fill(params.wx(g), input_size);
    fill(params.wh(g), hidden_size);
  }
  fill(params.head_w(), hidden_size);
  params.bias(kForget).setOnes();
  return params;
}

OptimizerState OptimizerState::adagrad(std::int64_t n, double lr,
                                       double clip) {
  OptimizerState opt;
  opt.mode = Mode::AdaGrad;
  opt.lr = lr;
  opt.clip = clip;
  opt.accum = Vec::Zero(n);
  return opt;
}

OptimizerState OptimizerState::adam(std::int64_t n, double lr, double beta1,
                                    double beta2) {
  OptimizerState opt;
  opt.mode = Mode::Adam;
  opt.lr = lr;
  opt.beta1 = beta1;
  opt.beta2 = beta2;
  opt.m = Vec::Zero(n);
  opt.v = Vec::Zero(n);
  return opt;
}

void optimizer_step(OptimizerState& opt, Vec& params, const Vec& grads) {
  if (params.size() != grads.size())
    throw std::invalid_argument("optimizer_step: shape mismatch");
  if (!grads.allFinite())
    throw NumericError("optimizer_step: non-finite gradient");

  if (opt.mode == OptimizerState::Mode::AdaGrad) {
    Vec g = grads;
    if (opt.clip > 0.0) {
      const double norm = g.norm();
      if (norm > opt.clip) g *= opt.clip / norm;
    }
    opt.accum += g.cwiseProduct(g);
    params -=
        opt.lr * (g.array() / (opt.accum.array().sqrt() + opt.eps)).matrix();
  } else {
    ++opt.step;
    opt.m = opt.beta1 * opt.m + (1.0 - opt.beta1) * grads;
    opt.v = opt.beta2 * opt.v + (1.0 - opt.beta2) * grads.cwiseProduct(grads);
    const double mc = 1.0 - std::pow(opt.beta1, opt.step);
    const double vc = 1.0 - std::pow(opt.beta2, opt.step);
    const Vec m_hat = opt.m / mc;
    const Vec v_hat = opt.v / vc;
    params -= opt.lr *
              (m_hat.array() / (v_hat.array().sqrt() + opt.eps)).matrix();
  }
}

}  // namespace dst::net

#include "dst/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iostream>
#include <mutex>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

namespace dst::train {

namespace {
constexpr double kLogFloor = 1e-12;
}

std::vector<TrainingSample> extract_samples(const std::vector<Dialog>& dialogs,
                                            const Ontology& ontology) {
  std::vector<TrainingSample> samples;
  samples.reserve(dialogs.size() * ontology.slots().size());
  for (std::size_t d = 0; d < dialogs.size(); ++d) {
    for (const auto& slot : ontology.slots()) {
      TrainingSample s;
      s.dialog_index = static_cast<int>(d);
      s.slot = slot;
      s.gold.reserve(dialogs[d].turns.size());
      for (const auto& turn : dialogs[d].turns) {
        int idx = 0;
        if (turn.goal_labels) {
          auto it = turn.goal_labels->find(slot);
          if (it != turn.goal_labels->end()) {
            const int v = ontology.value_index(slot, it->second);
            if (v >= 0) idx = v;  // off-ontology label counts as None
          }
        }
        s.gold.push_back(idx);
      }
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

DialogLoss dialog_loss(const tracker::SlotTrajectory& trajectory,
                       const TrainingSample& sample) {
  if (trajectory.beliefs.size() != sample.gold.size())
    throw std::invalid_argument("dialog_loss: run/sample misaligned");
  DialogLoss out;
  out.belief_grads.reserve(trajectory.beliefs.size());
  for (std::size_t t = 0; t < trajectory.beliefs.size(); ++t) {
    const Vec& h = trajectory.beliefs[t];
    const int gold = sample.gold[t];
    if (gold < 0 || gold >= h.size())
      throw std::invalid_argument("dialog_loss: gold index out of range");
    const double p = h[gold] + kLogFloor;
    out.loss -= std::log(p);
    Vec g = Vec::Zero(h.size());
    g[gold] = -1.0 / p;
    out.belief_grads.push_back(std::move(g));
  }
  return out;
}

double sample_gradient(const tracker::TrackerParams& params,
                       const Ontology& ontology, const Dialog& dialog,
                       const TrainingSample& sample,
                       net::NetGradients& grads) {
  tracker::SlotForwardCache cache;
  const auto traj =
      tracker::run_slot(params, ontology, dialog, sample.slot, &cache);
  const auto loss = dialog_loss(traj, sample);

  const int n_turns = static_cast<int>(traj.beliefs.size());
  std::vector<Vec> upstream_c(n_turns);

  Vec carry = Vec::Zero(ontology.belief_dim(sample.slot));
  Vec h0 = Vec::Zero(ontology.belief_dim(sample.slot));
  h0[0] = 1.0;
  for (int t = n_turns - 1; t >= 0; --t) {
    const Vec u = loss.belief_grads[t] + carry;
    const Vec& h_prev = t == 0 ? h0 : traj.beliefs[t - 1];
    const auto rg = rules::rule_update_backward(
        h_prev, cache.marginals[t], traj.coefficients[t], u,
        params.rule_case);
    carry = rg.d_h_prev;
    Vec dc(2);
    dc << rg.d_c_new, rg.d_c_override;
    upstream_c[t] = dc;
  }

  net::backward_through_time(params.net, cache.steps, cache.head_pre,
                             upstream_c, grads);
  return loss.loss;
}

tracker::TrackerParams train_one(const TrainConfig& config,
                                 const std::vector<Dialog>& corpus,
                                 const slu::FeatureVocab& vocab,
                                 const Ontology& ontology) {
  if (corpus.empty()) throw std::invalid_argument("train_one: empty corpus");
  if (config.epochs <= 0)
    throw std::invalid_argument("train_one: epochs must be positive");
  if (config.mask_rate < 0.0 || config.mask_rate >= 1.0)
    throw std::invalid_argument("train_one: mask_rate outside [0,1)");

  tracker::TrackerParams params;
  params.vocab = vocab;
  params.ontology_hash = ontology.hash();
  params.rule_case = config.rule_case;

  const int input_size = params.input_size(ontology);
  params.net = net::init_params(config.seed, input_size, config.hidden_size);

  // Group B: one fixed random mask per run, applied at train and inference.
  if (config.group == TrainConfig::Group::Adam && config.mask_rate > 0.0) {
    std::mt19937_64 mask_rng(config.seed ^ 0x6d61736bull);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    params.fm_mask.resize(vocab.size());
    for (auto& keep : params.fm_mask)
      keep = unit(mask_rng) >= config.mask_rate ? 1 : 0;
  }

  auto opt = config.group == TrainConfig::Group::AdaGrad
                 ? net::OptimizerState::adagrad(params.net.count(),
                                                config.adagrad_lr,
                                                config.adagrad_clip)
                 : net::OptimizerState::adam(params.net.count(),
                                             config.adam_lr, config.beta1,
                                             config.beta2);

  auto samples = extract_samples(corpus, ontology);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 shuffle_rng(config.seed ^ 0x73687566ull);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double total_loss = 0.0;
    for (std::size_t idx : order) {
      const auto& sample = samples[idx];
      net::NetGradients grads(params.net);
      const double loss = sample_gradient(
          params, ontology, corpus[sample.dialog_index], sample, grads);
      if (!std::isfinite(loss))
        throw NumericError("train_one: loss diverged at epoch " +
                           std::to_string(epoch));
      total_loss += loss;
      net::optimizer_step(opt, params.net.flat(), grads.flat);
    }
    if (!config.quiet) {
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                        start)
              .count();
      std::cerr << "epoch " << epoch << " mean_loss "
                << total_loss / samples.size() << " wall_s " << secs << "\n";
    }
  }
  return params;
}

std::vector<tracker::TrackerParams> train_groups(
    const TrainConfig& base, const std::vector<Dialog>& corpus,
    const slu::FeatureVocab& vocab, const Ontology& ontology, int count_a,
    int count_b, const std::vector<std::uint64_t>& seeds, int jobs) {
  if (count_a < 0 || count_b < 0)
    throw std::invalid_argument("train_groups: negative count");
  const int total = count_a + count_b;
  if (static_cast<int>(seeds.size()) != total)
    throw std::invalid_argument("train_groups: need one seed per run");

  std::vector<tracker::TrackerParams> out(total);
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (int i = next.fetch_add(1); i < total; i = next.fetch_add(1)) {
      try {
        TrainConfig cfg = base;
        cfg.group = i < count_a ? TrainConfig::Group::AdaGrad
                                : TrainConfig::Group::Adam;
        cfg.seed = seeds[i];
        out[i] = train_one(cfg, corpus, vocab, ontology);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };

  const int n_threads = std::max(1, std::min(jobs, total));
  std::vector<std::thread> threads;
  threads.reserve(n_threads);
  for (int i = 0; i < n_threads; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace dst::train

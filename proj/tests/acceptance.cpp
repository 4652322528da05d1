// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria 5 and 6 need the public DSTC2 dataset and print a
// SKIPPED marker when it is not installed.

#include "dst/ensemble.hpp"
#include "dst/io.hpp"
#include "dst/synth.hpp"
#include "dst/tracker.hpp"
#include "dst/trainer.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

using namespace dst;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

int hardware_jobs() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 2 : static_cast<int>(n);
}

struct RuleInstance {
  Vec h, i;
  rules::RuleCoefficients c;
};

RuleInstance random_rule_instance(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RuleInstance inst;
  inst.h = Vec(n);
  for (int k = 0; k < n; ++k) inst.h[k] = unit(rng) + 1e-3;
  inst.h /= inst.h.sum();
  inst.i = Vec::Zero(n);
  double budget = unit(rng);
  for (int k = 1; k < n; ++k) {
    const double p = unit(rng) * budget;
    inst.i[k] = p;
    budget -= p;
  }
  inst.c.c_new = 0.05 + 0.9 * unit(rng);
  inst.c.c_override = 0.05 + 0.9 * unit(rng);
  return inst;
}

// --- criterion 1: analytic gradients vs central finite differences ------

double rule_fd_worst(std::mt19937_64& rng, int cases) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> dim(2, 10);
  const double eps = 1e-6;
  double worst = 0.0;
  for (int trial = 0; trial < cases; ++trial) {
    const auto cc = trial % 2 == 0 ? rules::CoefficientCase::SourceNone
                                   : rules::CoefficientCase::TargetNone;
    const int n = dim(rng);
    const auto inst = random_rule_instance(rng, n);
    Vec u(n);
    for (int k = 0; k < n; ++k) u[k] = gauss(rng);
    const auto loss = [&](const Vec& h, const Vec& i,
                          const rules::RuleCoefficients& c) {
      return u.dot(rules::rule_update(h, i, c, cc));
    };
    const auto g = rules::rule_update_backward(inst.h, inst.i, inst.c, u, cc);
    for (int k = 0; k < n; ++k) {
      Vec hp = inst.h, hm = inst.h;
      hp[k] += eps;
      hm[k] -= eps;
      worst = std::max(worst, rel_err(g.d_h_prev[k],
                                      (loss(hp, inst.i, inst.c) -
                                       loss(hm, inst.i, inst.c)) /
                                          (2 * eps)));
      Vec ip = inst.i, im = inst.i;
      ip[k] += eps;
      im[k] -= eps;
      worst = std::max(worst, rel_err(g.d_i[k],
                                      (loss(inst.h, ip, inst.c) -
                                       loss(inst.h, im, inst.c)) /
                                          (2 * eps)));
    }
    auto cp = inst.c, cm = inst.c;
    cp.c_new += eps;
    cm.c_new -= eps;
    worst = std::max(worst, rel_err(g.d_c_new,
                                    (loss(inst.h, inst.i, cp) -
                                     loss(inst.h, inst.i, cm)) /
                                        (2 * eps)));
    cp = cm = inst.c;
    cp.c_override += eps;
    cm.c_override -= eps;
    worst = std::max(worst, rel_err(g.d_c_override,
                                    (loss(inst.h, inst.i, cp) -
                                     loss(inst.h, inst.i, cm)) /
                                        (2 * eps)));
  }
  return worst;
}

double net_fd_worst(std::mt19937_64& rng, int cases) {
  std::normal_distribution<double> gauss(0.0, 0.5);
  const double eps = 1e-6;
  double worst = 0.0;
  for (int trial = 0; trial < cases; ++trial) {
    const int input = 3 + static_cast<int>(rng() % 4);
    const int hidden = 2 + static_cast<int>(rng() % 4);
    const int turns = 1 + static_cast<int>(rng() % 3);
    auto params = net::init_params(rng(), input, hidden);
    std::vector<Vec> xs(turns), ws(turns);
    for (int t = 0; t < turns; ++t) {
      xs[t] = Vec(input);
      for (int k = 0; k < input; ++k) xs[t][k] = gauss(rng);
      ws[t] = Vec(2);
      ws[t][0] = gauss(rng);
      ws[t][1] = gauss(rng);
    }
    const auto objective = [&](const net::NetParams& p) {
      net::LstmState s = net::zero_state(hidden);
      double total = 0.0;
      for (int t = 0; t < turns; ++t) {
        s = net::lstm_step(p, s, xs[t]);
        const auto c = net::head_forward(p, s);
        total += ws[t][0] * c.c_new + ws[t][1] * c.c_override;
      }
      return total;
    };

    std::vector<net::LstmStepCache> caches(turns);
    std::vector<Vec> pres(turns);
    net::LstmState s = net::zero_state(hidden);
    for (int t = 0; t < turns; ++t) {
      s = net::lstm_step(params, s, xs[t], &caches[t]);
      net::head_forward(params, s, &pres[t]);
    }
    net::NetGradients grads(params);
    net::backward_through_time(params, caches, pres, ws, grads);

    // probe a random sample of coordinates
    for (int probe = 0; probe < 12; ++probe) {
      const auto k =
          static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(
                                                params.count()));
      const double saved = params.flat()[k];
      params.flat()[k] = saved + eps;
      const double up = objective(params);
      params.flat()[k] = saved - eps;
      const double down = objective(params);
      params.flat()[k] = saved;
      worst = std::max(worst, rel_err(grads.flat[k], (up - down) / (2 * eps)));
    }
  }
  return worst;
}

double dialog_fd_worst(std::mt19937_64& rng, int min_cases) {
  synth::SynthConfig cfg;
  cfg.n_dialogs = 12;
  cfg.n_slots = 2;
  cfg.n_values = 3;
  cfg.seed = 5;
  const auto ontology = synth::make_ontology(cfg);
  const auto dialogs = synth::generate(cfg);
  const auto samples = train::extract_samples(dialogs, ontology);

  tracker::TrackerParams params;
  params.vocab = slu::build_vocab(dialogs, 1);
  params.ontology_hash = ontology.hash();
  params.net = net::init_params(9, params.input_size(ontology), 4);

  const auto sample_loss = [&](const tracker::TrackerParams& p,
                               const train::TrainingSample& sample) {
    const auto traj = tracker::run_slot(p, ontology,
                                        dialogs[sample.dialog_index],
                                        sample.slot);
    return train::dialog_loss(traj, sample).loss;
  };

  const double eps = 1e-6;
  double worst = 0.0;
  int cases = 0;
  for (std::size_t s = 0; cases < min_cases; s = (s + 1) % samples.size()) {
    const auto& sample = samples[s];
    net::NetGradients grads(params.net);
    train::sample_gradient(params, ontology, dialogs[sample.dialog_index],
                           sample, grads);
    for (int probe = 0; probe < 10; ++probe, ++cases) {
      const auto k =
          static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(
                                                params.net.count()));
      const double saved = params.net.flat()[k];
      params.net.flat()[k] = saved + eps;
      const double up = sample_loss(params, sample);
      params.net.flat()[k] = saved - eps;
      const double down = sample_loss(params, sample);
      params.net.flat()[k] = saved;
      worst = std::max(worst, rel_err(grads.flat[k], (up - down) / (2 * eps)));
    }
  }
  return worst;
}

bool criterion_gradients() {
  const auto start = Clock::now();
  std::mt19937_64 rng(7);
  const double w_rule = rule_fd_worst(rng, 120);
  const double w_net = net_fd_worst(rng, 120);
  const double w_dialog = dialog_fd_worst(rng, 120);
  const double elapsed = seconds_since(start);
  const double worst = std::max({w_rule, w_net, w_dialog});
  std::cout << "criterion 1 gradient suite: "
            << (worst < 1e-4 && elapsed < 60.0 ? "PASS" : "FAIL")
            << " (max rel err " << worst << ", " << elapsed << " s)\n";
  return worst < 1e-4 && elapsed < 60.0;
}

// --- criterion 2: mass conservation -------------------------------------

bool criterion_conservation() {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> dim(2, 12);
  double worst_sum = 0.0;
  double most_negative = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    const auto cc = trial % 2 == 0 ? rules::CoefficientCase::SourceNone
                                   : rules::CoefficientCase::TargetNone;
    const auto inst = random_rule_instance(rng, dim(rng));
    const Vec h = rules::rule_update(inst.h, inst.i, inst.c, cc);
    worst_sum = std::max(worst_sum, std::abs(h.sum() - 1.0));
    most_negative = std::min(most_negative, h.minCoeff());
  }
  const bool ok = worst_sum < 1e-12 && most_negative >= 0.0;
  std::cout << "criterion 2 conservation suite: " << (ok ? "PASS" : "FAIL")
            << " (10000 triples, max |sum-1| " << worst_sum
            << ", min entry " << most_negative << ")\n";
  return ok;
}

// --- criterion 3: hand-worked oracle examples ---------------------------

bool criterion_oracle_examples() {
  const Vec a = rules::rule_update((Vec(3) << 0.6, 0.4, 0.0).finished(),
                                   (Vec(3) << 0.0, 0.0, 0.5).finished(),
                                   {0.8, 0.2});
  const Vec b = rules::rule_update((Vec(3) << 0.2, 0.8, 0.0).finished(),
                                   (Vec(3) << 0.0, 0.0, 1.0).finished(),
                                   {0.5, 0.5});
  const bool ok = std::abs(a[0] - 0.36) < 1e-12 &&
                  std::abs(a[1] - 0.36) < 1e-12 &&
                  std::abs(a[2] - 0.28) < 1e-12 &&
                  std::abs(b[0] - 0.1) < 1e-12 &&
                  std::abs(b[1] - 0.4) < 1e-12 && std::abs(b[2] - 0.5) < 1e-12;
  std::cout << "criterion 3 oracle examples: " << (ok ? "PASS" : "FAIL")
            << "\n";
  return ok;
}

// --- criterion 4: synthetic end-to-end ----------------------------------

bool criterion_synthetic() {
  const auto start = Clock::now();
  synth::SynthConfig cfg;
  cfg.n_dialogs = 250;  // 200 train + 50 held out
  cfg.seed = 2024;
  const auto ontology = synth::make_ontology(cfg);
  auto dialogs = synth::generate(cfg);
  const std::vector<Dialog> held(dialogs.end() - 50, dialogs.end());
  dialogs.resize(dialogs.size() - 50);

  const auto vocab = slu::build_vocab(dialogs, 5);
  train::TrainConfig base;
  base.epochs = 10;
  base.quiet = true;
  const int jobs = hardware_jobs();
  const auto members = train::train_groups(base, dialogs, vocab, ontology, 3,
                                           2, {1, 2, 3, 4, 5}, jobs);

  const auto runs = ensemble::ensemble_track_corpus(members, ontology, held,
                                                    jobs);
  const auto trained = ensemble::score(runs, held, ontology);

  tracker::TrackerParams baseline;  // zero weights: c_new = c_override = 0.5
  baseline.vocab = vocab;
  baseline.ontology_hash = ontology.hash();
  baseline.net = net::NetParams(baseline.input_size(ontology),
                                base.hidden_size);
  const auto base_runs =
      ensemble::ensemble_track_corpus({baseline}, ontology, held, jobs);
  const auto fixed = ensemble::score(base_runs, held, ontology);

  const double elapsed = seconds_since(start);
  const bool ok = trained.joint_accuracy >= 0.85 &&
                  trained.joint_accuracy >= fixed.joint_accuracy + 0.05 &&
                  elapsed < 600.0;
  std::cout << "criterion 4 synthetic end-to-end: " << (ok ? "PASS" : "FAIL")
            << " (ensemble acc " << trained.joint_accuracy
            << ", fixed-coefficient baseline " << fixed.joint_accuracy << ", "
            << elapsed << " s)\n";
  return ok;
}

// --- criteria 5 and 6: DSTC2 (conditional on the public dataset) --------

struct Dstc2Layout {
  fs::path data_root;
  fs::path train_list, dev_list, test_list;
  fs::path ontology;
};

std::optional<Dstc2Layout> find_dstc2() {
  std::vector<fs::path> roots;
  if (const char* env = std::getenv("DST_DATA_ROOT")) roots.push_back(env);
  roots.push_back("/root/data/dstc2");
  roots.push_back(fs::path("data") / "dstc2");

  for (const auto& root : roots) {
    if (root.empty() || !fs::exists(root)) continue;
    for (const auto& config :
         {root, root / "config", root / "scripts" / "config"}) {
      Dstc2Layout layout;
      layout.train_list = config / "dstc2_train.flist";
      layout.dev_list = config / "dstc2_dev.flist";
      layout.test_list = config / "dstc2_test.flist";
      layout.ontology = config / "ontology_dstc2.json";
      if (!fs::exists(layout.train_list) || !fs::exists(layout.dev_list) ||
          !fs::exists(layout.test_list) || !fs::exists(layout.ontology))
        continue;
      layout.data_root = fs::exists(root / "data") ? root / "data" : root;
      return layout;
    }
  }
  return std::nullopt;
}

bool criterion_corpus_counts(const std::optional<Dstc2Layout>& layout) {
  if (!layout) {
    std::cout << "criterion 6 corpus counts: SKIPPED (DSTC2 dataset not "
                 "found; set DST_DATA_ROOT)\n";
    return true;
  }
  io::LoadStats train_stats, dev_stats, test_stats;
  io::load_dstc2(layout->data_root, layout->train_list, &train_stats);
  io::load_dstc2(layout->data_root, layout->dev_list, &dev_stats);
  io::load_dstc2(layout->data_root, layout->test_list, &test_stats);
  const bool ok = train_stats.dialogs == 1612 && dev_stats.dialogs == 506 &&
                  test_stats.dialogs == 1117;
  std::cout << "criterion 6 corpus counts: " << (ok ? "PASS" : "FAIL")
            << " (train " << train_stats.dialogs << ", dev "
            << dev_stats.dialogs << ", test " << test_stats.dialogs << ")\n";
  return ok;
}

bool criterion_dstc2(const std::optional<Dstc2Layout>& layout) {
  if (!layout) {
    std::cout << "criterion 5 DSTC2 reproduction: SKIPPED (DSTC2 dataset "
                 "not found; set DST_DATA_ROOT)\n";
    return true;
  }
  const auto start = Clock::now();
  const auto ontology = io::load_ontology(layout->ontology);
  const auto train_set = io::load_dstc2(layout->data_root, layout->train_list);
  const auto test_set = io::load_dstc2(layout->data_root, layout->test_list);
  const auto vocab = slu::build_vocab(train_set, 5);

  train::TrainConfig base;
  base.quiet = true;
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 1; s <= 20; ++s) seeds.push_back(s);
  const int jobs = hardware_jobs();
  const auto members = train::train_groups(base, train_set, vocab, ontology,
                                           10, 10, seeds, jobs);
  const auto runs =
      ensemble::ensemble_track_corpus(members, ontology, test_set, jobs);
  const auto report = ensemble::score(runs, test_set, ontology,
                                      ensemble::ScheduleMode::AfterFirstInform);
  const bool ok = report.joint_accuracy >= 0.71 && report.joint_l2 <= 0.50;
  std::cout << "criterion 5 DSTC2 reproduction: " << (ok ? "PASS" : "FAIL")
            << " (test acc " << report.joint_accuracy << ", L2 "
            << report.joint_l2 << ", " << seconds_since(start) << " s)\n";
  return ok;
}

// --- criterion 7: determinism -------------------------------------------

bool same_bytes(const fs::path& a, const fs::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  return sa.str() == sb.str() && !sa.str().empty();
}

bool criterion_determinism() {
  const fs::path dir = fs::temp_directory_path() / "dst_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir / "run1");
  fs::create_directories(dir / "run2");

  const std::string cli = DST_CLI_PATH;
  const std::string synth_cmd =
      cli + " synth --out " + (dir / "corpus.jsonl").string() +
      " --ontology-out " + (dir / "ontology.json").string() +
      " --dialogs 40 --seed 3 >/dev/null";
  if (std::system(synth_cmd.c_str()) != 0) {
    std::cout << "criterion 7 determinism: FAIL (synth command failed)\n";
    return false;
  }
  bool trained = true;
  for (const char* run : {"run1", "run2"}) {
    const std::string train_cmd =
        cli + " train --ontology " + (dir / "ontology.json").string() +
        " --data " + (dir / "corpus.jsonl").string() +
        " --group A --count 1 --seed 11 --epochs 3 --min-count 1 --out-dir " +
        (dir / run).string() + " >/dev/null 2>/dev/null";
    trained = trained && std::system(train_cmd.c_str()) == 0;
  }
  const bool files_identical =
      trained && same_bytes(dir / "run1" / "tracker-A-11.json",
                            dir / "run2" / "tracker-A-11.json");

  // streaming vs batch tracking must be bit-identical
  synth::SynthConfig cfg;
  cfg.n_dialogs = 15;
  cfg.seed = 21;
  const auto ontology = synth::make_ontology(cfg);
  const auto dialogs = synth::generate(cfg);
  tracker::TrackerParams params;
  params.vocab = slu::build_vocab(dialogs, 1);
  params.ontology_hash = ontology.hash();
  params.net = net::init_params(13, params.input_size(ontology), 5);

  bool streaming_identical = true;
  tracker::StreamingTracker streaming(params, ontology);
  for (const auto& dialog : dialogs) {
    const auto batch = tracker::track_dialog(params, ontology, dialog);
    streaming.reset(dialog.id);
    for (std::size_t t = 0; t < dialog.turns.size(); ++t) {
      const auto step = streaming.step(dialog.turns[t]);
      for (std::size_t s = 0; s < step.beliefs.size(); ++s)
        streaming_identical =
            streaming_identical &&
            (step.beliefs[s].array() == batch.per_slot[s].beliefs[t].array())
                .all();
    }
  }

  fs::remove_all(dir);
  const bool ok = files_identical && streaming_identical;
  std::cout << "criterion 7 determinism: " << (ok ? "PASS" : "FAIL")
            << " (model files " << (files_identical ? "identical" : "differ")
            << ", streaming " << (streaming_identical ? "identical" : "differ")
            << ")\n";
  return ok;
}

}  // namespace

int main() {
  bool ok = true;
  ok &= criterion_gradients();
  ok &= criterion_conservation();
  ok &= criterion_oracle_examples();
  ok &= criterion_synthetic();
  const auto layout = find_dstc2();
  ok &= criterion_dstc2(layout);
  ok &= criterion_corpus_counts(layout);
  ok &= criterion_determinism();
  std::cout << (ok ? "ALL CRITERIA SATISFIED" : "FAILURES PRESENT") << "\n";
  return ok ? 0 : 1;
}

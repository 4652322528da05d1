#include "dst/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

namespace dst::ensemble {

tracker::TrackerRun ensemble_track(
    const std::vector<tracker::TrackerParams>& members,
    const Ontology& ontology, const Dialog& dialog,
    std::vector<tracker::TrackerRun>* member_runs) {
  if (members.empty())
    throw std::invalid_argument("ensemble_track: no members");

  tracker::TrackerRun avg;
  avg.dialog_id = dialog.id;
  avg.per_slot.resize(ontology.slots().size());

  for (std::size_t m = 0; m < members.size(); ++m) {
    auto run = tracker::track_dialog(members[m], ontology, dialog);
    for (std::size_t s = 0; s < run.per_slot.size(); ++s) {
      auto& acc = avg.per_slot[s].beliefs;
      const auto& beliefs = run.per_slot[s].beliefs;
      if (acc.empty()) {
        acc = beliefs;
      } else {
        for (std::size_t t = 0; t < beliefs.size(); ++t)
          acc[t] += beliefs[t];
      }
    }
    if (member_runs) member_runs->push_back(std::move(run));
  }
  const double inv = 1.0 / static_cast<double>(members.size());
  for (auto& traj : avg.per_slot)
    for (auto& h : traj.beliefs) h *= inv;
  return avg;
}

namespace {

// Slot mentioned by this turn, either in machine acts or in any SLU
// hypothesis after the affirm rewrite.
bool mentions_tracked_slot(const Turn& turn, const Ontology& ontology) {
  for (const auto& act : turn.machine_acts) {
    if (act.slot && ontology.slot_index(*act.slot) >= 0) return true;
  }
  for (const auto& hyp : turn.slu_nbest) {
    for (const auto& act : slu::rewrite_affirm(turn.machine_acts, hyp.acts)) {
      if (act.slot && ontology.slot_index(*act.slot) >= 0) return true;
    }
  }
  return false;
}

std::vector<int> truncated_support(const Vec& h, int gold, int top_k = 10) {
  std::vector<int> order(h.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return h[a] > h[b]; });
  std::vector<int> support;
  for (int i = 0; i < static_cast<int>(order.size()) && i < top_k; ++i)
    support.push_back(order[i]);
  if (std::find(support.begin(), support.end(), 0) == support.end())
    support.push_back(0);
  if (std::find(support.begin(), support.end(), gold) == support.end())
    support.push_back(gold);
  return support;
}

}  // namespace

ScoreReport score(const std::vector<tracker::TrackerRun>& runs,
                  const std::vector<Dialog>& dialogs,
                  const Ontology& ontology, ScheduleMode mode) {
  if (runs.size() != dialogs.size())
    throw std::invalid_argument("score: runs/labels misaligned");

  const auto& slots = ontology.slots();
  ScoreReport report;
  long joint_correct = 0;
  double l2_sum = 0.0;
  std::map<std::string, long> slot_correct;
  for (const auto& s : slots) slot_correct[s] = 0;

  for (std::size_t d = 0; d < runs.size(); ++d) {
    const auto& run = runs[d];
    const auto& dialog = dialogs[d];
    if (run.per_slot.size() != slots.size() ||
        (!run.per_slot.empty() &&
         run.per_slot[0].beliefs.size() != dialog.turns.size()))
      throw std::invalid_argument("score: run does not match dialog " +
                                  dialog.id);

    bool in_schedule = false;
    for (std::size_t t = 0; t < dialog.turns.size(); ++t) {
      const Turn& turn = dialog.turns[t];
      in_schedule = in_schedule || mentions_tracked_slot(turn, ontology);
      if (!turn.goal_labels) continue;
      if (mode == ScheduleMode::AfterFirstInform && !in_schedule) continue;

      ++report.scored_turns;
      bool all_match = true;
      std::vector<int> gold_idx(slots.size(), 0);
      std::vector<int> pred_idx(slots.size(), 0);
      for (std::size_t s = 0; s < slots.size(); ++s) {
        const Vec& h = run.per_slot[s].beliefs[t];
        int best = 0;
        for (int i = 1; i < h.size(); ++i)
          if (h[i] > h[best]) best = i;
        pred_idx[s] = best;
        auto it = turn.goal_labels->find(slots[s]);
        if (it != turn.goal_labels->end()) {
          const int v = ontology.value_index(slots[s], it->second);
          gold_idx[s] = v >= 0 ? v : 0;
        }
        if (best == gold_idx[s]) {
          ++slot_correct[slots[s]];
        } else {
          all_match = false;
        }
      }
      if (all_match) ++joint_correct;

      // Joint L2 over the cross product of truncated per-slot supports.
      std::vector<std::vector<int>> supports;
      for (std::size_t s = 0; s < slots.size(); ++s)
        supports.push_back(
            truncated_support(run.per_slot[s].beliefs[t], gold_idx[s]));
      double l2 = 0.0;
      std::vector<std::size_t> pos(slots.size(), 0);
      while (true) {
        double p = 1.0;
        bool is_gold = true;
        for (std::size_t s = 0; s < slots.size(); ++s) {
          const int idx = supports[s][pos[s]];
          p *= run.per_slot[s].beliefs[t][idx];
          is_gold = is_gold && idx == gold_idx[s];
        }
        const double target = is_gold ? 1.0 : 0.0;
        l2 += (p - target) * (p - target);
        std::size_t s = 0;
        for (; s < slots.size(); ++s) {
          if (++pos[s] < supports[s].size()) break;
          pos[s] = 0;
        }
        if (s == slots.size()) break;
      }
      l2_sum += l2;
    }
  }

  if (report.scored_turns == 0)
    throw std::runtime_error("score: no scored turns");
  report.joint_accuracy =
      static_cast<double>(joint_correct) / report.scored_turns;
  report.joint_l2 = l2_sum / report.scored_turns;
  for (const auto& s : slots)
    report.slot_accuracy[s] =
        static_cast<double>(slot_correct[s]) / report.scored_turns;
  return report;
}

std::vector<tracker::TrackerRun> ensemble_track_corpus(
    const std::vector<tracker::TrackerParams>& members,
    const Ontology& ontology, const std::vector<Dialog>& dialogs, int jobs) {
  std::vector<tracker::TrackerRun> runs(dialogs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < dialogs.size();
         i = next.fetch_add(1)) {
      try {
        runs[i] = ensemble_track(members, ontology, dialogs[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  const int n_threads =
      std::max(1, std::min<int>(jobs, static_cast<int>(dialogs.size())));
  std::vector<std::thread> threads;
  for (int i = 0; i < n_threads; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
  return runs;
}

EnsembleSpec select_ensemble(const std::vector<tracker::TrackerParams>& pool,
                             int k, int trials,
                             const std::vector<Dialog>& dev,
                             const Ontology& ontology, std::uint64_t seed,
                             ScheduleMode mode, int jobs) {
  if (k < 1 || static_cast<int>(pool.size()) < k)
    throw std::invalid_argument("select_ensemble: pool smaller than k");
  if (trials < 1)
    throw std::invalid_argument("select_ensemble: trials must be >= 1");

  std::mt19937_64 rng(seed);
  std::vector<int> indices(pool.size());
  std::iota(indices.begin(), indices.end(), 0);

  EnsembleSpec best;
  double best_accuracy = -1.0;
  for (int trial = 0; trial < trials; ++trial) {
    std::shuffle(indices.begin(), indices.end(), rng);
    std::vector<int> subset(indices.begin(), indices.begin() + k);
    std::vector<tracker::TrackerParams> members;
    members.reserve(k);
    for (int idx : subset) members.push_back(pool[idx]);
    const auto runs = ensemble_track_corpus(members, ontology, dev, jobs);
    const auto report = score(runs, dev, ontology, mode);
    if (report.joint_accuracy > best_accuracy) {
      best_accuracy = report.joint_accuracy;
      best.member_indices = std::move(subset);
    }
  }
  return best;
}

}  // namespace dst::ensemble

#include "dst/io.hpp"

#include "dst/synth.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <random>
#include <sstream>

using namespace dst;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("dst_io_test_" + name);
}

// Random but structurally valid dialog for round-trip property tests.
Dialog random_dialog(std::mt19937_64& rng, int id) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::vector<ActType> types{ActType::Inform, ActType::Request,
                                   ActType::Affirm, ActType::Negate,
                                   ActType::ExplConf, ActType::Other};
  Dialog dialog;
  dialog.id = "rand-" + std::to_string(id);
  const int n_turns = 1 + static_cast<int>(rng() % 5);
  for (int t = 0; t < n_turns; ++t) {
    Turn turn;
    const int n_macts = static_cast<int>(rng() % 3);
    for (int a = 0; a < n_macts; ++a) {
      const ActType type = types[rng() % types.size()];
      if (type == ActType::Inform || type == ActType::ExplConf) {
        turn.machine_acts.push_back(
            make_act(type, "slot" + std::to_string(rng() % 3),
                     "v" + std::to_string(rng() % 4)));
      } else {
        turn.machine_acts.push_back(make_act(type));
      }
    }
    const int n_hyps = static_cast<int>(rng() % 3);
    double budget = 1.0;
    for (int h = 0; h < n_hyps; ++h) {
      SluHypothesis hyp;
      hyp.score = unit(rng) * budget;
      budget -= hyp.score;
      if (rng() % 2) {
        hyp.acts.push_back(make_act(ActType::Inform,
                                    "slot" + std::to_string(rng() % 3),
                                    "v" + std::to_string(rng() % 4)));
      }
      turn.slu_nbest.push_back(std::move(hyp));
    }
    if (rng() % 2) {
      std::map<std::string, std::string> labels;
      labels["slot" + std::to_string(rng() % 3)] =
          "v" + std::to_string(rng() % 4);
      turn.goal_labels = std::move(labels);
    }
    dialog.turns.push_back(std::move(turn));
  }
  return dialog;
}

bool dialogs_equal(const Dialog& a, const Dialog& b) {
  if (a.id != b.id || a.turns.size() != b.turns.size()) return false;
  for (std::size_t t = 0; t < a.turns.size(); ++t) {
    const auto& ta = a.turns[t];
    const auto& tb = b.turns[t];
    if (!(ta.machine_acts == tb.machine_acts)) return false;
    if (ta.slu_nbest.size() != tb.slu_nbest.size()) return false;
    for (std::size_t h = 0; h < ta.slu_nbest.size(); ++h) {
      if (ta.slu_nbest[h].score != tb.slu_nbest[h].score) return false;
      if (!(ta.slu_nbest[h].acts == tb.slu_nbest[h].acts)) return false;
    }
    if (ta.goal_labels != tb.goal_labels) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("canonical dialog format round trips losslessly") {
  std::mt19937_64 rng(123);
  std::vector<Dialog> dialogs;
  for (int d = 0; d < 50; ++d) dialogs.push_back(random_dialog(rng, d));

  const auto path = temp_file("dialogs.jsonl");
  io::save_dialogs(dialogs, path);
  const auto loaded = io::load_dialogs(path);
  REQUIRE(loaded.size() == dialogs.size());
  for (std::size_t d = 0; d < dialogs.size(); ++d)
    CHECK(dialogs_equal(dialogs[d], loaded[d]));
  fs::remove(path);
}

TEST_CASE("loader enforces core invariants") {
  const auto path = temp_file("bad.jsonl");
  {
    std::ofstream out(path);
    out << R"({"format":"dst-dialog-1","id":"x","turns":[]})" << "\n";
  }
  CHECK_THROWS(io::load_dialogs(path));
  {
    std::ofstream out(path);
    out << R"({"format":"dst-dialog-1","id":"x","turns":[{"slu_nbest":[{"score":1.7,"acts":[]}]}]})"
        << "\n";
  }
  CHECK_THROWS(io::load_dialogs(path));
  fs::remove(path);
}

TEST_CASE("ontology file round trip and stable ordering") {
  const auto path = temp_file("ontology.json");
  {
    std::ofstream out(path);
    out << R"({"slots":["food","area"],)"
        << R"("values":{"food":["Chinese","Indian"],"area":["north"]}})";
  }
  const auto ontology = io::load_ontology(path);
  CHECK(ontology.slots() == std::vector<std::string>{"food", "area"});
  CHECK(ontology.value_index("food", "chinese") == 1);
  CHECK(ontology.value_index("food", "indian") == 2);
  const auto again = io::load_ontology(path);
  CHECK(ontology.hash() == again.hash());
  fs::remove(path);
}

TEST_CASE("DSTC2 ontology schema keeps only the tracked slots") {
  const auto path = temp_file("dstc2_ontology.json");
  {
    std::ofstream out(path);
    out << R"({"informable":{"food":["thai"],"pricerange":["cheap"],)"
        << R"("area":["north"],"name":["golden house"]}})";
  }
  const auto ontology = io::load_ontology(path);
  CHECK(ontology.slots() ==
        std::vector<std::string>{"food", "pricerange", "area"});
  fs::remove(path);
}

TEST_CASE("model files round trip bitwise") {
  tracker::TrackerParams params;
  params.vocab.tokens = {"request", "food", "inform"};
  params.ontology_hash = 0xdeadbeefull;
  params.net = net::init_params(7, 12, 5);
  params.fm_mask = {1, 0, 1};

  train::TrainConfig config;
  config.group = train::TrainConfig::Group::Adam;
  config.seed = 7;
  config.mask_rate = 0.3;

  const auto path = temp_file("model.json");
  io::save_model(params, config, path);
  const auto loaded = io::load_model(path);
  CHECK(loaded.params.net == params.net);  // bitwise weight equality
  CHECK(loaded.params.vocab.tokens == params.vocab.tokens);
  CHECK(loaded.params.fm_mask == params.fm_mask);
  CHECK(loaded.params.ontology_hash == params.ontology_hash);
  CHECK(loaded.config.group == train::TrainConfig::Group::Adam);
  CHECK(loaded.config.mask_rate == 0.3);

  // save(load(save(p))) is stable
  const auto path2 = temp_file("model2.json");
  io::save_model(loaded.params, loaded.config, path2);
  std::ifstream a(path), b(path2);
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
  fs::remove(path);
  fs::remove(path2);
}

TEST_CASE("truncated and tampered model files are refused") {
  tracker::TrackerParams params;
  params.vocab.tokens = {"a"};
  params.net = net::init_params(1, 10, 5);
  const auto path = temp_file("model3.json");
  io::save_model(params, {}, path);

  std::ifstream in(path);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  in.close();
  {
    std::ofstream out(path);
    out << content.substr(0, content.size() / 2);  // truncate
  }
  CHECK_THROWS(io::load_model(path));

  {
    // flip one weight without updating the checksum
    auto j = nlohmann::json::parse(content);
    j["weights"][3] = j["weights"][3].get<double>() + 1.0;
    std::ofstream out(path);
    out << j.dump();
  }
  CHECK_THROWS_WITH_AS(io::load_model(path),
                       doctest::Contains("checksum"), std::runtime_error);
  fs::remove(path);
}

TEST_CASE("ontology hash guard refuses mismatched models") {
  tracker::TrackerParams params;
  params.vocab.tokens = {"a"};
  params.ontology_hash = 1111;
  params.net = net::init_params(1, 10, 5);
  const auto path = temp_file("model4.json");
  io::save_model(params, {}, path);
  CHECK_NOTHROW(io::load_model(path, 1111));
  CHECK_THROWS(io::load_model(path, 2222));
  fs::remove(path);
}

TEST_CASE("export: delta-None beliefs, argmax preservation, rounding sums") {
  synth::SynthConfig cfg;
  cfg.n_dialogs = 5;
  cfg.seed = 77;
  const auto ontology = synth::make_ontology(cfg);
  const auto dialogs = synth::generate(cfg);

  tracker::TrackerParams params;
  params.vocab = slu::build_vocab(dialogs, 1);
  params.ontology_hash = ontology.hash();
  params.net = net::init_params(3, params.input_size(ontology), 5);

  std::vector<tracker::TrackerRun> runs;
  for (const auto& d : dialogs)
    runs.push_back(tracker::track_dialog(params, ontology, d));

  std::ostringstream out;
  io::export_tracker_output(runs, ontology, out);

  std::istringstream in(out.str());
  std::string line;
  std::size_t d = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j["id"] == runs[d].dialog_id);
    for (std::size_t t = 0; t < j["turns"].size(); ++t) {
      for (std::size_t s = 0; s < ontology.slots().size(); ++s) {
        const auto& slot = ontology.slots()[s];
        const auto& entries = j["turns"][t][slot];
        double sum = 0.0;
        double prev = 2.0;
        for (const auto& e : entries) {
          const double p = e[1].get<double>();
          CHECK(p <= prev);  // sorted descending
          prev = p;
          sum += p;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
        // exported argmax matches the run's argmax
        const Vec& h = runs[d].per_slot[s].beliefs[t];
        int best = 0;
        for (int i = 1; i < h.size(); ++i)
          if (h[i] > h[best]) best = i;
        const std::string best_name =
            best == 0 ? "None" : ontology.values(slot)[best - 1];
        CHECK(entries[0][0].get<std::string>() == best_name);
      }
    }
    ++d;
  }
  CHECK(d == runs.size());
}

TEST_CASE("turn-0 export of an untrained silent dialog is pure None") {
  const Ontology ontology({"food"}, {{"food", {"a", "b"}}});
  tracker::TrackerRun run;
  run.dialog_id = "d";
  tracker::SlotTrajectory traj;
  traj.beliefs.push_back((Vec(3) << 1.0, 0.0, 0.0).finished());
  run.per_slot.push_back(traj);

  std::ostringstream out;
  io::export_tracker_output({run}, ontology, out);
  const auto j = nlohmann::json::parse(out.str());
  CHECK(j["turns"][0]["food"][0][0] == "None");
  CHECK(j["turns"][0]["food"][0][1] == 1.0);
}

TEST_CASE("DSTC2 session parsing from a constructed fixture") {
  const auto root = fs::temp_directory_path() / "dst_dstc2_fixture";
  const auto session = root / "S0" / "call1";
  fs::create_directories(session);
  {
    std::ofstream log(session / "log.json");
    log << R"({"session-id":"call1","turns":[
      {"output":{"dialog-acts":[{"act":"request","slots":[["slot","food"]]}]},
       "input":{"live":{"slu-hyps":[
         {"slu-hyp":[{"act":"inform","slots":[["food","chinese"]]}],"score":0.8},
         {"slu-hyp":[],"score":0.2}]}}},
      {"output":{"dialog-acts":[{"act":"expl-conf","slots":[["food","chinese"]]}]},
       "input":{"live":{"slu-hyps":[
         {"slu-hyp":[{"act":"affirm","slots":[]}],"score":0.9}]}}}
    ]})";
  }
  {
    std::ofstream label(session / "label.json");
    label << R"({"turns":[
      {"goal-labels":{"food":"chinese"}},
      {"goal-labels":{}}
    ]})";
  }
  {
    std::ofstream list(root / "list.txt");
    list << "S0/call1\n";
    list << "S0/missing\n";  // parse failure, skipped with a count
  }

  io::LoadStats stats;
  const auto dialogs = io::load_dstc2(root, root / "list.txt", &stats);
  REQUIRE(dialogs.size() == 1);
  CHECK(stats.skipped == 1);
  const auto& d = dialogs[0];
  CHECK(d.id == "call1");
  REQUIRE(d.turns.size() == 2);
  CHECK(d.turns[0].machine_acts[0].type == ActType::Request);
  CHECK(*d.turns[0].machine_acts[0].slot == "food");
  CHECK(d.turns[0].slu_nbest[0].score == 0.8);
  CHECK(*d.turns[0].slu_nbest[0].acts[0].value == "chinese");
  // labels forward-fill: turn 1 keeps the turn-0 goal
  CHECK(d.turns[1].goal_labels->at("food") == "chinese");
  CHECK(d.turns[1].slu_nbest[0].acts[0].type == ActType::Affirm);
  fs::remove_all(root);
}

TEST_CASE("missing list file is a hard error; empty list is an empty corpus") {
  CHECK_THROWS(io::load_dstc2("/nonexistent", "/nonexistent/list.txt"));
  const auto path = temp_file("empty_list.txt");
  { std::ofstream out(path); }
  io::LoadStats stats;
  const auto dialogs = io::load_dstc2("/tmp", path, &stats);
  CHECK(dialogs.empty());
  CHECK(stats.skipped == 0);
  fs::remove(path);
}

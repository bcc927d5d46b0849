#include <doctest.h>

#include <filesystem>

#include "gen.hpp"
#include "oral/error.hpp"
#include "oral/slu.hpp"
#include "oral/toy.hpp"
#include "oral/util.hpp"

using namespace oral;

namespace {

SluSample sample(const std::string& words, const std::string& tags, const std::string& id = "") {
  SluSample s;
  s.utterance = Utterance::from_words(split_ws(words), "", id);
  s.bio = split_ws(tags);
  return s;
}

const std::vector<std::string> kConcepts{"c1", "c2", "c3"};

std::vector<std::string> random_tags(gen::Rng& r, std::size_t n, bool stray) {
  std::vector<std::string> t;
  for (std::size_t i = 0; i < n; ++i) {
    const int k = r.uniform(0, 2);
    if (k == 0) {
      t.push_back("O");
    } else {
      const auto& c = r.pick(kConcepts);
      const bool inside = k == 2 && (stray || (!t.empty() && t.back() != "O" && t.back().substr(2) == c));
      t.push_back((inside ? "I-" : "B-") + c);
    }
  }
  return t;
}

std::vector<std::string> words_for(std::size_t n) {
  std::vector<std::string> w;
  for (std::size_t i = 0; i < n; ++i) w.push_back("w" + std::to_string(i + 1));
  return w;
}

}  // namespace

TEST_CASE("hotel request spans") {
  const std::vector<std::string> words = split_ws("i would like to book one double room in paris");
  const std::vector<std::string> tags = split_ws(
      "B-cmd-task I-cmd-task I-cmd-task I-cmd-task I-cmd-task B-nb-room B-room-type I-room-type O B-loc-city");
  auto spans = bio_decode(tags, words);
  REQUIRE(spans.size() == 4);
  CHECK(spans[0].concept_name == "cmd-task");
  CHECK(spans[0].surface == "i would like to book");
  CHECK(spans[0].end == 5);
  CHECK(spans[1].concept_name == "nb-room");
  CHECK(spans[1].surface == "one");
  CHECK(spans[2].surface == "double room");
  CHECK(spans[2].value == "double room");
  CHECK(spans[2].start == 7);
  CHECK(spans[2].end == 8);
  CHECK(spans[3].surface == "paris");
  CHECK(spans[3].start == 10);
  CHECK(extract_values(spans, ValueRules{})[3].value == "paris");
  CHECK(bio_encode(spans, words.size()) == tags);
  CHECK(concept_items(spans, SluMetric::cer) ==
        std::vector<std::string>{"cmd-task", "nb-room", "room-type", "loc-city"});
}

TEST_CASE("stray inside tags open a span") {
  const std::vector<std::string> tags{"I-a", "I-a", "O", "I-b", "B-b", "I-a"};
  std::size_t repairs = 0;
  auto spans = bio_decode(tags, words_for(6), &repairs);
  CHECK(repairs == 3);
  REQUIRE(spans.size() == 4);
  CHECK(spans[0].start == 1);
  CHECK(spans[0].end == 2);
  CHECK(repair_bio(tags) == std::vector<std::string>{"B-a", "I-a", "O", "B-b", "B-b", "B-a"});
  CHECK_FALSE(is_valid_bio(tags));
  CHECK(is_valid_bio(repair_bio(tags)));
}

TEST_CASE("BIO round trips on random sequences") {
  gen::Rng r(14);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = static_cast<std::size_t>(r.uniform(0, 12));
    const auto w = words_for(n);
    auto valid = random_tags(r, n, false);
    REQUIRE(is_valid_bio(valid));
    auto spans = bio_decode(valid, w);
    CHECK(bio_encode(spans, n) == valid);
    for (std::size_t i = 1; i < spans.size(); ++i) CHECK(spans[i].start > spans[i - 1].end);

    auto any = random_tags(r, n, true);
    auto fixed = repair_bio(any);
    CHECK(is_valid_bio(fixed));
    CHECK(repair_bio(fixed) == fixed);
    CHECK(bio_decode(any, w) == bio_decode(fixed, w));
    CHECK(bio_encode(bio_decode(any, w), n) == fixed);
  }
}

TEST_CASE("bio_encode rejects bad spans") {
  std::vector<ConceptSpan> overlap{{"a", 1, 2, "", ""}, {"b", 2, 3, "", ""}};
  CHECK_THROWS_AS(bio_encode(overlap, 4), ValidationError);
  std::vector<ConceptSpan> out_of_range{{"a", 3, 5, "", ""}};
  CHECK_THROWS_AS(bio_encode(out_of_range, 4), ValidationError);
  std::vector<ConceptSpan> unordered{{"a", 3, 3, "", ""}, {"b", 1, 1, "", ""}};
  CHECK_THROWS_AS(bio_encode(unordered, 4), ValidationError);
}

TEST_CASE("value rules") {
  auto rules = ValueRules::from_json(toy_value_rules());
  CHECK(rules.apply("nb-room", "deux") == "2");
  CHECK(rules.apply("nb-room", "deux chambres") == "deux chambres");
  CHECK(rules.apply("time-date", "samedi soir") == "samedi");
  CHECK(rules.apply("cmd-task", "je veux réserver") == "reservation");
  CHECK(rules.apply("unknown", "tel quel") == "tel quel");
  nlohmann::json ordered;
  ordered["x"] = nlohmann::json::array({nlohmann::json::array({"a", "first"}), nlohmann::json::array({"a+", "second"})});
  CHECK(ValueRules::from_json(ordered).apply("x", "aa") == "first");
  nlohmann::json bad;
  bad["x"] = nlohmann::json::array({nlohmann::json::array({"(", "v"})});
  CHECK_THROWS_AS(ValueRules::from_json(bad), ValidationError);
}

TEST_CASE("concept error rate: one missed concept in four") {
  auto ref = sample("i would like to book one double room in paris",
                    "B-cmd-task I-cmd-task I-cmd-task I-cmd-task I-cmd-task B-nb-room B-room-type I-room-type O B-loc-city");
  auto hyp = sample("i would like to book one double room in paris",
                    "B-cmd-task I-cmd-task I-cmd-task I-cmd-task I-cmd-task O B-room-type I-room-type O B-loc-city");
  std::vector<SluSample> g{ref}, h{hyp};
  auto s = score_slu(g, h, ValueRules{}, SluMetric::cer);
  CHECK(s.rate() == doctest::Approx(0.25));
  CHECK(s.counts.deletions == 1);
  CHECK(s.to_json()["rate"] == doctest::Approx(25.0));
}

TEST_CASE("value errors count in CVER only") {
  auto ref = sample("une chambre double", "B-nb-room O B-room-type");
  auto hyp = sample("une chambre double", "B-nb-room I-nb-room B-room-type");
  std::vector<SluSample> g{ref}, h{hyp};
  auto rules = ValueRules::from_json(toy_value_rules());
  CHECK(score_slu(g, h, rules, SluMetric::cer).rate() == 0.0);
  // "une chambre" no longer maps to 1
  CHECK(score_slu(g, h, rules, SluMetric::cver).rate() == doctest::Approx(0.5));
}

TEST_CASE("CVER is never below CER") {
  gen::Rng r(8);
  auto rules = ValueRules::from_json(toy_value_rules());
  auto base = toy_slu_samples(120, 4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<SluSample> hyp = base;
    for (auto& s : hyp) {
      for (auto& t : s.bio)
        if (r.coin(0.15)) t = r.coin() ? "O" : "B-" + r.pick(toy_slu_concepts());
      s.bio = repair_bio(s.bio);
    }
    auto cer = score_slu(base, hyp, rules, SluMetric::cer);
    auto cver = score_slu(base, hyp, rules, SluMetric::cver);
    CHECK(cver.rate() >= cer.rate());
    CHECK(cer.ci.has_value());
  }
}

TEST_CASE("split-level intervals use contiguous folds") {
  auto g = toy_slu_samples(100, 2);
  auto h = g;
  // damage only the first tenth
  for (std::size_t i = 0; i < 10; ++i)
    for (auto& t : h[i].bio) t = "O";
  auto s = score_slu(g, h, ValueRules{}, SluMetric::cer, CiUnit::split, 10);
  REQUIRE(s.unit_rates.size() == 10);
  CHECK(s.unit_rates[0] == doctest::Approx(100.0));
  for (std::size_t k = 1; k < 10; ++k) CHECK(s.unit_rates[k] == 0.0);
  REQUIRE(s.ci);
  CHECK(s.ci->n == 10);
  CHECK(s.ci->mean == doctest::Approx(10.0));
  CHECK_FALSE(score_slu(g, h, ValueRules{}, SluMetric::cer, CiUnit::split, 1).ci.has_value());
  CHECK_THROWS_AS(score_slu(g, h, ValueRules{}, SluMetric::cer, CiUnit::split, 0), ValidationError);
  std::vector<SluSample> shorter(g.begin(), g.begin() + 3);
  CHECK_THROWS_AS(score_slu(g, shorter, ValueRules{}, SluMetric::cer), ValidationError);
}

TEST_CASE("tagger learns the toy task and round trips") {
  auto all = toy_slu_samples(300, 9);
  std::vector<SluSample> train(all.begin(), all.begin() + 240), dev(all.begin() + 240, all.begin() + 270),
      test(all.begin() + 270, all.end());
  std::vector<Utterance> utts;
  for (const auto& s : train) utts.push_back(s.utterance);
  auto lk = LookupProvider::build(utts, 24, 3);
  MlpSpec mlp;
  mlp.hidden_dims = {64};
  mlp.input_dropout = 0.2;
  mlp.hidden_dropout = 0.2;
  SluTagger tagger(bio_inventory(toy_slu_concepts()), -2, 2, mlp, lk.describe(), lk, 3);
  SluRegime reg;
  reg.epochs = 15;
  reg.adam.lr = 3e-3;
  auto res = train_slu_tagger(tagger, train, dev, reg);
  CHECK(res.log.size() == 15);
  std::vector<Utterance> tu;
  for (const auto& s : test) tu.push_back(s.utterance);
  auto pred = slu_decode(tagger, tu);
  auto score = score_slu(test, pred, ValueRules{}, SluMetric::cer);
  MESSAGE("toy SLU test CER " << 100.0 * score.rate());
  CHECK(score.rate() <= 0.05);
  for (const auto& p : pred) CHECK(is_valid_bio(p.bio));

  const auto path = std::filesystem::temp_directory_path() / "oral_unit" / "slu.json";
  std::filesystem::create_directories(path.parent_path());
  tagger.save(path);
  auto back = SluTagger::load(path);
  auto again = slu_decode(back, tu);
  for (std::size_t i = 0; i < pred.size(); ++i) CHECK(again[i].bio == pred[i].bio);
}

#include "oral/toy.hpp"

#include <random>
#include <string>

namespace oral {

namespace {

const std::vector<std::string> kDets{"le", "la", "un", "une", "ce", "mon"};
const std::vector<std::string> kNouns{"chat",   "chien", "voisin", "enfant", "maire", "train",
                                      "livre",  "homme", "femme",  "oiseau", "ami",   "client",
                                      "facteur", "cheval"};
const std::vector<std::string> kVerbs{"voit",  "mange", "aime",   "attend", "appelle",
                                      "suit",  "cherche", "regarde", "dort", "entend"};

template <class T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

DepTree make_tree(std::vector<std::string> words, std::vector<int> heads,
                  std::vector<std::string> labels, std::vector<std::string> pos, std::string id) {
  DepTree t;
  t.utterance = Utterance::from_words(words, "toy", std::move(id));
  t.heads = std::move(heads);
  t.labels = std::move(labels);
  t.pos = std::move(pos);
  t.extra.assign(t.heads.size(), {"_", "_", "_", "_", "_"});
  return t;
}

}  // namespace

std::vector<DepTree> toy_grammar_trees(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<DepTree> out;
  for (std::size_t i = 0; i < n; ++i) {
    const bool object = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
    std::vector<std::string> w{pick(kDets, rng), pick(kNouns, rng), pick(kVerbs, rng)};
    std::vector<int> h{2, 3, 0};
    std::vector<std::string> l{"det", "nsubj", "root"};
    std::vector<std::string> p{"DET", "NOUN", "VERB"};
    if (object) {
      w.push_back(pick(kDets, rng));
      w.push_back(pick(kNouns, rng));
      h.insert(h.end(), {5, 3});
      l.insert(l.end(), {"det", "obj"});
      p.insert(p.end(), {"DET", "NOUN"});
    }
    auto t = make_tree(w, h, l, p, "toy-" + std::to_string(i + 1));
    t.utterance.recording_id = "toyrec-" + std::to_string(i / 10 + 1);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<DiarizationTurn> toy_turns(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto trees = toy_grammar_trees(n, seed);
  std::vector<DiarizationTurn> out;
  double clock = 0.0;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    const auto& words = trees[i].utterance.tokens;
    std::string text;
    for (std::size_t k = 0; k < words.size(); ++k) {
      std::string w = words[k].surface;
      if (k == 0) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
      text += (k ? " " : "") + w;
      if (k == 1 && std::uniform_int_distribution<int>(0, 3)(rng) == 0) text += ",";
    }
    text += std::uniform_int_distribution<int>(0, 1)(rng) ? "." : " !";
    const std::string rec = "rec" + std::to_string(i / 20 + 1);
    out.push_back({rec, "spk" + std::to_string(i % 2 + 1), clock, clock + 2.0, text});
    clock += 2.5;
    if (i % 17 == 5) out.push_back({rec, "spk1", clock, clock + 0.5, "... ?"});
    if (i % 23 == 7) out.push_back({rec, "spk2", clock, clock + 2.0, text});
  }
  return out;
}

std::vector<std::string> toy_slu_concepts() {
  return {"cmd-task", "nb-room", "room-type", "loc-city", "time-date"};
}

std::vector<SluSample> toy_slu_samples(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::vector<std::vector<std::string>> tasks{
      {"je", "voudrais", "réserver"}, {"je", "veux", "réserver"}, {"réserver"},
      {"je", "voudrais", "annuler"},  {"annuler"}};
  const std::vector<std::string> numbers{"une", "deux", "trois", "quatre"};
  const std::vector<std::vector<std::string>> types{
      {"chambre", "double"}, {"chambre", "simple"}, {"suite"}, {"chambres", "doubles"}};
  const std::vector<std::string> cities{"paris", "lyon", "nice", "brest", "lille", "nancy"};
  const std::vector<std::vector<std::string>> dates{
      {"demain"}, {"ce", "soir"}, {"lundi"}, {"le", "premier", "mai"}, {"samedi", "prochain"}};
  const std::vector<std::string> fillers{"euh", "alors", "bon", "oui"};

  std::vector<SluSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> words, bio;
    auto add = [&](const std::vector<std::string>& ws, const std::string& c) {
      for (std::size_t k = 0; k < ws.size(); ++k) {
        words.push_back(ws[k]);
        bio.push_back(c.empty() ? "O" : (k == 0 ? "B-" : "I-") + c);
      }
    };
    auto coin = [&](int k) { return std::uniform_int_distribution<int>(0, k - 1)(rng) == 0; };
    if (coin(3)) add({pick(fillers, rng)}, "");
    add(pick(tasks, rng), "cmd-task");
    if (!coin(4)) add({pick(numbers, rng)}, "nb-room");
    add(pick(types, rng), "room-type");
    if (!coin(3)) {
      add({"à"}, "");
      add({pick(cities, rng)}, "loc-city");
    }
    if (coin(2)) {
      if (coin(2)) add({"pour"}, "");
      add(pick(dates, rng), "time-date");
    }
    if (coin(4)) add({"s'il", "vous", "plaît"}, "");
    SluSample s;
    s.utterance = Utterance::from_words(words, "slu", "slu-" + std::to_string(i + 1));
    s.bio = std::move(bio);
    out.push_back(std::move(s));
  }
  return out;
}

nlohmann::json toy_value_rules() {
  return nlohmann::json::parse(R"js({
  "cmd-task": [["réserver", "reservation"], ["annuler", "cancellation"]],
  "nb-room": [["^une$", "1"], ["^deux$", "2"], ["^trois$", "3"], ["^quatre$", "4"]],
  "room-type": [["double", "double"], ["simple", "single"], ["suite", "suite"]],
  "time-date": [["^(lundi|samedi)", "$1"], ["premier mai", "05-01"]]
})js");
}

std::vector<LabeledDocument> toy_documents(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::vector<std::pair<std::string, std::vector<std::string>>> topics{
      {"meteo", {"pluie", "soleil", "nuages", "orage", "température", "degrés", "vent", "neige",
                 "chaleur", "prévisions", "averses", "brouillard"}},
      {"politique", {"ministre", "gouvernement", "élection", "députés", "loi", "vote", "président",
                     "réforme", "assemblée", "parti", "sénat", "budget"}},
      {"sport", {"match", "équipe", "but", "joueur", "championnat", "victoire", "entraîneur",
                 "stade", "finale", "coupe", "supporters", "score"}}};
  const std::vector<std::string> common{"le", "la", "de", "et", "aujourd'hui", "on", "a",
                                        "une",  "dans", "pour", "ce", "qui", "très", "bien"};
  std::vector<LabeledDocument> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& [cat, vocab] = topics[i % topics.size()];
    const int len = std::uniform_int_distribution<int>(12, 30)(rng);
    std::string text;
    for (int k = 0; k < len; ++k) {
      // roughly one word in three is topical, with some cross-topic noise
      const int r = std::uniform_int_distribution<int>(0, 9)(rng);
      std::string w;
      if (r < 3)
        w = pick(vocab, rng);
      else if (r == 3)
        w = pick(topics[std::uniform_int_distribution<std::size_t>(0, 2)(rng)].second, rng);
      else
        w = pick(common, rng);
      text += (k ? " " : "") + w;
    }
    out.push_back({"doc-" + std::to_string(i + 1), text, cat, "toy-tv", std::nullopt});
  }
  return out;
}

}  // namespace oral

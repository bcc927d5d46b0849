#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "oral/bpe.hpp"
#include "oral/classif.hpp"
#include "oral/corpus.hpp"
#include "oral/embed.hpp"
#include "oral/metrics.hpp"
#include "oral/normalize.hpp"
#include "oral/parser.hpp"
#include "oral/slu.hpp"
#include "oral/transition.hpp"
#include "oral/util.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kSchemaVersion = 1;

struct Globals {
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string report;
};

std::uint64_t default_seed() {
  if (const char* s = std::getenv("ORAL_SEED")) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw oral::ValidationError(std::string("ORAL_SEED is not an integer: ") + s);
    }
  }
  return 1;
}

ordered_json report_header(const std::string& command, const Globals& g) {
  return {{"schema_version", kSchemaVersion}, {"command", command}, {"seed", g.seed}};
}

void write_report(const Globals& g, const ordered_json& j) {
  if (g.report.empty()) return;
  auto out = oral::open_out(g.report);
  out << j.dump(2) << '\n';
}

std::string fmt(double v, int decimals = 2) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(decimals);
  os << v;
  return os.str();
}

std::vector<std::string> read_lines(const fs::path& p) {
  auto in = oral::open_in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

bool has_ext(const fs::path& p, const char* ext) { return p.extension() == ext; }

// Utterances from CoNLL-U forms, SLU TSV tokens, or utterance JSON lines.
std::vector<oral::Utterance> read_any_utterances(const fs::path& p) {
  std::vector<oral::Utterance> out;
  if (has_ext(p, ".conllu")) {
    for (auto& t : oral::read_conllu(p)) out.push_back(std::move(t.utterance));
  } else if (has_ext(p, ".tsv")) {
    for (auto& s : oral::read_slu_tsv(p)) out.push_back(std::move(s.utterance));
  } else {
    out = oral::read_utterances(p);
  }
  return out;
}

std::vector<std::string> utterance_texts(const fs::path& p) {
  if (has_ext(p, ".txt")) return read_lines(p);
  std::vector<std::string> out;
  for (const auto& u : read_any_utterances(p)) out.push_back(u.text());
  return out;
}

// ---------------------------------------------------------------------------
// embedding providers

struct ProviderArgs {
  std::string spec = "lookup";  // lookup | char-ngram | external:FILE
  std::size_t dim = oral::kDeskEmbeddingDim;
  std::string word_vectors;
  std::size_t min_count = 1;
};

void add_provider_flags(CLI::App* c, ProviderArgs& p, bool with_dim) {
  c->add_option("--provider", p.spec, "lookup | char-ngram | external:FILE")->capture_default_str();
  if (with_dim) {
    c->add_option("--dim", p.dim, "embedding dimension")->capture_default_str();
    c->add_option("--min-count", p.min_count, "lookup vocabulary threshold")->capture_default_str();
  }
  c->add_option("--word-vectors", p.word_vectors, "word vectors for the char-ngram provider");
}

std::unique_ptr<oral::EmbeddingProvider> make_fixed_provider(const ProviderArgs& p,
                                                             const oral::CharNgramConfig& cfg) {
  if (p.spec == "char-ngram") {
    auto cp = std::make_unique<oral::CharNgramProvider>(cfg);
    if (!p.word_vectors.empty()) cp->load_word_vectors(p.word_vectors);
    return cp;
  }
  if (p.spec.rfind("external:", 0) == 0)
    return std::make_unique<oral::ExternalProvider>(oral::ExternalProvider::load(p.spec.substr(9)));
  throw oral::ValidationError("unknown provider '" + p.spec + "'");
}

oral::CharNgramConfig char_config(std::size_t dim, std::uint64_t seed) {
  oral::CharNgramConfig cfg;
  cfg.dim = dim;
  cfg.seed = seed;
  return cfg;
}

oral::CharNgramConfig char_config(const nlohmann::json& desc) {
  oral::CharNgramConfig cfg;
  cfg.dim = desc.at("dim").get<std::size_t>();
  cfg.min_n = desc.at("min_n").get<std::size_t>();
  cfg.max_n = desc.at("max_n").get<std::size_t>();
  cfg.buckets = desc.at("buckets").get<std::size_t>();
  cfg.seed = desc.at("seed").get<std::uint64_t>();
  return cfg;
}

// Provider matching a checkpoint's description, for decoding.
std::unique_ptr<oral::EmbeddingProvider> provider_for(const nlohmann::json& desc,
                                                      const ProviderArgs& p) {
  const auto kind = desc.at("kind").get<std::string>();
  if (kind == "lookup") return nullptr;
  if (kind == "char_ngram") {
    if (desc.value("known_words", 0) > 0 && p.word_vectors.empty())
      throw oral::ValidationError("model was trained with word vectors; pass --word-vectors");
    ProviderArgs q = p;
    q.spec = "char-ngram";
    return make_fixed_provider(q, char_config(desc));
  }
  if (p.spec.rfind("external:", 0) != 0)
    throw oral::ValidationError("model uses external vectors; pass --provider external:FILE");
  return make_fixed_provider(p, {});
}

std::vector<std::size_t> parse_dims(const std::string& s) {
  std::vector<std::size_t> out;
  for (const auto& part : oral::split_on(s, ',')) {
    if (part.empty()) continue;
    try {
      out.push_back(std::stoul(part));
    } catch (const std::exception&) {
      throw oral::ValidationError("bad dimension list '" + s + "'");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// corpus pipeline

int run_normalize(const Globals& g, const std::string& input, const std::string& output) {
  const auto lines = read_lines(input);
  auto out = oral::open_out(output);
  std::size_t changed = 0, empty = 0;
  for (const auto& l : lines) {
    auto n = oral::normalize_text(l);
    changed += n != l;
    empty += n.empty();
    out << n << '\n';
  }
  auto j = report_header("normalize", g);
  j["lines"] = lines.size();
  j["changed"] = changed;
  j["empty"] = empty;
  write_report(g, j);
  std::cout << oral::text_table({"lines", "changed", "empty"},
                                {{std::to_string(lines.size()), std::to_string(changed),
                                  std::to_string(empty)}});
  return 0;
}

int run_segment(const Globals& g, const std::string& input, const std::string& output, bool repunc) {
  const auto turns = oral::read_turns(input);
  oral::SegmentStats st;
  auto utts = oral::segment_turns(turns, &st);
  if (repunc) utts = oral::repunctuate(utts);
  oral::write_utterances(output, utts);
  auto j = report_header("segment", g);
  j["turns"] = st.turns;
  j["empty"] = st.empty;
  j["duplicates"] = st.duplicates;
  j["kept"] = st.kept;
  j["words"] = st.words;
  j["repunc"] = repunc;
  write_report(g, j);
  std::cout << oral::text_table(
      {"turns", "empty", "duplicates", "kept", "words"},
      {{std::to_string(st.turns), std::to_string(st.empty), std::to_string(st.duplicates),
        std::to_string(st.kept), std::to_string(st.words)}});
  return 0;
}

int run_deanonymize(const Globals& g, const std::string& input, const std::string& output,
                    const std::string& names_file, const std::string& placeholder) {
  const auto utts = oral::read_utterances(input);
  const auto names = oral::NameInventory::load(names_file);
  const auto out = oral::deanonymize(utts, placeholder, names, g.seed);
  oral::write_utterances(output, out);
  std::size_t slots = 0;
  for (const auto& u : utts)
    for (const auto& t : u.tokens) slots += t.surface == placeholder;
  auto j = report_header("deanonymize", g);
  j["utterances"] = utts.size();
  j["slots"] = slots;
  j["names"] = names.size();
  j["placeholder"] = placeholder;
  write_report(g, j);
  std::cout << oral::text_table({"utterances", "slots", "names"},
                                {{std::to_string(utts.size()), std::to_string(slots),
                                  std::to_string(names.size())}});
  return 0;
}

int run_repunc(const Globals& g, const std::string& input, const std::string& output, bool strip) {
  const auto utts = oral::read_utterances(input);
  const auto out = strip ? oral::strip_synthetic(utts) : oral::repunctuate(utts);
  oral::write_utterances(output, out);
  auto j = report_header("repunc", g);
  j["utterances"] = utts.size();
  j["mode"] = strip ? "strip" : "add";
  write_report(g, j);
  std::cout << oral::text_table({"utterances", "mode"},
                                {{std::to_string(utts.size()), strip ? "strip" : "add"}});
  return 0;
}

// ---------------------------------------------------------------------------
// BPE

int run_bpe_train(const Globals& g, const std::string& input, const std::string& output,
                  const std::string& vocab_out, std::size_t target) {
  const auto corpus = utterance_texts(input);
  const auto model = oral::bpe_train(corpus, target);
  model.save(output);
  if (!vocab_out.empty()) model.save_vocab(vocab_out);
  auto j = report_header("bpe-train", g);
  j["utterances"] = corpus.size();
  j["target_vocab"] = target;
  j["merges"] = model.merges().size();
  j["vocab"] = model.vocab().size();
  write_report(g, j);
  std::cout << oral::text_table({"utterances", "target", "merges", "vocab"},
                                {{std::to_string(corpus.size()), std::to_string(target),
                                  std::to_string(model.merges().size()),
                                  std::to_string(model.vocab().size())}});
  return 0;
}

int run_bpe_apply(const Globals& g, const std::string& model_path, const std::string& input,
                  const std::string& output) {
  const auto model = oral::BpeModel::load(model_path);
  const auto corpus = utterance_texts(input);
  auto out = oral::open_out(output);
  std::size_t words = 0, units = 0, split = 0;
  for (const auto& line : corpus) {
    std::vector<std::string> pieces;
    for (const auto& w : oral::split_ws(line)) {
      auto u = model.encode(w);
      ++words;
      units += u.size();
      split += u.size() > 1;
      pieces.insert(pieces.end(), u.begin(), u.end());
    }
    out << oral::join(pieces, " ") << '\n';
  }
  auto j = report_header("bpe-apply", g);
  j["words"] = words;
  j["units"] = units;
  j["split_words"] = split;
  write_report(g, j);
  std::cout << oral::text_table(
      {"words", "units", "split words", "units/word"},
      {{std::to_string(words), std::to_string(units), std::to_string(split),
        fmt(words ? static_cast<double>(units) / static_cast<double>(words) : 0.0)}});
  return 0;
}

int run_bpe_overlap(const Globals& g, const std::string& a_path, const std::string& b_path) {
  const auto a = oral::BpeModel::load(a_path);
  const auto b = oral::BpeModel::load(b_path);
  const auto ov = oral::vocab_overlap(a, b);
  auto j = report_header("bpe-overlap", g);
  j["size_a"] = a.vocab().size();
  j["size_b"] = b.vocab().size();
  j["shared"] = ov.shared;
  j["overlap_of_a"] = ov.of_first;
  j["overlap_of_b"] = ov.of_second;
  j["jaccard"] = ov.jaccard;
  write_report(g, j);
  std::cout << oral::text_table(
      {"|A|", "|B|", "shared", "% of A", "% of B", "Jaccard %"},
      {{std::to_string(a.vocab().size()), std::to_string(b.vocab().size()),
        std::to_string(ov.shared), fmt(ov.of_first), fmt(ov.of_second), fmt(ov.jaccard)}});
  return 0;
}

// ---------------------------------------------------------------------------
// parsing

struct ParseTrainArgs {
  std::string train, dev, output, dev_provider;
  ProviderArgs provider;
  int epochs = 40;
  std::string hidden;
  bool full_scale = false;
  bool desk_scale = false;
  bool repunc = false;
  double explore_prob = 0.9;
  int explore_start = 2;
  double lr = 1e-3;
};

int run_parse_train(const Globals& g, const ParseTrainArgs& a) {
  const auto train = oral::read_conllu(a.train);
  const auto dev = oral::read_conllu(a.dev);
  oral::MlpSpec mlp;
  mlp.hidden_dims = a.full_scale ? oral::kFullHiddenDims : oral::kDeskHiddenDims;
  if (!a.hidden.empty()) mlp.hidden_dims = parse_dims(a.hidden);

  oral::FeatureSpec fspec;
  std::optional<oral::LookupProvider> lookup;
  std::unique_ptr<oral::EmbeddingProvider> fixed, fixed_dev;
  nlohmann::json desc;
  if (a.provider.spec == "lookup") {
    std::vector<oral::Utterance> utts;
    for (const auto& t : train) utts.push_back(t.utterance);
    lookup = oral::LookupProvider::build(utts, a.provider.dim, oral::mix64(g.seed + 11),
                                         a.provider.min_count);
    desc = lookup->describe();
    fspec.d_w = a.provider.dim;
  } else {
    fixed = make_fixed_provider(a.provider, char_config(a.provider.dim, oral::mix64(g.seed + 12)));
    if (!a.dev_provider.empty()) {
      ProviderArgs dp = a.provider;
      dp.spec = a.dev_provider;
      fixed_dev = make_fixed_provider(dp, char_config(a.provider.dim, oral::mix64(g.seed + 12)));
    } else if (fixed->kind() == oral::ProviderKind::external) {
      throw oral::ValidationError("external vectors are positional; pass --dev-provider external:FILE");
    }
    desc = fixed->describe();
    fspec.d_w = fixed->dim();
  }

  oral::ParserModel model(oral::ActionInventory::from_trees(train), fspec, mlp, desc,
                          std::move(lookup), g.seed);
  oral::TrainRegime regime;
  regime.epochs = a.epochs;
  regime.seed = oral::mix64(g.seed + 13);
  regime.repunc = a.repunc;
  regime.explore_prob = a.explore_prob;
  regime.explore_start_epoch = a.explore_start;
  regime.adam.lr = a.lr;

  std::vector<std::vector<std::string>> rows;
  const auto res = oral::train_parser(model, train, dev, regime, fixed.get(),
                                      fixed_dev ? fixed_dev.get() : fixed.get(),
                                      [&](const oral::EpochLog& e) {
                                        rows.push_back({std::to_string(e.epoch), fmt(e.train_loss, 4),
                                                        fmt(e.dev_las), fmt(e.dev_uas),
                                                        fmt(e.dev_upos)});
                                      });
  model.save(a.output);

  auto j = report_header("parse-train", g);
  j["train_sentences"] = train.size();
  j["dev_sentences"] = dev.size();
  j["provider"] = desc.contains("vocab") ? nlohmann::json{{"kind", "lookup"}, {"dim", desc["dim"]}}
                                         : desc;
  j["hidden_dims"] = mlp.hidden_dims;
  j["epochs"] = a.epochs;
  j["repunc"] = a.repunc;
  j["best_epoch"] = res.best_epoch;
  j["best_dev"] = res.best_dev.to_json();
  j["log"] = nlohmann::json::array();
  for (const auto& e : res.log) j["log"].push_back(ordered_json(e.to_json()));
  write_report(g, j);
  std::cout << oral::text_table({"epoch", "loss", "dev LAS", "dev UAS", "dev UPOS"}, rows);
  std::cout << "best epoch " << res.best_epoch << "\n";
  return 0;
}

int run_parse_decode(const Globals& g, const std::string& model_path, const std::string& input,
                     const std::string& output, const ProviderArgs& p, bool repunc) {
  const auto model = oral::ParserModel::load(model_path);
  auto utts = read_any_utterances(input);
  if (repunc) utts = oral::repunctuate(utts);
  const auto provider = provider_for(model.provider(), p);
  auto trees = oral::decode(model, utts, provider.get());
  oral::write_conllu(output, trees);
  std::size_t tokens = 0;
  for (const auto& t : trees) tokens += t.size();
  auto j = report_header("parse-decode", g);
  j["sentences"] = trees.size();
  j["tokens"] = tokens;
  j["repunc"] = repunc;
  write_report(g, j);
  std::cout << oral::text_table({"sentences", "tokens"},
                                {{std::to_string(trees.size()), std::to_string(tokens)}});
  return 0;
}

int run_parse_score(const Globals& g, const std::string& gold_path, const std::string& pred_path,
                    const std::string& lexicon) {
  auto gold = oral::read_conllu(gold_path);
  const auto pred = oral::read_conllu(pred_path);
  oral::TokenPredicate oov;
  if (!lexicon.empty()) {
    oral::mark_oov(gold, oral::read_lexicon(lexicon));
    oov = [](const oral::DepTree& t, std::size_t i) {
      return t.utterance.tokens[i].oov.value_or(false);
    };
  }
  const auto rep = oral::attachment_scores(gold, pred, oov, "oov");
  auto j = report_header("parse-score", g);
  j["scores"] = rep.to_json();
  write_report(g, j);
  std::vector<std::vector<std::string>> rows{
      {"all", std::to_string(rep.all.tokens), fmt(rep.las()), fmt(rep.uas()), fmt(rep.upos())}};
  if (rep.subset)
    rows.push_back({"oov", std::to_string(rep.subset->tokens), fmt(rep.subset->las()),
                    fmt(rep.subset->uas()), fmt(rep.subset->upos())});
  std::cout << oral::text_table({"tokens", "n", "LAS", "UAS", "UPOS"}, rows);
  if (rep.subset)
    std::cout << "delta LAS " << fmt(rep.delta_las()) << "  delta UAS " << fmt(rep.delta_uas())
              << "  delta UPOS " << fmt(rep.delta_upos()) << "\n";
  return 0;
}

int run_oracle_check(const Globals& g, int min_len, int max_len, int labels, int tags, int full) {
  const auto r = oral::exhaustive_oracle_check(min_len, max_len, labels, tags, full);
  auto j = report_header("oracle-check", g);
  j["min_len"] = r.min_len;
  j["max_len"] = r.max_len;
  j["labels"] = r.n_labels;
  j["tags"] = r.n_tags;
  j["full_variant_len"] = full;
  j["trees"] = r.trees;
  j["configs"] = r.configs;
  j["action_checks"] = r.action_checks;
  j["cost_mismatches"] = r.cost_mismatches;
  j["dead_ends"] = r.dead_ends;
  j["oracle_failures"] = r.oracle_failures;
  j["first_failure"] = r.first_failure;
  j["passed"] = r.passed();
  write_report(g, j);
  std::cout << oral::text_table(
      {"trees", "configs", "checks", "mismatches", "dead ends", "walk failures"},
      {{std::to_string(r.trees), std::to_string(r.configs), std::to_string(r.action_checks),
        std::to_string(r.cost_mismatches), std::to_string(r.dead_ends),
        std::to_string(r.oracle_failures)}});
  std::cout << (r.passed() ? "PASS" : "FAIL: " + r.first_failure) << "\n";
  return r.passed() ? 0 : 1;
}

// ---------------------------------------------------------------------------
// SLU

struct SluTrainArgs {
  std::string train, dev, output;
  ProviderArgs provider;
  int epochs = 50;
  std::string hidden = "128";
  double lr = 1e-3;
};

int run_slu_train(const Globals& g, const SluTrainArgs& a) {
  const auto train = oral::read_slu_tsv(a.train);
  const auto dev = oral::read_slu_tsv(a.dev);
  std::set<std::string> concepts;
  for (const auto* set : {&train, &dev})
    for (const auto& s : *set)
      for (const auto& t : s.bio)
        if (t.size() > 2 && (t[0] == 'B' || t[0] == 'I') && t[1] == '-') concepts.insert(t.substr(2));
  const std::vector<std::string> cv(concepts.begin(), concepts.end());

  oral::MlpSpec mlp;
  mlp.hidden_dims = parse_dims(a.hidden);
  std::optional<oral::LookupProvider> lookup;
  std::unique_ptr<oral::EmbeddingProvider> fixed;
  nlohmann::json desc;
  if (a.provider.spec == "lookup") {
    std::vector<oral::Utterance> utts;
    for (const auto& s : train) utts.push_back(s.utterance);
    lookup = oral::LookupProvider::build(utts, a.provider.dim, oral::mix64(g.seed + 21),
                                         a.provider.min_count);
    desc = lookup->describe();
  } else {
    fixed = make_fixed_provider(a.provider, char_config(a.provider.dim, oral::mix64(g.seed + 22)));
    if (fixed->kind() == oral::ProviderKind::external)
      throw oral::ValidationError("slu-train: external vectors are not supported");
    desc = fixed->describe();
  }
  oral::SluTagger tagger(oral::bio_inventory(cv), -3, 2, mlp, desc, std::move(lookup), g.seed);
  oral::SluRegime regime;
  regime.epochs = a.epochs;
  regime.seed = oral::mix64(g.seed + 23);
  regime.adam.lr = a.lr;
  std::vector<std::vector<std::string>> rows;
  const auto res = oral::train_slu_tagger(tagger, train, dev, regime, fixed.get(),
                                          [&](const oral::SluEpochLog& e) {
                                            rows.push_back({std::to_string(e.epoch),
                                                            fmt(e.train_loss, 4), fmt(e.dev_cer)});
                                          });
  tagger.save(a.output);
  auto j = report_header("slu-train", g);
  j["train_utterances"] = train.size();
  j["dev_utterances"] = dev.size();
  j["concepts"] = cv;
  j["epochs"] = a.epochs;
  j["best_epoch"] = res.best_epoch;
  j["best_dev_cer"] = res.best_dev_cer;
  j["log"] = nlohmann::json::array();
  for (const auto& e : res.log)
    j["log"].push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"dev_cer", e.dev_cer}});
  write_report(g, j);
  std::cout << oral::text_table({"epoch", "loss", "dev CER"}, rows);
  std::cout << "best epoch " << res.best_epoch << "\n";
  return 0;
}

int run_slu_decode(const Globals& g, const std::string& model_path, const std::string& input,
                   const std::string& output, const ProviderArgs& p) {
  const auto tagger = oral::SluTagger::load(model_path);
  const auto utts = read_any_utterances(input);
  auto desc = tagger.to_json().at("provider");
  const auto provider = provider_for(desc, p);
  const auto out = oral::slu_decode(tagger, utts, provider.get());
  oral::write_slu_tsv(output, out);
  std::size_t spans = 0;
  for (const auto& s : out) spans += oral::bio_decode(s.bio, s.utterance).size();
  auto j = report_header("slu-decode", g);
  j["utterances"] = out.size();
  j["concepts"] = spans;
  write_report(g, j);
  std::cout << oral::text_table({"utterances", "concepts"},
                                {{std::to_string(out.size()), std::to_string(spans)}});
  return 0;
}

int run_slu_score(const Globals& g, const std::string& gold_path, const std::string& hyp_path,
                  const std::string& rules_path, const std::string& mode, const std::string& ci,
                  std::size_t folds) {
  const auto gold = oral::read_slu_tsv(gold_path);
  const auto hyp = oral::read_slu_tsv(hyp_path);
  const auto rules = rules_path.empty() ? oral::ValueRules{} : oral::ValueRules::load(rules_path);
  auto j = report_header("slu-score", g);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> modes = mode == "both" ? std::vector<std::string>{"cer", "cver"}
                                                  : std::vector<std::string>{mode};
  for (const auto& m : modes) {
    const auto metric = m == "cer" ? oral::SluMetric::cer : oral::SluMetric::cver;
    const auto unit = ci == "split" ? oral::CiUnit::split : oral::CiUnit::utterance;
    const auto s = oral::score_slu(gold, hyp, rules, metric, unit, folds);
    j[m] = s.to_json();
    const double hw = s.ci ? 100.0 * s.ci->half_width : 0.0;
    rows.push_back({m == "cer" ? "CER" : "CVER", std::to_string(s.counts.ref_length),
                    std::to_string(s.counts.substitutions), std::to_string(s.counts.deletions),
                    std::to_string(s.counts.insertions), oral::format_pm(100.0 * s.rate(), hw)});
  }
  write_report(g, j);
  std::cout << oral::text_table({"metric", "ref", "S", "D", "I", "rate % (95% CI)"}, rows);
  return 0;
}

// ---------------------------------------------------------------------------
// classification and splits

struct ClassifArgs {
  std::string input;
  std::size_t vocab = 5000;
  std::string model = "svm";
  std::string kernel = "triangular";
  double C = 1.0;
  std::size_t splits = 10;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  ProviderArgs provider;
  std::string hidden;
  int epochs = 50;
};

int run_classif(const Globals& g, const ClassifArgs& a) {
  const auto docs = oral::read_documents(a.input);
  const std::size_t train_size = a.train_size ? a.train_size : docs.size() * 4 / 5;
  const std::size_t test_size = a.test_size ? a.test_size : docs.size() - train_size;
  oral::ClassifierFactory factory;
  if (a.model == "svm") {
    oral::SvmConfig cfg;
    cfg.C = a.C;
    if (a.kernel == "linear")
      cfg.kernel = oral::KernelKind::linear;
    else if (a.kernel != "triangular")
      throw oral::ValidationError("unknown kernel '" + a.kernel + "'");
    factory = [cfg, vocab = a.vocab](std::uint64_t) {
      return std::make_unique<oral::TfidfSvmClassifier>(vocab, cfg);
    };
  } else if (a.model == "mlp") {
    if (a.provider.spec == "lookup")
      throw oral::ValidationError("classif-run --model mlp needs --provider char-ngram");
    std::shared_ptr<const oral::EmbeddingProvider> provider =
        make_fixed_provider(a.provider, char_config(a.provider.dim, oral::mix64(g.seed + 31)));
    oral::PooledMlpConfig cfg;
    cfg.hidden_dims = parse_dims(a.hidden);
    cfg.epochs = a.epochs;
    factory = [provider, cfg](std::uint64_t seed) {
      auto c = cfg;
      c.seed = seed;
      return std::make_unique<oral::PooledMlpClassifier>(provider, c);
    };
  } else {
    throw oral::ValidationError("unknown model '" + a.model + "'");
  }
  const auto rep = oral::run_splits(docs, a.splits, train_size, test_size, factory, g.seed);
  auto j = report_header("classif-run", g);
  j["documents"] = docs.size();
  j["train_size"] = train_size;
  j["test_size"] = test_size;
  j["result"] = rep.to_json();
  write_report(g, j);
  const double hw = rep.ci ? rep.ci->half_width : 0.0;
  std::string name = a.model == "svm" ? "SVM-" + std::to_string(a.vocab) : "MLP-pooled";
  std::cout << oral::text_table({"model", "splits", "weighted F1 (95% CI)", "std"},
                                {{name, std::to_string(rep.f1.size()),
                                  oral::format_pm(rep.mean, hw, 3), fmt(rep.stddev, 3)}});
  return 0;
}

std::array<double, 3> parse_ratios(const std::string& s) {
  const auto parts = oral::split_on(s, ',');
  if (parts.size() != 3) throw oral::ValidationError("--ratios needs three comma-separated values");
  std::array<double, 3> r{};
  for (int i = 0; i < 3; ++i) {
    try {
      r[i] = std::stod(parts[i]);
    } catch (const std::exception&) {
      throw oral::ValidationError("bad ratio '" + parts[i] + "'");
    }
  }
  return r;
}

template <class T, class IdFn>
std::array<std::vector<T>, 3> partition(const std::vector<T>& items, const oral::SplitSpec& spec,
                                        IdFn id) {
  std::array<std::vector<T>, 3> out;
  for (const auto& it : items)
    if (auto p = spec.part_of(id(it))) out[static_cast<int>(*p)].push_back(it);
  return out;
}

int run_split(const Globals& g, const std::string& input, const std::string& ratios,
              const std::string& output, const std::string& out_dir) {
  const fs::path in(input);
  std::vector<oral::SplitItem> items;
  std::vector<oral::DepTree> trees;
  std::vector<oral::SluSample> slu;
  std::vector<oral::LabeledDocument> docs;
  if (has_ext(in, ".conllu")) {
    trees = oral::read_conllu(in);
    for (const auto& t : trees) items.push_back({t.utterance.id, t.utterance.recording_id, t.size()});
  } else if (has_ext(in, ".tsv")) {
    slu = oral::read_slu_tsv(in);
    for (const auto& s : slu) items.push_back({s.utterance.id, "", s.utterance.size()});
  } else {
    docs = oral::read_documents(in);
    for (const auto& d : docs) items.push_back({d.id, d.category, oral::split_ws(d.text).size()});
  }
  const auto spec = oral::stratified_split(items, parse_ratios(ratios), g.seed);
  {
    auto out = oral::open_out(output);
    out << oral::to_json(spec).dump(2) << '\n';
  }
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    const auto stem = in.stem().string();
    for (int p = 0; p < 3; ++p) {
      const auto part = std::string(oral::to_string(static_cast<oral::Part>(p)));
      const fs::path base = fs::path(out_dir) / (stem + "." + part);
      if (!trees.empty()) {
        auto parts = partition(trees, spec, [](const auto& t) { return t.utterance.id; });
        oral::write_conllu(base.string() + ".conllu", parts[p]);
      } else if (!slu.empty()) {
        auto parts = partition(slu, spec, [](const auto& s) { return s.utterance.id; });
        oral::write_slu_tsv(base.string() + ".tsv", parts[p]);
      } else {
        auto parts = partition(docs, spec, [](const auto& d) { return d.id; });
        oral::write_documents(base.string() + ".jsonl", parts[p]);
      }
    }
  }
  const auto sizes = spec.sizes();
  std::array<std::size_t, 3> words{};
  for (const auto& it : items) words[static_cast<int>(*spec.part_of(it.id))] += it.weight;
  auto j = report_header("split", g);
  j["items"] = items.size();
  j["sizes"] = {{"train", sizes[0]}, {"dev", sizes[1]}, {"test", sizes[2]}};
  j["words"] = {{"train", words[0]}, {"dev", words[1]}, {"test", words[2]}};
  write_report(g, j);
  std::vector<std::vector<std::string>> rows;
  for (int p = 0; p < 3; ++p)
    rows.push_back({std::string(oral::to_string(static_cast<oral::Part>(p))),
                    std::to_string(sizes[p]), std::to_string(words[p])});
  std::cout << oral::text_table({"part", "items", "words"}, rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"oral: spoken-language parsing, SLU scoring and classification toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  try {
    g.seed = default_seed();
  } catch (const oral::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  app.add_option("--seed", g.seed, "random seed (default: $ORAL_SEED or 1)");
  app.add_option("--threads", g.threads, "worker thread cap (0 = all cores)");
  app.add_option("--report", g.report, "JSON report path");

  std::string input, output, model, gold, pred, rules, names_file, vocab_out, lexicon, other;
  std::string placeholder(oral::kDefaultPlaceholder);
  bool repunc = false, strip = false;

  auto* c_norm = app.add_subcommand("normalize", "normalize raw text lines");
  c_norm->add_option("--input", input)->required()->check(CLI::ExistingFile);
  c_norm->add_option("--output", output)->required();

  auto* c_seg = app.add_subcommand("segment", "diarization turns to deduplicated utterances");
  c_seg->add_option("--input", input)->required()->check(CLI::ExistingFile);
  c_seg->add_option("--output", output)->required();
  c_seg->add_flag("--repunc", repunc, "append a synthetic final '.' token");

  auto* c_deanon = app.add_subcommand("deanonymize", "replace placeholders with proper names");
  c_deanon->add_option("--input", input)->required()->check(CLI::ExistingFile);
  c_deanon->add_option("--output", output)->required();
  c_deanon->add_option("--names-file", names_file)->required()->check(CLI::ExistingFile);
  c_deanon->add_option("--placeholder", placeholder)->capture_default_str();

  auto* c_repunc = app.add_subcommand("repunc", "add (or strip) synthetic final punctuation");
  c_repunc->add_option("--input", input)->required()->check(CLI::ExistingFile);
  c_repunc->add_option("--output", output)->required();
  c_repunc->add_flag("--strip", strip, "remove synthetic tokens instead");

  std::size_t bpe_target = oral::kDeskBpeVocab;
  bool full_scale = false;
  auto* c_bpe = app.add_subcommand("bpe-train", "train a BPE model");
  c_bpe->add_option("--input", input, "text lines, utterance JSON lines, CoNLL-U or SLU TSV")
      ->required()
      ->check(CLI::ExistingFile);
  c_bpe->add_option("--output", output)->required();
  c_bpe->add_option("--vocab-output", vocab_out);
  auto* bpe_vocab_opt = c_bpe->add_option("--vocab-size", bpe_target)->capture_default_str();
  c_bpe->add_flag("--full-scale", full_scale, "50,000 units")->excludes(bpe_vocab_opt);

  auto* c_bpe_apply = app.add_subcommand("bpe-apply", "segment text into subword units");
  c_bpe_apply->add_option("--model", model)->required()->check(CLI::ExistingFile);
  c_bpe_apply->add_option("--input", input)->required()->check(CLI::ExistingFile);
  c_bpe_apply->add_option("--output", output)->required();

  auto* c_bpe_ov = app.add_subcommand("bpe-overlap", "vocabulary overlap of two BPE models");
  c_bpe_ov->add_option("--a", model)->required()->check(CLI::ExistingFile);
  c_bpe_ov->add_option("--b", other)->required()->check(CLI::ExistingFile);

  ParseTrainArgs pt;
  auto* c_pt = app.add_subcommand("parse-train", "train the joint tagger-parser");
  c_pt->add_option("--train", pt.train)->required()->check(CLI::ExistingFile);
  c_pt->add_option("--dev", pt.dev)->required()->check(CLI::ExistingFile);
  c_pt->add_option("--output", pt.output, "model checkpoint")->required();
  add_provider_flags(c_pt, pt.provider, true);
  c_pt->add_option("--dev-provider", pt.dev_provider, "external:FILE for the dev corpus");
  c_pt->add_option("--epochs", pt.epochs)->capture_default_str()->check(CLI::PositiveNumber);
  auto* hidden_opt = c_pt->add_option("--hidden", pt.hidden, "hidden dims, e.g. 3200,1600");
  auto* full_opt = c_pt->add_flag("--full-scale", pt.full_scale, "hidden dims 3200,1600");
  c_pt->add_flag("--desk-scale", pt.desk_scale, "hidden dims 320,160 (default)")
      ->excludes(full_opt)
      ->excludes(hidden_opt);
  full_opt->excludes(hidden_opt);
  c_pt->add_flag("--repunc", pt.repunc, "feed a synthetic final '.' to the provider");
  c_pt->add_option("--explore-prob", pt.explore_prob)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  c_pt->add_option("--explore-start", pt.explore_start, "first exploring epoch")->capture_default_str();
  c_pt->add_option("--lr", pt.lr)->capture_default_str();

  ProviderArgs decode_provider;
  auto* c_pd = app.add_subcommand("parse-decode", "parse utterances with a trained model");
  c_pd->add_option("--model", model)->required()->check(CLI::ExistingFile);
  c_pd->add_option("--input", input, "CoNLL-U (forms are used) or utterance JSON lines")
      ->required()
      ->check(CLI::ExistingFile);
  c_pd->add_option("--output", output, "CoNLL-U")->required();
  add_provider_flags(c_pd, decode_provider, false);
  c_pd->add_flag("--repunc", repunc, "feed a synthetic final '.' to the provider");

  auto* c_ps = app.add_subcommand("parse-score", "LAS/UAS/UPOS, optionally on OOV tokens");
  c_ps->add_option("--gold", gold)->required()->check(CLI::ExistingFile);
  c_ps->add_option("--pred", pred)->required()->check(CLI::ExistingFile);
  c_ps->add_option("--lexicon", lexicon, "recognizer lexicon, one word per line")
      ->check(CLI::ExistingFile);

  int min_len = 2, max_len = 5, n_labels = 2, n_tags = 2, full_len = 5;
  auto* c_oc = app.add_subcommand("oracle-check", "exhaustive dynamic-oracle verification");
  c_oc->add_option("--min-len", min_len)->capture_default_str()->check(CLI::Range(1, 7));
  c_oc->add_option("--max-len", max_len)->capture_default_str()->check(CLI::Range(1, 7));
  c_oc->add_option("--labels", n_labels)->capture_default_str()->check(CLI::Range(1, 4));
  c_oc->add_option("--tags", n_tags)->capture_default_str()->check(CLI::Range(1, 4));
  c_oc->add_option("--full-variant-len", full_len,
                   "longest sentence checked under every label/POS assignment")
      ->capture_default_str();

  SluTrainArgs st;
  auto* c_st = app.add_subcommand("slu-train", "train the BIO concept tagger");
  c_st->add_option("--train", st.train)->required()->check(CLI::ExistingFile);
  c_st->add_option("--dev", st.dev)->required()->check(CLI::ExistingFile);
  c_st->add_option("--output", st.output)->required();
  add_provider_flags(c_st, st.provider, true);
  c_st->add_option("--epochs", st.epochs)->capture_default_str()->check(CLI::PositiveNumber);
  c_st->add_option("--hidden", st.hidden)->capture_default_str();
  c_st->add_option("--lr", st.lr)->capture_default_str();

  ProviderArgs slu_provider;
  auto* c_sd = app.add_subcommand("slu-decode", "tag utterances with concepts");
  c_sd->add_option("--model", model)->required()->check(CLI::ExistingFile);
  c_sd->add_option("--input", input)->required()->check(CLI::ExistingFile);
  c_sd->add_option("--output", output, "SLU TSV")->required();
  add_provider_flags(c_sd, slu_provider, false);

  std::string mode = "cer", ci = "utterance";
  std::size_t folds = 10;
  auto* c_ss = app.add_subcommand("slu-score", "concept (value) error rate");
  c_ss->add_option("--gold", gold)->required()->check(CLI::ExistingFile);
  c_ss->add_option("--hyp", pred)->required()->check(CLI::ExistingFile);
  c_ss->add_option("--rules", rules)->check(CLI::ExistingFile);
  c_ss->add_option("--mode", mode)->capture_default_str()->check(CLI::IsMember({"cer", "cver", "both"}));
  c_ss->add_option("--ci", ci)->capture_default_str()->check(CLI::IsMember({"utterance", "split"}));
  c_ss->add_option("--folds", folds)->capture_default_str()->check(CLI::Range(2, 1000));

  ClassifArgs ca;
  auto* c_cl = app.add_subcommand("classif-run", "repeated random-split document classification");
  c_cl->add_option("--input", ca.input)->required()->check(CLI::ExistingFile);
  c_cl->add_option("--vocab", ca.vocab)->capture_default_str();
  c_cl->add_option("--model", ca.model)->capture_default_str()->check(CLI::IsMember({"svm", "mlp"}));
  c_cl->add_option("--kernel", ca.kernel)->capture_default_str()->check(CLI::IsMember({"triangular", "linear"}));
  c_cl->add_option("--C", ca.C)->capture_default_str();
  c_cl->add_option("--splits", ca.splits)->capture_default_str()->check(CLI::Range(1, 1000));
  c_cl->add_option("--train-size", ca.train_size, "default: 80% of the corpus");
  c_cl->add_option("--test-size", ca.test_size, "default: the rest");
  add_provider_flags(c_cl, ca.provider, true);
  c_cl->add_option("--hidden", ca.hidden);
  c_cl->add_option("--epochs", ca.epochs)->capture_default_str();

  std::string ratios = "0.8,0.1,0.1", out_dir;
  auto* c_split = app.add_subcommand("split", "stratified train/dev/test split");
  c_split->add_option("--input", input, "CoNLL-U, SLU TSV or document JSON lines")
      ->required()
      ->check(CLI::ExistingFile);
  c_split->add_option("--ratios", ratios)->capture_default_str();
  c_split->add_option("--output", output, "split JSON")->required();
  c_split->add_option("--out-dir", out_dir, "also write the three parts here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    oral::set_max_threads(g.threads);
    if (*c_norm) return run_normalize(g, input, output);
    if (*c_seg) return run_segment(g, input, output, repunc);
    if (*c_deanon) return run_deanonymize(g, input, output, names_file, placeholder);
    if (*c_repunc) return run_repunc(g, input, output, strip);
    if (*c_bpe) return run_bpe_train(g, input, output, vocab_out, full_scale ? 50000 : bpe_target);
    if (*c_bpe_apply) return run_bpe_apply(g, model, input, output);
    if (*c_bpe_ov) return run_bpe_overlap(g, model, other);
    if (*c_pt) return run_parse_train(g, pt);
    if (*c_pd) return run_parse_decode(g, model, input, output, decode_provider, repunc);
    if (*c_ps) return run_parse_score(g, gold, pred, lexicon);
    if (*c_oc) return run_oracle_check(g, min_len, max_len, n_labels, n_tags, full_len);
    if (*c_st) return run_slu_train(g, st);
    if (*c_sd) return run_slu_decode(g, model, input, output, slu_provider);
    if (*c_ss) return run_slu_score(g, gold, pred, rules, mode, ci, folds);
    if (*c_cl) return run_classif(g, ca);
    if (*c_split) return run_split(g, input, ratios, output, out_dir);
  } catch (const oral::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

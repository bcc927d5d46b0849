// One PASS/FAIL line per acceptance criterion. Exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "oral/bpe.hpp"
#include "oral/classif.hpp"
#include "oral/corpus.hpp"
#include "oral/metrics.hpp"
#include "oral/neural.hpp"
#include "oral/normalize.hpp"
#include "oral/parser.hpp"
#include "oral/slu.hpp"
#include "oral/toy.hpp"
#include "oral/transition.hpp"
#include "oral/util.hpp"

using namespace oral;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int d = 4) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(d);
  o << x;
  return o.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- 1, 2 -----------------------------------------------------------------

// shared by criteria 1 and 2
const OracleCheckReport& exhaustive() {
  static const OracleCheckReport r = exhaustive_oracle_check(2, 5, 2, 2, 5);
  return r;
}

Outcome dynamic_cost_exhaustive() {
  const auto& r = exhaustive();
  std::ostringstream o;
  o << r.trees << " gold variants, " << r.configs << " configs, " << r.action_checks
    << " action checks, " << r.cost_mismatches << " mismatches, " << fmt(r.seconds, 1) << " s";
  if (!r.first_failure.empty()) o << "; first failure: " << r.first_failure;
  return {r.cost_mismatches == 0 && r.action_checks > 0 && r.seconds < 600.0, o.str()};
}

bool walk_rebuilds(const GoldAnnotation& g, const ActionInventory& inv, std::mt19937_64& rng) {
  ParserConfig c(g.size());
  while (!c.terminal()) {
    auto z = zero_cost_actions(c, g, inv);
    if (z.empty()) return false;
    c = apply(c, z[std::uniform_int_distribution<std::size_t>(0, z.size() - 1)(rng)]);
  }
  auto fin = finalize_analysis(c);
  return attachment_and_tag_errors(fin, g) == 0 && fin.heads == g.heads && fin.tags == g.pos;
}

Outcome oracle_completeness() {
  // the exhaustive pass already counts dead ends and first-choice walk failures
  const auto& r = exhaustive();
  ActionInventory inv({"t0", "t1"}, {"l0", "l1"});
  std::mt19937_64 rng(3);
  std::size_t random_walks = 0, random_fail = 0, nonproj = 0, nonproj_fail = 0;
  for (int n = 2; n <= 5; ++n) {
    for (const auto& h : enumerate_projective_trees(n)) {
      GoldAnnotation g;
      g.heads = h;
      for (int i = 0; i < n; ++i) {
        g.pos.push_back(static_cast<int>(rng() % 2));
        g.labels.push_back(static_cast<int>(rng() % 2));
      }
      for (int k = 0; k < 3; ++k, ++random_walks) random_fail += !walk_rebuilds(g, inv, rng);
    }
    // every non-projective head vector: the walk must rebuild its projectivization
    std::vector<int> h(static_cast<std::size_t>(n), 0);
    for (;;) {
      if (!has_cycle(h) && !is_projective(h)) {
        GoldAnnotation g;
        g.heads = projectivize_heads(h);
        g.pos.assign(static_cast<std::size_t>(n), 0);
        g.labels.assign(static_cast<std::size_t>(n), 1);
        ++nonproj;
        nonproj_fail += !walk_rebuilds(g, inv, rng);
      }
      int i = 0;
      while (i < n && ++h[static_cast<std::size_t>(i)] > n) h[static_cast<std::size_t>(i++)] = 0;
      if (i == n) break;
    }
  }
  std::ostringstream o;
  o << r.dead_ends << " dead ends in " << r.configs << " configs, " << r.oracle_failures
    << " first-choice walk failures, " << random_fail << "/" << random_walks << " random zero-cost walks failed, "
    << nonproj_fail << "/" << nonproj << " non-projective trees not rebuilt as projectivized";
  return {r.dead_ends == 0 && r.oracle_failures == 0 && random_fail == 0 && nonproj_fail == 0, o.str()};
}

// --- 3 --------------------------------------------------------------------

Outcome gradient_check() {
  FeatureSpec fs;
  MlpSpec spec;
  spec.input_dim = fs.input_dim();
  spec.hidden_dims = kDeskHiddenDims;
  spec.input_dropout = 0.0;
  spec.hidden_dropout = 0.0;
  spec.heads = {{"tag", 12}, {"transition", 2 + 2 * 30}};
  const double eps = 1e-4;
  double worst = 0.0;
  std::size_t coords = 0, kinks = 0;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int draw = 0; draw < 20; ++draw) {
    Mlp m(spec, 100 + static_cast<std::uint64_t>(draw));
    for (Tensor* t : m.parameters())
      if (t->rows == 1)
        for (auto& b : t->value) b = 0.1 * nd(rng);
    std::vector<double> x(spec.input_dim);
    for (auto& v : x) v = nd(rng);
    const int head = draw % 2;
    const std::size_t classes = spec.heads[static_cast<std::size_t>(head)].second;
    std::vector<char> legal(classes, 1);
    for (auto& l : legal) l = rng() % 4 != 0;
    const int target = static_cast<int>(rng() % classes);
    legal[static_cast<std::size_t>(target)] = 1;

    MlpCache cache;
    m.forward(x, head, legal, Mode::eval, nullptr, &cache);
    zero_grad(m.parameters());
    const auto dx = m.backward(cache, target);

    auto pattern = [](const MlpCache& c) {
      std::vector<char> p;
      for (std::size_t l = 1; l < c.acts.size(); ++l)
        for (double a : c.acts[l]) p.push_back(a > 0.0);
      return p;
    };
    const auto base = pattern(cache);
    // central difference; skipped when the step crosses a ReLU kink
    auto probe = [&](double& slot, double analytic) {
      const double keep = slot;
      MlpCache up, down;
      slot = keep + eps;
      const double lu = cross_entropy(m.forward(x, head, legal, Mode::eval, nullptr, &up), target);
      slot = keep - eps;
      const double ld = cross_entropy(m.forward(x, head, legal, Mode::eval, nullptr, &down), target);
      slot = keep;
      if (pattern(up) != base || pattern(down) != base) {
        ++kinks;
        return;
      }
      const double numeric = (lu - ld) / (2 * eps);
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(analytic - numeric) / denom);
      ++coords;
    };
    for (int k = 0; k < 40; ++k) {
      const std::size_t i = rng() % x.size();
      probe(x[i], dx[i]);
    }
    for (Tensor* t : m.parameters())
      for (int k = 0; k < 40; ++k) {
        const std::size_t i = rng() % t->size();
        probe(t->value[i], t->grad[i]);
      }
  }
  std::ostringstream o;
  o << "max relative error " << worst << " over " << coords << " coordinates in 20 draws (input "
    << spec.input_dim << ", hidden 320/160; " << kinks << " kink-crossing probes skipped)";
  return {worst < 1e-4 && coords > 0, o.str()};
}

// --- 4 --------------------------------------------------------------------

std::vector<Utterance> utterances(std::span<const DepTree> trees) {
  std::vector<Utterance> u;
  for (const auto& t : trees) u.push_back(t.utterance);
  return u;
}

Outcome toy_parsing() {
  const auto t0 = std::chrono::steady_clock::now();
  auto trees = toy_grammar_trees(200, 7);
  std::vector<DepTree> train(trees.begin(), trees.begin() + 160), dev(trees.begin() + 160, trees.begin() + 180),
      test(trees.begin() + 180, trees.end());
  auto utts = utterances(train);
  auto lk = LookupProvider::build(utts, kDeskEmbeddingDim, 5);
  ParserModel m(ActionInventory::from_trees(train), FeatureSpec{}, MlpSpec{}, lk.describe(), lk, 5);
  TrainRegime reg;
  reg.seed = 5;
  auto res = train_parser(m, train, dev, reg);
  auto rep = attachment_scores(test, decode(m, utterances(test)));
  const double secs = seconds_since(t0);
  std::ostringstream o;
  o << "test LAS " << fmt(rep.las(), 2) << ", UPOS " << fmt(rep.upos(), 2) << " (best dev epoch "
    << res.best_epoch << " of " << reg.epochs << ", " << fmt(secs, 1) << " s)";
  return {rep.las() >= 95.0 && rep.upos() >= 98.0 && secs < 300.0, o.str()};
}

// --- 5 --------------------------------------------------------------------

// Top-down memoised recursion over suffixes, then a walk that prefers
// match/substitution, then deletion, then insertion from the end.
AlignmentCounts reference_alignment(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> d = [&](std::size_t i, std::size_t j) -> std::size_t {
    if (i == 0) return j;
    if (j == 0) return i;
    auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const std::size_t v = std::min({d(i - 1, j - 1) + (a[i - 1] == b[j - 1] ? 0u : 1u), d(i - 1, j) + 1,
                                    d(i, j - 1) + 1});
    memo[key] = v;
    return v;
  };
  AlignmentCounts c;
  c.ref_length = a.size();
  std::size_t i = a.size(), j = b.size();
  while (i > 0 || j > 0) {
    const std::size_t here = d(i, j);
    if (i > 0 && j > 0 && d(i - 1, j - 1) + (a[i - 1] == b[j - 1] ? 0u : 1u) == here) {
      c.substitutions += a[i - 1] != b[j - 1];
      --i, --j;
    } else if (i > 0 && d(i - 1, j) + 1 == here) {
      ++c.deletions;
      --i;
    } else {
      ++c.insertions;
      --j;
    }
  }
  return c;
}

Outcome concept_error_rates() {
  std::mt19937_64 rng(55);
  const std::vector<std::string> sym{"cmd-task", "nb-room", "room-type", "loc-city"};
  std::size_t bad_total = 0, bad_split = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::string> a, b;
    for (auto n = rng() % 9; n > 0; --n) a.push_back(sym[rng() % sym.size()]);
    for (auto n = rng() % 9; n > 0; --n) b.push_back(sym[rng() % sym.size()]);
    const auto got = align_error_rate(a, b);
    const auto want = reference_alignment(a, b);
    bad_total += got.errors() != want.errors();
    bad_split += !(got == want);
  }
  auto make = [](const std::string& tags) {
    SluSample s;
    s.utterance = Utterance::from_words(split_ws("i would like to book one double room in paris"));
    s.bio = split_ws(tags);
    return s;
  };
  std::vector<SluSample> ref{make(
      "B-cmd-task I-cmd-task I-cmd-task I-cmd-task I-cmd-task B-nb-room B-room-type I-room-type O B-loc-city")};
  std::vector<SluSample> hyp{
      make("B-cmd-task I-cmd-task I-cmd-task I-cmd-task I-cmd-task O B-room-type I-room-type O B-loc-city")};
  const double cer = 100.0 * score_slu(ref, hyp, ValueRules{}, SluMetric::cer).rate();
  std::ostringstream o;
  o << bad_total << "/1000 error-count and " << bad_split << "/1000 S/D/I mismatches vs reference; "
    << "hotel example without nb-room: CER " << fmt(cer, 2) << "%";
  return {bad_total == 0 && bad_split == 0 && std::abs(cer - 25.0) < 1e-9, o.str()};
}

// --- 6 --------------------------------------------------------------------

Outcome bio_round_trip() {
  std::mt19937_64 rng(66);
  const std::vector<std::string> concepts{"a", "b", "c"};
  std::size_t bad_tags = 0, bad_spans = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = rng() % 15;
    std::vector<std::string> words;
    for (std::size_t i = 0; i < n; ++i) words.push_back("w" + std::to_string(i));
    // valid tags
    std::vector<std::string> tags;
    for (std::size_t i = 0; i < n; ++i) {
      const auto k = rng() % 3;
      const auto& c = concepts[rng() % 3];
      if (k == 0) tags.push_back("O");
      else if (k == 2 && i > 0 && tags.back() != "O") tags.push_back("I-" + tags.back().substr(2));
      else tags.push_back("B-" + c);
    }
    bad_tags += bio_encode(bio_decode(tags, words), n) != tags;
    // random non-overlapping spans
    std::vector<ConceptSpan> spans;
    for (std::size_t i = 0; i < n;) {
      if (rng() % 2) {
        const std::size_t len = 1 + rng() % 3;
        const std::size_t end = std::min(n, i + len);
        std::string surface;
        for (std::size_t k = i; k < end; ++k) surface += (k > i ? " " : "") + words[k];
        spans.push_back({concepts[rng() % 3], static_cast<int>(i + 1), static_cast<int>(end), surface, surface});
        i = end;
      } else {
        ++i;
      }
    }
    bad_spans += bio_decode(bio_encode(spans, n), words) != spans;
  }
  const auto words = split_ws("i would like to book one double room in paris");
  const auto d = split_ws(
      "B-cmd-task I-cmd-task I-cmd-task I-cmd-task I-cmd-task B-nb-room B-room-type I-room-type O B-loc-city");
  const std::vector<std::pair<std::string, std::string>> expected{
      {"cmd-task", "i would like to book"}, {"nb-room", "one"}, {"room-type", "double room"}, {"loc-city", "paris"}};
  auto spans = bio_decode(d, words);
  bool table = spans.size() == expected.size();
  for (std::size_t i = 0; table && i < spans.size(); ++i)
    table = spans[i].concept_name == expected[i].first && spans[i].surface == expected[i].second;
  std::ostringstream o;
  o << bad_tags << "/1000 tag and " << bad_spans << "/1000 span round-trip failures; hotel example "
    << (table ? "decodes to the four expected spans" : "does NOT decode to the expected spans");
  return {bad_tags == 0 && bad_spans == 0 && table, o.str()};
}

// --- 7 --------------------------------------------------------------------

Outcome bpe_checks() {
  auto first = bpe_train(std::vector<std::string>{"aaab aaab aab"}, 5);
  const bool merge_ok = !first.merges().empty() && first.merges()[0] == BpeModel::Merge{"a", "a"};
  auto trees = toy_grammar_trees(200, 7);
  std::vector<std::string> lines;
  for (const auto& t : trees) lines.push_back(t.utterance.text());
  auto m1 = bpe_train(lines, 80), m2 = bpe_train(lines, 80);
  const bool det = m1.merges() == m2.merges() && m1.vocab() == m2.vocab();
  std::mt19937_64 rng(77);
  const std::vector<std::string> chars{"a", "e", "i", "o", "u", "l", "r", "s", "t", "é", "è", "ç", "'"};
  std::size_t bad = 0;
  for (int i = 0; i < 10000; ++i) {
    std::string w;
    for (auto k = 1 + rng() % 10; k > 0; --k) w += chars[rng() % chars.size()];
    bad += m1.decode(m1.encode(w)) != w;
  }
  std::ostringstream o;
  o << "first merge " << (first.merges().empty() ? "(none)" : first.merges()[0].first + "+" + first.merges()[0].second)
    << ", repeated training " << (det ? "identical" : "DIFFERS") << ", " << bad << "/10000 round-trip failures";
  return {merge_ok && det && bad == 0, o.str()};
}

// --- 8 --------------------------------------------------------------------

Outcome closed_form_metrics() {
  const std::vector<std::string> gold{"a", "a", "b", "c"}, pred{"a", "a", "x", "c"};
  const double f1 = weighted_f1(gold, pred);
  const double q = student_t_quantile(0.975, 9);
  const std::vector<double> flat(7, 3.25);
  const double hw0 = t_confidence_interval(flat).half_width;
  std::mt19937_64 rng(88);
  std::normal_distribution<double> nd(10.0, 3.0);
  const int trials = 20000;
  int hit = 0;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> v(10);
    for (auto& x : v) x = nd(rng);
    auto ci = t_confidence_interval(v);
    hit += std::abs(ci.mean - 10.0) <= ci.half_width;
  }
  const double cov = 100.0 * hit / trials;
  std::ostringstream o;
  o << "weighted F1 " << fmt(f1) << ", t(0.975, 9) = " << fmt(q, 6) << ", constant-input half width " << hw0
    << ", coverage " << fmt(cov, 2) << "% over " << trials << " samples";
  return {std::abs(f1 - 0.75) < 1e-12 && std::abs(q - 2.2622) < 1e-3 && hw0 == 0.0 && std::abs(cov - 95.0) <= 1.0,
          o.str()};
}

// --- 9 --------------------------------------------------------------------

Outcome svm_checks() {
  std::vector<SparseVector> x{to_sparse(std::vector<double>{1, 1}), to_sparse(std::vector<double>{-1, -1}),
                              to_sparse(std::vector<double>{1, -1}), to_sparse(std::vector<double>{-1, 1})};
  std::vector<int> y{1, 1, -1, -1};
  SvmConfig cfg;
  cfg.C = 10.0;
  auto m = svm_train(x, y, cfg);
  int right = 0;
  for (std::size_t i = 0; i < x.size(); ++i) right += m.predict(x[i]) == y[i];
  const double resid = std::abs(m.dual_residual());

  auto docs = toy_documents(600, 10);
  ClassifierFactory f = [](std::uint64_t) { return std::make_unique<TfidfSvmClassifier>(5000); };
  auto rep = run_splits(docs, 10, 480, 120, f, 9);
  const double lowest = *std::min_element(rep.f1.begin(), rep.f1.end());
  std::ostringstream o;
  o << "XOR " << right << "/4 correct, |sum alpha_i y_i| = " << resid << "; toy TF-IDF SVM weighted F1 "
    << format_pm(rep.mean, rep.ci ? rep.ci->half_width : 0.0, 3) << " over 10 splits (lowest " << fmt(lowest, 3) << ")";
  return {right == 4 && resid < 1e-6 && rep.mean >= 0.95, o.str()};
}

// --- 10 -------------------------------------------------------------------

Outcome repunc_containment() {
  auto trees = toy_grammar_trees(120, 3);
  std::vector<DepTree> train(trees.begin(), trees.begin() + 80), dev(trees.begin() + 80, trees.begin() + 100),
      test(trees.begin() + 100, trees.end());
  CharNgramConfig cc;
  cc.dim = 32;
  CharNgramProvider prov(cc);
  FeatureSpec fs;
  fs.d_w = cc.dim;
  MlpSpec ms;
  ms.hidden_dims = {64, 32};
  ParserModel model(ActionInventory::from_trees(train), fs, ms, prov.describe(), std::nullopt, 1);
  TrainRegime reg;
  reg.epochs = 3;
  reg.repunc = true;
  train_parser(model, train, dev, reg, &prov, &prov);

  auto utts = utterances(test);
  auto punct = repunctuate(utts);
  auto out = decode(model, punct, &prov);
  std::size_t bad_trees = 0;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    std::vector<std::string> want;
    for (const auto& t : punct[i].tokens)
      if (!t.synthetic) want.push_back(t.surface);
    bad_trees += out[i].forms() != want || out[i].heads.size() != want.size();
  }
  // byte-exact recovery through the JSON lines format
  auto dir = std::filesystem::temp_directory_path() / "oral_acceptance";
  std::filesystem::create_directories(dir);
  write_utterances(dir / "orig.jsonl", utts);
  write_utterances(dir / "punct.jsonl", punct);
  write_utterances(dir / "back.jsonl", strip_synthetic(read_utterances(dir / "punct.jsonl")));
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const bool exact = slurp(dir / "orig.jsonl") == slurp(dir / "back.jsonl");
  std::ostringstream o;
  o << bad_trees << "/" << utts.size() << " trees contain synthetic tokens or miss real ones; stripped corpus "
    << (exact ? "is byte-identical to the original" : "DIFFERS from the original");
  return {bad_trees == 0 && exact, o.str()};
}

// --- 11 -------------------------------------------------------------------

Outcome smoke_pipeline(const std::string& script, const std::string& cli, const std::string& data,
                       const std::filesystem::path& work) {
  if (script.empty() || cli.empty() || data.empty()) return {false, "no --script/--cli/--data given"};
  const auto t0 = std::chrono::steady_clock::now();
  auto run = [&](const std::string& sub) {
    const std::string cmd = "bash '" + script + "' '" + cli + "' '" + data + "' '" + (work / sub).string() + "' 7";
    return std::system(cmd.c_str());
  };
  const int a = run("run1");
  const int b = run("run2");
  const double secs = seconds_since(t0);
  std::size_t files = 0, differ = 0;
  if (a == 0 && b == 0) {
    for (const auto& e : std::filesystem::recursive_directory_iterator(work / "run1")) {
      if (!e.is_regular_file()) continue;
      const auto rel = std::filesystem::relative(e.path(), work / "run1");
      std::ifstream x(e.path(), std::ios::binary), y(work / "run2" / rel, std::ios::binary);
      std::string sx(std::istreambuf_iterator<char>(x), {}), sy(std::istreambuf_iterator<char>(y), {});
      ++files;
      if (sx != sy) {
        ++differ;
        std::cerr << "differs: " << rel.string() << "\n";
      }
    }
  }
  std::ostringstream o;
  o << "exit codes " << a << "/" << b << ", " << files << " output files, " << differ
    << " differ between two seeded runs, " << fmt(secs, 1) << " s for both";
  return {a == 0 && b == 0 && files > 0 && differ == 0 && secs < 600.0, o.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string script, cli, data, work = (std::filesystem::temp_directory_path() / "oral_smoke").string();
  std::vector<int> only;
  app.add_option("--script", script, "smoke pipeline script");
  app.add_option("--cli", cli, "oral executable");
  app.add_option("--data", data, "toy data directory");
  app.add_option("--work", work, "scratch directory for the pipeline runs");
  app.add_option("--only", only, "run these criteria only");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"dynamic oracle cost equals brute-force loss delta", dynamic_cost_exhaustive},
      {"oracle completeness", oracle_completeness},
      {"MLP gradient check", gradient_check},
      {"toy grammar parsing", toy_parsing},
      {"CER/CVER alignment oracle", concept_error_rates},
      {"BIO round trip", bio_round_trip},
      {"BPE", bpe_checks},
      {"closed-form metrics", closed_form_metrics},
      {"SVM", svm_checks},
      {"repunctuation containment", repunc_containment},
      {"end-to-end CLI pipeline", [&] { return smoke_pipeline(script, cli, data, work); }},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k + 1);
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome r;
    try {
      r = criteria[k].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    failed += !r.pass;
    std::cout << (r.pass ? "PASS" : "FAIL") << " [" << id << "] " << criteria[k].first << ": " << r.detail
              << std::endl;
  }
  return failed ? 1 : 0;
}

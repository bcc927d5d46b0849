#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "gen.hpp"
#include "oral/error.hpp"
#include "oral/metrics.hpp"
#include "oral/util.hpp"

using namespace oral;

namespace {

// Plain recursion, exponential; fine for sequences up to ~7.
std::size_t ref_edit(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  const std::size_t sub = ref_edit(a.subspan(1), b.subspan(1)) + (a[0] == b[0] ? 0 : 1);
  const std::size_t del = ref_edit(a.subspan(1), b) + 1;
  const std::size_t ins = ref_edit(a, b.subspan(1)) + 1;
  return std::min({sub, del, ins});
}

// Closed-form Student t CDF for integer degrees of freedom.
double ref_t_cdf(double t, int df) {
  const double th = std::atan(t / std::sqrt(static_cast<double>(df)));
  const double s = std::sin(th), c = std::cos(th);
  double a;
  if (df % 2 == 0) {
    double term = 1.0, sum = 1.0;
    for (int k = 1; k <= (df - 2) / 2; ++k) {
      term *= (2.0 * k - 1) / (2.0 * k) * c * c;
      sum += term;
    }
    a = s * sum;
  } else {
    double sum = 0.0;
    if (df > 1) {
      double term = c;
      sum = c;
      for (int k = 1; k <= (df - 3) / 2; ++k) {
        term *= (2.0 * k) / (2.0 * k + 1) * c * c;
        sum += term;
      }
    }
    a = 2.0 / std::numbers::pi * (th + s * sum);
  }
  return 0.5 + 0.5 * a;
}

double ref_t_quantile(double p, int df) {
  double lo = -1e3, hi = 1e3;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (ref_t_cdf(mid, df) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

DepTree make_tree(std::vector<std::string> words, std::vector<int> heads, std::vector<std::string> labels,
                  std::vector<std::string> pos) {
  DepTree t;
  t.utterance = Utterance::from_words(words);
  t.heads = std::move(heads);
  t.labels = std::move(labels);
  t.pos = std::move(pos);
  return t;
}

}  // namespace

TEST_CASE("edit distance examples") {
  const std::vector<std::string> r{"a", "b", "c", "d"};
  auto same = align_error_rate(r, r);
  CHECK(same.errors() == 0);
  CHECK(same.rate() == 0.0);
  const std::vector<std::string> h{"a", "x", "c"};
  auto c = align_error_rate(r, h);
  CHECK(c.substitutions == 1);
  CHECK(c.deletions == 1);
  CHECK(c.insertions == 0);
  CHECK(c.rate() == doctest::Approx(0.5));
  const std::vector<std::string> empty;
  CHECK(align_error_rate(empty, r).insertions == 4);
  CHECK_THROWS(align_error_rate(empty, r).rate());
  // tie: substitution preferred over deletion + insertion
  const std::vector<std::string> a1{"a"}, b1{"b"};
  CHECK(align_error_rate(a1, b1) == AlignmentCounts{1, 0, 0, 1});
}

TEST_CASE("edit distance agrees with brute force") {
  gen::Rng r(6);
  const std::vector<std::string> sym{"a", "b", "c"};
  for (int trial = 0; trial < 1500; ++trial) {
    std::vector<std::string> a, b;
    for (int i = r.uniform(0, 6); i > 0; --i) a.push_back(r.pick(sym));
    for (int i = r.uniform(0, 6); i > 0; --i) b.push_back(r.pick(sym));
    auto c = align_error_rate(a, b);
    CHECK(c.errors() == ref_edit(a, b));
    CHECK(c.ref_length == a.size());
    CHECK(b.size() == a.size() - c.deletions + c.insertions);
    CHECK(c.substitutions + c.deletions <= a.size());
  }
}

TEST_CASE("weighted F1") {
  const std::vector<std::string> gold{"a", "a", "b", "c"}, pred{"a", "a", "d", "c"};
  // per-class F1 (1, 0, 1), supports (2, 1, 1)
  CHECK(weighted_f1(gold, pred) == doctest::Approx(0.75));
  CHECK(weighted_f1(gold, gold) == doctest::Approx(1.0));
  const std::vector<std::string> g2{"a", "b"}, p2{"b", "a"};
  CHECK(weighted_f1(g2, p2) == doctest::Approx(0.0));
  // a: P 1/2 R 1 -> 2/3 ; b: 0
  const std::vector<std::string> g3{"a", "b"}, p3{"a", "a"};
  CHECK(weighted_f1(g3, p3) == doctest::Approx(1.0 / 3.0));
  const std::vector<std::string> shorter{"a"};
  CHECK_THROWS(weighted_f1(gold, shorter));
}

TEST_CASE("student t against the closed form") {
  for (int df : {1, 2, 3, 4, 5, 9, 10, 29}) {
    for (double t : {-4.0, -1.5, -0.2, 0.0, 0.7, 2.0, 6.0})
      CHECK(student_t_cdf(t, df) == doctest::Approx(ref_t_cdf(t, df)).epsilon(1e-9));
    for (double p : {0.025, 0.1, 0.5, 0.9, 0.95, 0.975, 0.995})
      CHECK(student_t_quantile(p, df) == doctest::Approx(ref_t_quantile(p, df)).epsilon(1e-7));
  }
  CHECK(student_t_quantile(0.975, 9) == doctest::Approx(2.262157).epsilon(1e-6));
  CHECK(student_t_quantile(0.975, 1) == doctest::Approx(12.706205).epsilon(1e-6));
  // fractional df: between the neighbours
  const double q = student_t_quantile(0.975, 4.5);
  CHECK(q < student_t_quantile(0.975, 4));
  CHECK(q > student_t_quantile(0.975, 5));
}

TEST_CASE("confidence intervals") {
  const std::vector<double> v{1, 2, 3, 4, 5};
  auto ci = t_confidence_interval(v);
  CHECK(ci.mean == doctest::Approx(3.0));
  CHECK(ci.stddev == doctest::Approx(std::sqrt(2.5)));
  CHECK(ci.n == 5);
  CHECK(ci.half_width == doctest::Approx(ref_t_quantile(0.975, 4) * std::sqrt(2.5) / std::sqrt(5.0)));
  auto c90 = t_confidence_interval(v, 0.9);
  CHECK(c90.half_width < ci.half_width);
  const std::vector<double> flat{2, 2, 2};
  CHECK(t_confidence_interval(flat).half_width == 0.0);
  const std::vector<double> one{1};
  CHECK_THROWS(t_confidence_interval(one));
  CHECK(format_pm(12.345, 0.5) == "12.35 ± 0.50");
  CHECK(format_pm(1, 0.25, 1) == "1.0 ± 0.2");
}

TEST_CASE("interval coverage on synthetic normal samples") {
  gen::Rng r(12);
  int hit = 0;
  const int trials = 2000;
  for (int i = 0; i < trials; ++i) {
    std::vector<double> v(8);
    for (auto& x : v) x = 5.0 + 2.0 * r.normal();
    auto ci = t_confidence_interval(v);
    hit += std::abs(ci.mean - 5.0) <= ci.half_width;
  }
  CHECK(static_cast<double>(hit) / trials == doctest::Approx(0.95).epsilon(0.02));
}

TEST_CASE("attachment scores") {
  auto g = make_tree({"le", "chat", "dort"}, {2, 3, 0}, {"det", "nsubj", "root"}, {"DET", "NOUN", "VERB"});
  auto p = make_tree({"le", "chat", "dort"}, {2, 3, 0}, {"det", "obj", "root"}, {"DET", "VERB", "VERB"});
  std::vector<DepTree> gs{g}, ps{p};
  auto rep = attachment_scores(gs, ps);
  CHECK(rep.uas() == doctest::Approx(100.0));
  CHECK(rep.las() == doctest::Approx(200.0 / 3));
  CHECK(rep.upos() == doctest::Approx(200.0 / 3));
  CHECK(rep.delta_las() == 0.0);

  auto sub = attachment_scores(gs, ps, [](const DepTree&, std::size_t i) { return i == 1; }, "second");
  REQUIRE(sub.subset);
  CHECK(sub.subset->tokens == 1);
  CHECK(sub.subset->las() == 0.0);
  CHECK(sub.delta_las() == doctest::Approx(-200.0 / 3));
  CHECK(sub.to_json()["subset"]["name"] == "second");

  auto other = make_tree({"le", "chien", "dort"}, {2, 3, 0}, {"det", "nsubj", "root"}, {"DET", "NOUN", "VERB"});
  std::vector<DepTree> os{other};
  CHECK_THROWS_AS(attachment_scores(gs, os), ValidationError);
  std::vector<DepTree> none;
  CHECK_THROWS_AS(attachment_scores(gs, none), ValidationError);
}

TEST_CASE("OOV marking") {
  auto t = make_tree({"le", "zèbre"}, {2, 0}, {"det", "root"}, {"DET", "NOUN"});
  std::vector<DepTree> ts{t};
  mark_oov(ts, {"le"});
  CHECK(ts[0].utterance.tokens[0].oov == false);
  CHECK(ts[0].utterance.tokens[1].oov == true);
  const auto dir = std::filesystem::temp_directory_path() / "oral_unit";
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "lex.txt");
    out << "le\nchat\n\n";
  }
  CHECK(read_lexicon(dir / "lex.txt") == std::set<std::string>{"le", "chat"});
}

TEST_CASE("text table layout") {
  auto s = text_table({"name", "F1"}, {{"svm", "0.98"}, {"mlp-long", "1"}});
  CHECK(s ==
        "name        F1\n"
        "--------------\n"
        "svm       0.98\n"
        "mlp-long     1\n");
  // widths count code points
  auto u = text_table({"x"}, {{"é"}});
  CHECK(u == "x\n-\né\n");
}

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "support/oracles.hpp"
#include "tailsieve/evaluation.hpp"
#include "tailsieve/util.hpp"

using namespace tailsieve;

namespace {

Span sp(const std::string& tid, const std::string& sid, std::optional<std::string> parent,
        const std::string& svc, const std::string& op, int64_t start = 0, int64_t dur = 1000) {
  Span s;
  s.trace_id = tid;
  s.span_id = sid;
  s.parent_span_id = std::move(parent);
  s.service = svc;
  s.operation = op;
  s.start_ns = start;
  s.duration_ns = dur;
  return s;
}

Trace mk(std::vector<Span> spans) {
  auto t = assemble_trace(std::move(spans), nullptr);
  REQUIRE(t.has_value());
  return *t;
}

// six traces, two endpoints, three shapes, five pair-set patterns
std::vector<Trace> tiny_corpus() {
  std::vector<Trace> corpus;
  corpus.push_back(mk({sp("A1", "s1", std::nullopt, "alpha", "entry")}));
  corpus.push_back(mk({sp("A2", "s1", std::nullopt, "alpha", "entry")}));
  corpus.push_back(mk({sp("B1", "s1", std::nullopt, "beta", "entry")}));
  corpus.push_back(mk({sp("C1", "s1", std::nullopt, "alpha", "entry"),
                       sp("C1", "s2", "s1", "gamma", "op", 100, 500)}));
  auto err = sp("D1", "s1", std::nullopt, "alpha", "entry");
  err.status = SpanStatus::kError;
  corpus.push_back(mk({err}));
  auto logged = sp("E1", "s1", std::nullopt, "alpha", "entry");
  logged.logs.push_back({50, LogLevel::kInfo, "hello world", std::nullopt});
  corpus.push_back(mk({logged}));
  return corpus;
}

}  // namespace

TEST_SUITE("evaluation") {
  TEST_CASE("canonical path sorts, nests, and collapses duplicates") {
    CHECK(canonical_path(mk({sp("t", "s1", std::nullopt, "alpha", "entry")})) == "alpha/entry");

    CHECK(canonical_path(mk({sp("t", "s1", std::nullopt, "alpha", "entry"),
                             sp("t", "s2", "s1", "gamma", "op"),
                             sp("t", "s3", "s1", "beta", "op")})) ==
          "alpha/entry(beta/op,gamma/op)");

    // identical parallel subtrees collapse to one
    CHECK(canonical_path(mk({sp("t", "s1", std::nullopt, "alpha", "entry"),
                             sp("t", "s2", "s1", "beta", "op"),
                             sp("t", "s3", "s1", "beta", "op")})) == "alpha/entry(beta/op)");

    CHECK(canonical_path(mk({sp("t", "s1", std::nullopt, "alpha", "entry"),
                             sp("t", "s2", "s1", "beta", "mid"),
                             sp("t", "s3", "s2", "gamma", "leaf")})) ==
          "alpha/entry(beta/mid(gamma/leaf))");

    // same label, different subtree: both survive
    CHECK(canonical_path(mk({sp("t", "s1", std::nullopt, "alpha", "entry"),
                             sp("t", "s2", "s1", "beta", "op"),
                             sp("t", "s3", "s1", "beta", "op"),
                             sp("t", "s4", "s3", "x", "y")})) ==
          "alpha/entry(beta/op,beta/op(x/y))");
  }

  TEST_CASE("canonical path appends orphan subtrees in sorted order") {
    CHECK(canonical_path(mk({sp("t", "s1", std::nullopt, "alpha", "entry"),
                             sp("t", "s2", "zz", "delta", "z"),
                             sp("t", "s3", "yy", "beta", "a")})) ==
          "alpha/entry|beta/a|delta/z");

    CHECK(canonical_path(mk({sp("t", "s1", std::nullopt, "alpha", "entry"),
                             sp("t", "s2", "zz", "beta", "op"),
                             sp("t", "s3", "s2", "gamma", "leaf")})) ==
          "alpha/entry|beta/op(gamma/leaf)");
  }

  TEST_CASE("corpus index counts endpoints, paths, and patterns") {
    auto index = CorpusIndex::build(tiny_corpus());
    CHECK(index.size() == 6);
    CHECK(index.endpoint_count() == 2);
    CHECK(index.path_count() == 3);
    CHECK(index.pattern_count() == 5);
    size_t total = 0;
    for (size_t f : index.pattern_freq()) total += f;
    CHECK(total == 6);
    CHECK(index.rare_threshold() == 1);

    CHECK(index.by_trace_id("A1").pattern_id == index.by_trace_id("A2").pattern_id);
    CHECK(index.by_trace_id("A1").path_id == index.by_trace_id("D1").path_id);
    CHECK(index.by_trace_id("A1").pattern_id != index.by_trace_id("D1").pattern_id);
    CHECK(index.by_trace_id("A1").pattern_id != index.by_trace_id("E1").pattern_id);
    CHECK(index.by_trace_id("C1").path_id != index.by_trace_id("A1").path_id);

    CHECK(index.by_trace_id("D1").anomalous);       // failed root span scores 5
    CHECK(index.by_trace_id("D1").anomaly == 5.0);
    CHECK_FALSE(index.by_trace_id("E1").anomalous);  // an INFO log scores nothing

    CHECK_THROWS_AS(index.by_trace_id("nope"), DataError);
  }

  TEST_CASE("rare threshold scales with corpus size") {
    CHECK(CorpusIndex::build(tiny_corpus()).rare_threshold() == 1);
    Rng rng(0xabcdULL);
    std::vector<Trace> corpus;
    for (size_t i = 0; i < 2500; ++i) corpus.push_back(oracle::random_trace(rng, i));
    CHECK(CorpusIndex::build(corpus).rare_threshold() == 2);
  }

  TEST_CASE("metrics on a hand-counted sample") {
    auto index = CorpusIndex::build(tiny_corpus());
    auto report = compute_metrics(index, {"A1", "B1", "D1"});
    CHECK(report.corpus_size == 6);
    CHECK(report.sample_size == 3);
    CHECK(report.api_coverage == 1.0);
    CHECK(report.path_coverage == 2.0 / 3.0);
    CHECK(report.pattern_coverage == 3.0 / 5.0);
    CHECK(report.shannon_entropy_bits == doctest::Approx(std::log2(3.0)));
    CHECK(report.proportion_anomaly == 1.0 / 3.0);
    CHECK(report.proportion_rare == 2.0 / 3.0);  // B1 and D1 patterns are singletons
    CHECK(report.bcr == 1.0);
    CHECK(report.actual_rate == 0.5);
    CHECK_FALSE(report.proportion_anomaly_labeled.has_value());
  }

  TEST_CASE("duplicate patterns lower entropy and bcr") {
    auto index = CorpusIndex::build(tiny_corpus());
    auto report = compute_metrics(index, {"A1", "A2"});
    CHECK(report.shannon_entropy_bits == 0.0);  // one class
    CHECK(report.bcr == 0.5);
    CHECK(report.pattern_coverage == 1.0 / 5.0);
  }

  TEST_CASE("empty sample scores zero without dividing by zero") {
    auto index = CorpusIndex::build(tiny_corpus());
    auto report = compute_metrics(index, {});
    CHECK(report.sample_size == 0);
    CHECK(report.api_coverage == 0.0);
    CHECK(report.shannon_entropy_bits == 0.0);
    CHECK(report.actual_rate == 0.0);
  }

  TEST_CASE("labeled anomaly rate needs every sampled id labeled") {
    auto index = CorpusIndex::build(tiny_corpus());
    std::unordered_map<std::string, bool> full{{"A1", true}, {"B1", false}, {"D1", true}};
    auto report = compute_metrics(index, {"A1", "B1", "D1"}, &full);
    REQUIRE(report.proportion_anomaly_labeled.has_value());
    CHECK(*report.proportion_anomaly_labeled == 2.0 / 3.0);

    std::unordered_map<std::string, bool> partial{{"A1", true}};
    CHECK_FALSE(compute_metrics(index, {"A1", "B1"}, &partial)
                    .proportion_anomaly_labeled.has_value());
  }

  TEST_CASE("unknown sample ids are a hard error") {
    auto index = CorpusIndex::build(tiny_corpus());
    CHECK_THROWS_AS(compute_metrics(index, {"A1", "ghost"}), DataError);
  }

  TEST_CASE("empty corpus cannot be evaluated") {
    auto index = CorpusIndex::build({});
    CHECK(index.size() == 0);
    CHECK_THROWS_AS(compute_metrics(index, {}), DataError);
  }

  TEST_CASE("random sample draws the rounded count in corpus order") {
    std::vector<std::string> ids;
    for (int i = 0; i < 100; ++i) ids.push_back("t" + std::to_string(1000 + i));

    auto s = random_sample(ids, 0.1, 7);
    CHECK(s.size() == 10);
    CHECK(random_sample(ids, 0.1, 7) == s);       // deterministic
    CHECK(random_sample(ids, 0.1, 8) != s);       // seed matters
    size_t pos = 0;
    for (const auto& id : s) {
      // subset, distinct, and in corpus order
      while (pos < ids.size() && ids[pos] != id) ++pos;
      CHECK(pos < ids.size());
      ++pos;
    }

    CHECK(random_sample(ids, 0.0, 1).empty());
    CHECK(random_sample(ids, 1.0, 1) == ids);
    std::vector<std::string> ten(ids.begin(), ids.begin() + 10);
    CHECK(random_sample(ten, 0.25, 3).size() == 3);  // round half away from zero
  }

  TEST_CASE("csv output is stable and column-aligned with the header") {
    CHECK(metrics_csv_header() ==
          "sampler,rate,seed,sample_size,api_coverage,path_coverage,pattern_coverage,"
          "shannon_entropy_bits,proportion_anomaly,proportion_rare,bcr,actual_rate");
    MetricsReport r;
    r.sampler = "x";
    r.corpus_size = 100;
    r.sample_size = 5;
    r.api_coverage = 0.5;
    r.path_coverage = 0.25;
    r.pattern_coverage = 0.75;
    r.shannon_entropy_bits = 1.5;
    r.proportion_anomaly = 0.2;
    r.proportion_rare = 0.4;
    r.bcr = 0.8;
    r.actual_rate = 0.05;
    CHECK(metrics_csv_row(r) ==
          "x,0.050000,-,5,0.500000,0.250000,0.750000,1.500000,0.200000,0.400000,0.800000,"
          "0.050000");
    r.seed = 42;
    CHECK(metrics_csv_row(r).find(",42,") != std::string::npos);
  }

  TEST_CASE("json output carries the optional blocks only when set") {
    MetricsReport r;
    r.sampler = "x";
    r.corpus_size = 10;
    r.sample_size = 2;
    auto j = nlohmann::json::parse(metrics_to_json(r));
    CHECK(j["sampler"] == "x");
    CHECK(j["corpus_size"] == 10);
    CHECK_FALSE(j.contains("runtime"));
    CHECK_FALSE(j.contains("seed"));
    CHECK_FALSE(j.contains("proportion_anomaly_labeled"));

    r.seed = 9;
    r.proportion_anomaly_labeled = 0.5;
    r.runtime = RuntimeStats{1.5, 1.0, 3.0, 10};
    j = nlohmann::json::parse(metrics_to_json(r));
    CHECK(j["seed"] == 9);
    CHECK(j["proportion_anomaly_labeled"] == 0.5);
    CHECK(j["runtime"]["traces"] == 10);
    CHECK(j["runtime"]["mean_ms"] == 1.5);
  }

  TEST_CASE("comparison table lines up one row per report") {
    MetricsReport a;
    a.sampler = "gleaner";
    MetricsReport b;
    b.sampler = "random";
    const std::string table = metrics_table({a, b});
    CHECK(table.find("pattern_cov") != std::string::npos);
    CHECK(table.find("gleaner") != std::string::npos);
    CHECK(table.find("random") != std::string::npos);
    CHECK(std::count(table.begin(), table.end(), '\n') == 3);
  }
}

#include <sstream>

#include "doctest.h"
#include "tailsieve/trace_model.hpp"
#include "tailsieve/workload_gen.hpp"

using namespace tailsieve;

namespace {

std::string motif_jsonl() {
  std::string out;
  for (const Span& s : blind_spot_motif_trace().spans) out += span_to_jsonl(s) + "\n";
  return out;
}

}  // namespace

TEST_SUITE("trace_model") {
  TEST_CASE("span line round trips byte for byte") {
    const std::string line =
        R"({"duration_ns":200000000,"logs":[{"level":"ERROR","message":"boom","ts_ns":1010}],)"
        R"("operation":"queryForTravel","parent_span_id":null,"service":"ts-basic-service",)"
        R"("span_id":"s1","start_ns":1000,"status":"OK","trace_id":"t1"})";
    std::string error;
    auto span = parse_span_line(line, &error);
    REQUIRE(span.has_value());
    CHECK(span->service == "ts-basic-service");
    CHECK(span->logs.size() == 1);
    CHECK(span->logs[0].level == LogLevel::kError);
    CHECK(span_to_jsonl(*span) == line);
  }

  TEST_CASE("malformed span lines are rejected with a reason") {
    std::string error;
    CHECK_FALSE(parse_span_line("not json", &error).has_value());
    CHECK_FALSE(error.empty());
    CHECK_FALSE(parse_span_line("{}", &error).has_value());
    CHECK_FALSE(parse_span_line(
                    R"({"trace_id":"t","span_id":"s","parent_span_id":null,"service":"x",)"
                    R"("operation":"y","start_ns":0,"duration_ns":-5,"status":"OK","logs":[]})",
                    &error)
                    .has_value());
    CHECK_FALSE(parse_span_line(
                    R"({"trace_id":"t","span_id":"s","parent_span_id":null,"service":"x",)"
                    R"("operation":"y","start_ns":0,"duration_ns":5,"status":"BAD","logs":[]})",
                    &error)
                    .has_value());
  }

  TEST_CASE("five-span tree assembles with the entry span as root") {
    std::istringstream in(motif_jsonl());
    std::vector<ParseDiagnostic> diags;
    auto traces = parse_trace_stream(in, &diags);
    CHECK(diags.empty());
    REQUIRE(traces.size() == 1);
    const Trace& t = traces[0];
    REQUIRE(t.spans.size() == 5);
    CHECK(root_span(t).span_id == "s1");
    CHECK(root_endpoint(t).str() == "ts-basic-service/queryForTravel");
    CHECK(t.orphan_indices.empty());
    CHECK(trace_end_ns(t) == 1'000'000'000 + 200'000'000);
  }

  TEST_CASE("logs are sorted by timestamp during assembly") {
    std::vector<Span> spans(1);
    spans[0].trace_id = "t1";
    spans[0].span_id = "s1";
    spans[0].service = "svc";
    spans[0].operation = "op";
    spans[0].start_ns = 0;
    spans[0].duration_ns = 100;
    spans[0].logs = {{50, LogLevel::kInfo, "late", std::nullopt},
                     {10, LogLevel::kWarn, "early", std::nullopt}};
    auto t = assemble_trace(std::move(spans), nullptr);
    REQUIRE(t.has_value());
    CHECK(t->spans[0].logs[0].ts_ns == 10);
    CHECK(t->spans[0].logs[1].ts_ns == 50);
  }

  TEST_CASE("duplicate span ids reject the trace") {
    std::vector<Span> spans(2);
    for (auto& s : spans) {
      s.trace_id = "t1";
      s.span_id = "s1";
      s.service = "svc";
      s.operation = "op";
    }
    std::vector<ParseDiagnostic> diags;
    CHECK_FALSE(assemble_trace(std::move(spans), &diags).has_value());
    CHECK_FALSE(diags.empty());
  }

  TEST_CASE("earliest orphan is promoted to root when no span is parentless") {
    std::vector<Span> spans(2);
    spans[0] = {"t1", "s1", "missing", "svc", "op", 100, 10, SpanStatus::kOk, {}};
    spans[1] = {"t1", "s2", "s1", "svc", "op2", 200, 10, SpanStatus::kOk, {}};
    auto t = assemble_trace(std::move(spans), nullptr);
    REQUIRE(t.has_value());
    CHECK(root_span(*t).span_id == "s1");
    CHECK(t->orphan_indices.empty());
  }

  TEST_CASE("parent cycles reject the trace") {
    std::vector<Span> spans(2);
    spans[0] = {"t1", "s1", "s2", "svc", "op", 0, 10, SpanStatus::kOk, {}};
    spans[1] = {"t1", "s2", "s1", "svc", "op", 5, 10, SpanStatus::kOk, {}};
    std::vector<ParseDiagnostic> diags;
    CHECK_FALSE(assemble_trace(std::move(spans), &diags).has_value());
    CHECK_FALSE(diags.empty());
  }

  TEST_CASE("mixed trace ids are a caller bug") {
    std::vector<Span> spans(2);
    spans[0] = {"t1", "s1", std::nullopt, "svc", "op", 0, 10, SpanStatus::kOk, {}};
    spans[1] = {"t2", "s2", std::nullopt, "svc", "op", 0, 10, SpanStatus::kOk, {}};
    CHECK_THROWS_AS(assemble_trace(std::move(spans), nullptr), std::invalid_argument);
  }

  TEST_CASE("stream groups spans by trace id in first-encounter order") {
    Span a{"tA", "s1", std::nullopt, "svc", "op", 0, 10, SpanStatus::kOk, {}};
    Span b{"tB", "s1", std::nullopt, "svc", "op", 0, 10, SpanStatus::kOk, {}};
    Span a2{"tA", "s2", "s1", "svc", "op", 1, 5, SpanStatus::kOk, {}};
    std::istringstream in(span_to_jsonl(a) + "\n" + span_to_jsonl(b) + "\n" + span_to_jsonl(a2) +
                          "\n");
    auto traces = parse_trace_stream(in, nullptr);
    REQUIRE(traces.size() == 2);
    CHECK(traces[0].trace_id == "tA");
    CHECK(traces[0].spans.size() == 2);
    CHECK(traces[1].trace_id == "tB");
  }

  TEST_CASE("malformed lines surface as diagnostics not failures") {
    Span a{"tA", "s1", std::nullopt, "svc", "op", 0, 10, SpanStatus::kOk, {}};
    std::istringstream in("garbage\n" + span_to_jsonl(a) + "\n");
    std::vector<ParseDiagnostic> diags;
    auto traces = parse_trace_stream(in, &diags);
    CHECK(traces.size() == 1);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].line_no == 1);
  }
}

#include <sstream>

#include "doctest.h"
#include "tailsieve/log_templater.hpp"

using namespace tailsieve;

TEST_SUITE("log_templater") {
  TEST_CASE("masking replaces volatile tokens") {
    auto tokens = TemplateStore::tokenize_and_mask("Fetched 10 rows from cache");
    REQUIRE(tokens.size() == 5);
    CHECK(tokens[1] == "<*>");

    CHECK(TemplateStore::tokenize_and_mask("value -3.5 here")[1] == "<*>");
    CHECK(TemplateStore::tokenize_and_mask("id 550e8400-e29b-41d4-a716-446655440000 x")[1] ==
          "<*>");
    CHECK(TemplateStore::tokenize_and_mask("addr 0xDEADBEEF x")[1] == "<*>");
    CHECK(TemplateStore::tokenize_and_mask("hash a1b2c3d4e5f6 x")[1] == "<*>");
    // eight hex letters without a digit stay literal words
    CHECK(TemplateStore::tokenize_and_mask("word deadbeef x")[1] == "deadbeef");
    CHECK(TemplateStore::tokenize_and_mask("key route.timeout.ms set")[1] == "route.timeout.ms");
  }

  TEST_CASE("numeric variation lands on one template") {
    TemplateStore store;
    const TemplateId a = store.template_of("Request completed in 15 ms");
    const TemplateId b = store.template_of("Request completed in 7288 ms");
    CHECK(a == b);
    CHECK(store.template_string(a) == "Request completed in <*> ms");
  }

  TEST_CASE("similar messages merge with wildcards at differing positions") {
    TemplateStore store;
    const TemplateId a = store.template_of("user alice logged in from home");
    const TemplateId b = store.template_of("user alice logged in from office");
    CHECK(a == b);  // similarity 5/6 passes the 0.5 threshold
    CHECK(store.template_string(a) == "user alice logged in from <*>");

    // a difference inside the two routing token levels lands on another leaf,
    // so no similarity comparison ever happens
    const TemplateId c = store.template_of("user bob logged in from home");
    CHECK(c != a);
  }

  TEST_CASE("dissimilar messages of equal length stay apart") {
    TemplateStore store;
    const TemplateId a = store.template_of("alpha beta gamma delta");
    const TemplateId b = store.template_of("one two three four");
    CHECK(a != b);
  }

  TEST_CASE("token count partitions the tree") {
    TemplateStore store;
    const TemplateId a = store.template_of("connection reset");
    const TemplateId b = store.template_of("connection reset by peer");
    CHECK(a != b);
  }

  TEST_CASE("empty message maps to the reserved empty template") {
    TemplateStore store;
    CHECK(store.template_of("") == 0);
    CHECK(store.template_string(0) == "<EMPTY>");
    CHECK(store.size() == 1);
  }

  TEST_CASE("full nodes overflow into the wildcard branch") {
    TemplaterConfig cfg;
    cfg.max_children = 2;
    TemplateStore store(cfg);
    store.template_of("aa tail");
    store.template_of("bb tail");
    const TemplateId c = store.template_of("cc tail");
    const TemplateId d = store.template_of("dd tail");
    CHECK(c == d);  // both routed via the overflow branch and merged
    CHECK(store.template_string(c) == "<*> tail");
  }

  TEST_CASE("find never mines") {
    TemplateStore store;
    const size_t before = store.size();
    CHECK_FALSE(store.find("never seen before").has_value());
    CHECK(store.size() == before);
    const TemplateId id = store.template_of("now it exists 42");
    auto found = store.find("now it exists 99");
    REQUIRE(found.has_value());
    CHECK(*found == id);
  }

  TEST_CASE("templates serialize one per line") {
    TemplateStore store;
    store.template_of("Fetched 10 rows from cache");
    std::ostringstream out;
    store.dump_jsonl(out);
    const std::string dump = out.str();
    CHECK(dump.find("\"template_id\":") != std::string::npos);
    CHECK(dump.find("<*>") != std::string::npos);
  }

  TEST_CASE("event ids are dense and kind-scoped") {
    EventManager events;
    const EventId start = events.id(EventKind::kSpanStart, "svc/op");
    const EventId end = events.id(EventKind::kSpanEnd, "svc/op");
    const EventId log = events.log_id(3);
    CHECK(start == 1);
    CHECK(end == 2);
    CHECK(log == 3);
    CHECK(events.id(EventKind::kSpanStart, "svc/op") == start);  // idempotent
    CHECK(events.id(EventKind::kStatusError, "svc/op") == 4);
    CHECK(events.size() == 4);

    auto found = events.find(EventKind::kSpanStart, "svc/op");
    REQUIRE(found.has_value());
    CHECK(*found == start);
    CHECK_FALSE(events.find(EventKind::kPerfDeg, "svc/op").has_value());
    auto flog = events.find_log(3);
    REQUIRE(flog.has_value());
    CHECK(*flog == log);
    CHECK_FALSE(events.find_log(99).has_value());
  }
}

#include <cstdio>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "tailsieve/util.hpp"

using namespace tailsieve;

TEST_SUITE("util") {
  TEST_CASE("splitmix64 reference sequence") {
    // published reference outputs for a zero-seeded splitmix64 stream
    CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
    CHECK(splitmix64(0x9e3779b97f4a7c15ULL) == 0x6e789e6aa1b965f4ULL);
  }

  TEST_CASE("fnv1a64 reference values") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("hello") == 0xa430d84680aabd0bULL);
  }

  TEST_CASE("hex64 formats fixed width lowercase") {
    CHECK(hex64(0) == "0000000000000000");
    CHECK(hex64(0xdeadbeefULL) == "00000000deadbeef");
    CHECK(hex64(~0ULL) == "ffffffffffffffff");
  }

  TEST_CASE("rng is deterministic per seed") {
    Rng a(42), b(42), c(43);
    bool same = true, differ = false;
    for (int i = 0; i < 100; ++i) {
      const uint64_t va = a.next();
      same = same && va == b.next();
      differ = differ || va != c.next();
    }
    CHECK(same);
    CHECK(differ);
  }

  TEST_CASE("bounded stays in range and covers it") {
    Rng rng(7);
    std::set<uint64_t> seen;
    for (int i = 0; i < 2000; ++i) {
      const uint64_t v = rng.bounded(7);
      REQUIRE(v < 7);
      seen.insert(v);
    }
    CHECK(seen.size() == 7);
    CHECK(rng.bounded(1) == 0);
  }

  TEST_CASE("uniform01 stays in the half-open unit interval") {
    Rng rng(11);
    for (int i = 0; i < 2000; ++i) {
      const double u = rng.uniform01();
      REQUIRE(u >= 0.0);
      REQUIRE(u < 1.0);
    }
  }

  TEST_CASE("substream seeds separate by tag and index") {
    const uint64_t base = substream_seed(1, 100);
    CHECK(base == substream_seed(1, 100));
    CHECK(base != substream_seed(2, 100));
    CHECK(base != substream_seed(1, 101));
    CHECK(substream_seed(1, 100, 1) != substream_seed(1, 100, 2));
    CHECK(substream_seed(1, 100, 1, 2) != substream_seed(1, 100, 2, 1));
  }

  TEST_CASE("file round trip and digest") {
    const auto path = (std::filesystem::temp_directory_path() / "tailsieve_util_test.txt").string();
    write_text_file(path, "line one\nline two\n");
    CHECK(read_text_file(path) == "line one\nline two\n");
    const auto lines = read_lines(path);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "line one");
    CHECK(lines[1] == "line two");
    CHECK(fnv1a64_file(path) == fnv1a64("line one\nline two\n"));
    std::remove(path.c_str());
    CHECK_THROWS_AS(read_text_file(path), DataError);
  }
}

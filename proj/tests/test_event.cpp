#include <doctest.h>

#include <random>

#include "evkit/error.hpp"
#include "evkit/event.hpp"
#include "oracles.hpp"

using namespace evkit;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an evkit::Error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("validate_stream accepts empty and boundary input") {
  CHECK(validate_stream({}, kGen1Geometry).empty());
  const auto s = validate_stream({{5, 303, 239, 1}}, kGen1Geometry);
  REQUIRE(s.size() == 1);
  CHECK(s[0] == Event{5, 303, 239, 1});
}

TEST_CASE("validate_stream reports the first offending index") {
  try {
    validate_stream({{5, 0, 0, 0}, {4, 0, 0, 0}}, kGen1Geometry);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonMonotoneTimestamp);
    CHECK(e.index() == 1);
  }
  CHECK(code_of([] { validate_stream({{1, 304, 0, 0}}, kGen1Geometry); }) == ErrorCode::OutOfBounds);
  CHECK(code_of([] { validate_stream({{1, 0, 240, 0}}, kGen1Geometry); }) == ErrorCode::OutOfBounds);
  CHECK(code_of([] { validate_stream({{1, 0, 0, 2}}, kGen1Geometry); }) == ErrorCode::BadPolarity);
  CHECK(code_of([] { validate_stream({}, SensorGeometry{0, 10}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("equal timestamps are allowed") {
  CHECK(validate_stream({{7, 1, 1, 0}, {7, 2, 2, 1}}, kGen1Geometry).size() == 2);
}

TEST_CASE("partition_windows: 50 ms boundary") {
  const auto s = validate_stream({{0, 0, 0, 0}, {49'999, 0, 0, 0}, {50'000, 0, 0, 0}}, kGen1Geometry);
  const auto w = partition_windows(s, 50'000);
  REQUIRE(w.size() == 2);
  CHECK(w[0].count() == 2);
  CHECK(w[1].count() == 1);
  CHECK(w[1].window == TimeWindow{50'000, 100'000});
  CHECK_FALSE(w[0].partial);
  CHECK(w[1].partial);
}

TEST_CASE("partition_windows: empty stream and errors") {
  CHECK(partition_windows(validate_stream({}, kGen1Geometry), 50'000).empty());
  const auto s = validate_stream({{10, 0, 0, 0}}, kGen1Geometry);
  CHECK(code_of([&] { partition_windows(s, 0); }) == ErrorCode::ZeroWindow);
  CHECK(code_of([&] { partition_windows(s, 5, 11); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("partition_windows: a stream ending exactly on a boundary is not partial") {
  const auto s = validate_stream({{0, 0, 0, 0}, {99, 0, 0, 0}}, kGen1Geometry);
  const auto w = partition_windows(s, 100);
  REQUIRE(w.size() == 1);
  CHECK_FALSE(w[0].partial);
}

TEST_CASE("partition_windows matches brute-force bucketing") {
  std::mt19937_64 gen(42);
  for (int trial = 0; trial < 20; ++trial) {
    const Micros t_start = trial % 2 == 0 ? 0 : 1234;
    auto raw = oracle::random_events(gen, 1000, 304, 240, t_start, t_start + 200'000);
    const auto expected = oracle::bucket_counts(raw, t_start, 50'000);
    const auto s = validate_stream(std::move(raw), kGen1Geometry);
    const auto w = partition_windows(s, 50'000, t_start);
    REQUIRE(w.size() == expected.size());
    std::size_t prev_end = 0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      CHECK(w[k].count() == expected[k]);
      CHECK(w[k].begin == prev_end);
      CHECK(w[k].window.length() == 50'000);
      prev_end = w[k].end;
    }
    CHECK(prev_end == s.size());
  }
}

TEST_CASE("partition_windows keeps empty interior windows") {
  const auto s = validate_stream({{0, 0, 0, 0}, {250, 0, 0, 0}}, kGen1Geometry);
  const auto w = partition_windows(s, 100);
  REQUIRE(w.size() == 3);
  CHECK(w[1].count() == 0);
}

TEST_CASE("slice_window boundaries") {
  const auto s = validate_stream({{9, 0, 0, 0}, {10, 1, 0, 0}, {11, 2, 0, 0}}, kGen1Geometry);
  const auto one = slice_window(s, {10, 11});
  REQUIRE(one.size() == 1);
  CHECK(one[0].t == 10);
  CHECK(slice_window(s, {0, 100}) == s);
  CHECK(slice_window(s, {12, 20}).empty());
}

TEST_CASE("slices over a partition reassemble the stream") {
  std::mt19937_64 gen(7);
  const auto s = validate_stream(oracle::random_events(gen, 10'000, 304, 240, 0, 1'000'000), kGen1Geometry);
  std::uniform_int_distribution<Micros> len(1, 300'000);
  for (int trial = 0; trial < 7; ++trial) {
    const Micros t_frame = len(gen);
    std::vector<Event> joined;
    for (const auto& w : partition_windows(s, t_frame)) {
      const auto part = slice_window(s, w.window);
      CHECK(part.size() == w.count());
      joined.insert(joined.end(), part.events().begin(), part.events().end());
    }
    CHECK(validate_stream(std::move(joined), kGen1Geometry) == s);
  }
}

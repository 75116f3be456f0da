#include <doctest.h>

#include "properties.hpp"

using namespace vigil;

namespace {

constexpr std::size_t kCases = 1000;

void check(const properties::Outcome& o) {
  INFO(o.name << ": " << o.failures << " of " << o.cases << " cases failed");
  CHECK(o.cases >= kCases);
  CHECK(o.failures == 0);
}

}  // namespace

TEST_CASE("snapshots round-trip through the codecs and the on-disk log") {
  check(properties::snapshot_round_trip(kCases, 101));
}

TEST_CASE("random monitored runs keep the commit invariants") {
  const auto r = properties::monitored_runs(kCases, 303);
  check(r.stale);
  check(r.epochs);
  check(r.replay);
  check(r.budget);
  check(r.clean);
}

TEST_CASE("the reflection context stops growing past the window") {
  check(properties::bounded_reflection_context(kCases, 404));
}

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <thread>
#include <unistd.h>

#include "vigil/snapshot_store.hpp"
#include "fixtures.hpp"

using namespace vigil;
using vigil::testing::make_test_snapshot;
using vigil::testing::make_test_verdict;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("vigil-test-" + tag + "-" + std::to_string(::getpid()))) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void basic_contract(SnapshotStore& store) {
  CHECK_FALSE(store.get(SnapshotKey{"a", {}, 0}));
  CHECK_FALSE(store.latest_key("a"));

  auto s0 = make_test_snapshot("a", 0, 0, 1.0);
  auto s1 = make_test_snapshot("a", 0, 1, 2.0);
  CHECK(store.put(s0) == s0.key());
  store.put(s1);
  CHECK_THROWS_AS(store.put(s0), Error);
  REQUIRE(store.get(s0.key()));
  CHECK(*store.get(s0.key()) == s0);
  auto got = store.get_snapshot("a", Epoch{0}, 1);
  REQUIRE(got);
  CHECK(*got == s1);
  CHECK(*store.latest_key("a") == s1.key());

  auto v = make_test_verdict(s1.key(), false, 0.8);
  store.append_diagnostic(s1.key(), v);
  CHECK(store.get(s1.key())->diagnostics == std::vector<Verdict>{v});
  CHECK_THROWS_AS(store.append_diagnostic(SnapshotKey{"zz", {}, 0}, v), Error);

  CHECK(store.erase(s0.key()));
  CHECK_FALSE(store.erase(s0.key()));
  CHECK(store.size() == 1);
  CHECK(store.keys() == std::vector<SnapshotKey>{s1.key()});
}

}  // namespace

TEST_CASE("in-memory store honours the store contract") {
  InMemorySnapshotStore store;
  basic_contract(store);
}

TEST_CASE("log store honours the store contract") {
  TempDir dir("contract");
  LogSnapshotStore store(dir.path);
  basic_contract(store);
}

TEST_CASE("log store replays its index after reopening and compacts") {
  TempDir dir("replay");
  const auto s0 = make_test_snapshot("a", 0, 0, 1.0);
  const auto s1 = make_test_snapshot("b", 1, 0, 2.0);
  auto v = make_test_verdict(s1.key(), true, 0.9);
  {
    LogSnapshotStore store(dir.path);
    store.put(s0);
    store.put(s1);
    store.append_diagnostic(s1.key(), v);
    store.append_record(RecordKind::Transcript, json{{"rounds", 2}});
    store.erase(s0.key());
  }
  LogSnapshotStore store(dir.path);
  CHECK(store.size() == 1);
  CHECK_FALSE(store.get(s0.key()));
  auto got = store.get(s1.key());
  REQUIRE(got);
  CHECK(got->diagnostics == std::vector<Verdict>{v});
  const auto before = store.log_bytes();
  const auto reclaimed = store.compact();
  CHECK(reclaimed > 0);
  CHECK(store.log_bytes() == before - reclaimed);
  CHECK(fs::file_size(dir.path / "snapshots.log") == store.log_bytes());
  CHECK(*store.get(s1.key()) == *got);
  CHECK(store.records(RecordKind::Transcript) == std::vector<json>{json{{"rounds", 2}}});
  LogSnapshotStore reopened(dir.path);
  CHECK(*reopened.get(s1.key()) == *got);
}

TEST_CASE("log entries are length-prefixed MessagePack") {
  TempDir dir("frame");
  LogSnapshotStore store(dir.path);
  const auto s = make_test_snapshot("n", 0, 0);
  store.put(s);
  std::ifstream in(dir.path / "snapshots.log", std::ios::binary);
  unsigned char header[5];
  in.read(reinterpret_cast<char*>(header), 5);
  const std::uint32_t length = header[0] | header[1] << 8 | header[2] << 16 | header[3] << 24;
  CHECK(header[4] == static_cast<unsigned char>(RecordKind::Snapshot));
  std::vector<std::uint8_t> body(length);
  in.read(reinterpret_cast<char*>(body.data()), length);
  CHECK(decode_snapshot(body) == s);
  CHECK(store.log_bytes() == 5 + length);
}

TEST_CASE("readers never observe partial snapshots") {
  TempDir dir("concurrent");
  LogSnapshotStore store(dir.path);
  std::atomic<bool> done{false};
  std::atomic<int> mismatches{0};
  std::thread reader([&] {
    while (!done) {
      for (std::uint32_t a = 0; a < 200; ++a) {
        auto got = store.get(SnapshotKey{"n", {}, a});
        if (got && *got != make_test_snapshot("n", 0, a, a)) ++mismatches;
      }
    }
  });
  for (std::uint32_t a = 0; a < 200; ++a) store.put(make_test_snapshot("n", 0, a, a));
  done = true;
  reader.join();
  CHECK(mismatches == 0);
}

TEST_CASE("pruning keeps the latest snapshot per node first") {
  SUBCASE("budget equal to size removes nothing") {
    InMemorySnapshotStore store;
    for (std::uint32_t i = 0; i < 10; ++i) store.put(make_test_snapshot("n" + std::to_string(i), 0, 0));
    CHECK(prune_snapshots(store, 10) == 0);
  }
  SUBCASE("ten snapshots over five nodes, budget five") {
    InMemorySnapshotStore store;
    for (int node = 0; node < 5; ++node)
      for (std::uint32_t a = 0; a < 2; ++a) store.put(make_test_snapshot("n" + std::to_string(node), 0, a));
    CHECK(prune_snapshots(store, 5) == 5);
    std::vector<SnapshotKey> expected;
    for (int node = 0; node < 5; ++node) expected.push_back(SnapshotKey{"n" + std::to_string(node), {}, 1});
    CHECK(store.keys() == expected);
  }
  SUBCASE("frontier larger than budget is rejected") {
    InMemorySnapshotStore store;
    store.put(make_test_snapshot("a", 0, 0));
    store.put(make_test_snapshot("b", 0, 0));
    CHECK_THROWS_AS(prune_snapshots(store, 1, {"a", "b"}), Error);
  }
  SUBCASE("frontier, then retention plan, then other nodes") {
    InMemorySnapshotStore store;
    for (auto id : {"a", "b", "c", "d"}) store.put(make_test_snapshot(id, 0, 0));
    store.put(make_test_snapshot("d", 1, 1));
    CHECK(prune_snapshots(store, 2, {"d"}, {"b"}) == 3);
    CHECK(store.keys() == std::vector<SnapshotKey>{{"b", {}, 0}, {"d", Epoch{1}, 1}});
  }
}

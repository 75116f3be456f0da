#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "vigil/serialization.hpp"
#include "vigil/types.hpp"

namespace vigil {

/// Versioned snapshot storage keyed by (node, epoch, attempt).
///
/// Implementations accept concurrent readers during writes; a reader sees
/// either nothing or the complete snapshot for a key.
class SnapshotStore {
 public:
  virtual ~SnapshotStore() = default;

  /// Throws when the key already exists.
  virtual SnapshotKey put(const Snapshot& snapshot) = 0;
  virtual std::optional<Snapshot> get(const SnapshotKey& key) const = 0;
  /// Appends a verdict to the snapshot's diagnostics.
  virtual void append_diagnostic(const SnapshotKey& key, const Verdict& verdict) = 0;
  virtual bool erase(const SnapshotKey& key) = 0;
  virtual std::vector<SnapshotKey> keys() const = 0;
  virtual std::size_t size() const = 0;

  std::optional<Snapshot> get_snapshot(const NodeId& node, Epoch epoch,
                                       std::uint32_t attempt) const {
    return get(SnapshotKey{node, epoch, attempt});
  }
  /// Highest (epoch, attempt) key for the node.
  std::optional<SnapshotKey> latest_key(const NodeId& node) const;
};

class InMemorySnapshotStore final : public SnapshotStore {
 public:
  SnapshotKey put(const Snapshot& snapshot) override;
  std::optional<Snapshot> get(const SnapshotKey& key) const override;
  void append_diagnostic(const SnapshotKey& key, const Verdict& verdict) override;
  bool erase(const SnapshotKey& key) override;
  std::vector<SnapshotKey> keys() const override;
  std::size_t size() const override;

 private:
  mutable std::shared_mutex mutex_;
  std::map<SnapshotKey, Snapshot> snapshots_;
};

/// Record kinds sharing one log.
enum class RecordKind : std::uint8_t { Snapshot = 1, Diagnostic = 2, Transcript = 3, Payload = 4 };

/// Append-only on-disk log plus an index file.
///
/// Log entries are `[u32 little-endian length][u8 kind][MessagePack body]`.
/// The index is JSON lines: `{"op":"put"|"diag"|"erase"|"record", ...}` with
/// the key and the entry offset. Erased entries stay in the log until
/// `compact()` rewrites it.
class LogSnapshotStore final : public SnapshotStore {
 public:
  /// Opens (creating if needed) `<directory>/snapshots.log` and
  /// `<directory>/snapshots.idx`, replaying an existing index.
  explicit LogSnapshotStore(std::filesystem::path directory);
  ~LogSnapshotStore() override;

  LogSnapshotStore(const LogSnapshotStore&) = delete;
  LogSnapshotStore& operator=(const LogSnapshotStore&) = delete;

  SnapshotKey put(const Snapshot& snapshot) override;
  std::optional<Snapshot> get(const SnapshotKey& key) const override;
  void append_diagnostic(const SnapshotKey& key, const Verdict& verdict) override;
  bool erase(const SnapshotKey& key) override;
  std::vector<SnapshotKey> keys() const override;
  std::size_t size() const override;

  /// Non-snapshot records (transcripts, payloads) tagged by kind.
  std::uint64_t append_record(RecordKind kind, const json& body);
  std::vector<json> records(RecordKind kind) const;

  /// Rewrites the log keeping live snapshots (diagnostics folded in) and
  /// records. Returns bytes reclaimed.
  std::uint64_t compact();

  std::uint64_t log_bytes() const;
  std::uint64_t index_bytes() const;
  const std::filesystem::path& directory() const { return directory_; }

 private:
  struct Entry {
    std::uint64_t offset = 0;
    std::vector<std::uint64_t> diagnostics;
  };

  std::uint64_t write_entry(RecordKind kind, const std::vector<std::uint8_t>& body);
  std::vector<std::uint8_t> read_entry(std::uint64_t offset, RecordKind expected) const;
  void write_index_line(const json& line);
  void replay_index();
  void open_files();
  void close_files();

  std::filesystem::path directory_;
  int log_fd_ = -1;
  int index_fd_ = -1;
  std::uint64_t log_size_ = 0;
  mutable std::shared_mutex mutex_;
  std::map<SnapshotKey, Entry> entries_;
  std::vector<std::pair<RecordKind, std::uint64_t>> records_;
};

/// Removes snapshots until at most `budget` remain.
///
/// The latest snapshot of each frontier node is always kept, then the latest
/// snapshot of each retention-plan node, then the latest of the remaining
/// nodes, then older snapshots, ranked by (epoch, attempt) descending. Throws
/// when the frontier alone exceeds the budget. Returns the number removed.
std::size_t prune_snapshots(SnapshotStore& store, std::size_t budget,
                            const std::set<NodeId>& frontier = {},
                            const std::set<NodeId>& retention_plan = {});

}  // namespace vigil

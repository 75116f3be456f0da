#include "vigil/snapshot_store.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <mutex>
#include <tuple>

namespace vigil {

std::optional<SnapshotKey> SnapshotStore::latest_key(const NodeId& node) const {
  std::optional<SnapshotKey> best;
  for (const auto& key : keys()) {
    if (key.node != node) continue;
    if (!best || std::tie(key.epoch, key.attempt) > std::tie(best->epoch, best->attempt))
      best = key;
  }
  return best;
}

// ---------------------------------------------------------------------------

SnapshotKey InMemorySnapshotStore::put(const Snapshot& snapshot) {
  std::unique_lock lock(mutex_);
  auto key = snapshot.key();
  if (!snapshots_.emplace(key, snapshot).second)
    throw Error("snapshot already stored: " + key.to_string());
  return key;
}

std::optional<Snapshot> InMemorySnapshotStore::get(const SnapshotKey& key) const {
  std::shared_lock lock(mutex_);
  auto it = snapshots_.find(key);
  if (it == snapshots_.end()) return std::nullopt;
  return it->second;
}

void InMemorySnapshotStore::append_diagnostic(const SnapshotKey& key, const Verdict& verdict) {
  std::unique_lock lock(mutex_);
  auto it = snapshots_.find(key);
  if (it == snapshots_.end()) throw Error("no snapshot for diagnostic: " + key.to_string());
  it->second.diagnostics.push_back(verdict);
}

bool InMemorySnapshotStore::erase(const SnapshotKey& key) {
  std::unique_lock lock(mutex_);
  return snapshots_.erase(key) != 0;
}

std::vector<SnapshotKey> InMemorySnapshotStore::keys() const {
  std::shared_lock lock(mutex_);
  std::vector<SnapshotKey> out;
  out.reserve(snapshots_.size());
  for (const auto& [key, _] : snapshots_) out.push_back(key);
  return out;
}

std::size_t InMemorySnapshotStore::size() const {
  std::shared_lock lock(mutex_);
  return snapshots_.size();
}

// ---------------------------------------------------------------------------

namespace {

void write_all(int fd, const void* data, std::size_t size) {
  const auto* bytes = static_cast<const std::uint8_t*>(data);
  while (size > 0) {
    ssize_t n = ::write(fd, bytes, size);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(std::string("snapshot log write failed: ") + std::strerror(errno));
    }
    bytes += n;
    size -= static_cast<std::size_t>(n);
  }
}

void read_exact(int fd, void* data, std::size_t size, std::uint64_t offset) {
  auto* bytes = static_cast<std::uint8_t*>(data);
  while (size > 0) {
    ssize_t n = ::pread(fd, bytes, size, static_cast<off_t>(offset));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(std::string("snapshot log read failed: ") + std::strerror(errno));
    }
    if (n == 0) throw Error("snapshot log truncated");
    bytes += n;
    size -= static_cast<std::size_t>(n);
    offset += static_cast<std::uint64_t>(n);
  }
}

std::uint64_t path_size(const std::filesystem::path& path) {
  std::error_code ec;
  auto size = std::filesystem::file_size(path, ec);
  return ec ? 0 : size;
}

}  // namespace

LogSnapshotStore::LogSnapshotStore(std::filesystem::path directory)
    : directory_(std::move(directory)) {
  std::filesystem::create_directories(directory_);
  open_files();
  replay_index();
}

LogSnapshotStore::~LogSnapshotStore() { close_files(); }

void LogSnapshotStore::open_files() {
  auto log_path = directory_ / "snapshots.log";
  auto index_path = directory_ / "snapshots.idx";
  log_fd_ = ::open(log_path.c_str(), O_RDWR | O_CREAT | O_APPEND, 0644);
  index_fd_ = ::open(index_path.c_str(), O_RDWR | O_CREAT | O_APPEND, 0644);
  if (log_fd_ < 0 || index_fd_ < 0) {
    close_files();
    throw Error("cannot open snapshot log in " + directory_.string());
  }
  log_size_ = path_size(log_path);
}

void LogSnapshotStore::close_files() {
  if (log_fd_ >= 0) ::close(log_fd_);
  if (index_fd_ >= 0) ::close(index_fd_);
  log_fd_ = index_fd_ = -1;
}

void LogSnapshotStore::replay_index() {
  std::ifstream in(directory_ / "snapshots.idx");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json entry = json::parse(line);
    const std::string op = entry.at("op");
    if (op == "record") {
      records_.emplace_back(static_cast<RecordKind>(entry.at("kind").get<int>()),
                            entry.at("offset").get<std::uint64_t>());
      continue;
    }
    auto key = entry.at("key").get<SnapshotKey>();
    if (op == "put") {
      entries_[key] = Entry{entry.at("offset").get<std::uint64_t>(), {}};
    } else if (op == "diag") {
      entries_.at(key).diagnostics.push_back(entry.at("offset").get<std::uint64_t>());
    } else if (op == "erase") {
      entries_.erase(key);
    }
  }
}

std::uint64_t LogSnapshotStore::write_entry(RecordKind kind,
                                            const std::vector<std::uint8_t>& body) {
  const auto length = static_cast<std::uint32_t>(body.size());
  std::vector<std::uint8_t> frame(5 + body.size());
  for (int i = 0; i < 4; ++i) frame[i] = static_cast<std::uint8_t>(length >> (8 * i));
  frame[4] = static_cast<std::uint8_t>(kind);
  std::copy(body.begin(), body.end(), frame.begin() + 5);
  const std::uint64_t offset = log_size_;
  write_all(log_fd_, frame.data(), frame.size());
  log_size_ += frame.size();
  return offset;
}

std::vector<std::uint8_t> LogSnapshotStore::read_entry(std::uint64_t offset,
                                                       RecordKind expected) const {
  std::uint8_t header[5];
  read_exact(log_fd_, header, sizeof(header), offset);
  std::uint32_t length = 0;
  for (int i = 0; i < 4; ++i) length |= static_cast<std::uint32_t>(header[i]) << (8 * i);
  if (header[4] != static_cast<std::uint8_t>(expected))
    throw Error("snapshot log entry has unexpected kind");
  std::vector<std::uint8_t> body(length);
  if (length > 0) read_exact(log_fd_, body.data(), length, offset + sizeof(header));
  return body;
}

void LogSnapshotStore::write_index_line(const json& line) {
  std::string text = line.dump() + "\n";
  write_all(index_fd_, text.data(), text.size());
}

SnapshotKey LogSnapshotStore::put(const Snapshot& snapshot) {
  std::unique_lock lock(mutex_);
  auto key = snapshot.key();
  if (entries_.count(key)) throw Error("snapshot already stored: " + key.to_string());
  auto offset = write_entry(RecordKind::Snapshot, encode_snapshot(snapshot));
  write_index_line({{"op", "put"}, {"key", key}, {"offset", offset}});
  entries_[key] = Entry{offset, {}};
  return key;
}

std::optional<Snapshot> LogSnapshotStore::get(const SnapshotKey& key) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  Snapshot snapshot = decode_snapshot(read_entry(it->second.offset, RecordKind::Snapshot));
  for (auto offset : it->second.diagnostics) {
    snapshot.diagnostics.push_back(
        decode_verdict(read_entry(offset, RecordKind::Diagnostic)));
  }
  return snapshot;
}

void LogSnapshotStore::append_diagnostic(const SnapshotKey& key, const Verdict& verdict) {
  std::unique_lock lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) throw Error("no snapshot for diagnostic: " + key.to_string());
  auto offset = write_entry(RecordKind::Diagnostic, encode_verdict(verdict));
  write_index_line({{"op", "diag"}, {"key", key}, {"offset", offset}});
  it->second.diagnostics.push_back(offset);
}

bool LogSnapshotStore::erase(const SnapshotKey& key) {
  std::unique_lock lock(mutex_);
  if (!entries_.erase(key)) return false;
  write_index_line({{"op", "erase"}, {"key", key}});
  return true;
}

std::vector<SnapshotKey> LogSnapshotStore::keys() const {
  std::shared_lock lock(mutex_);
  std::vector<SnapshotKey> out;
  for (const auto& [key, _] : entries_) out.push_back(key);
  return out;
}

std::size_t LogSnapshotStore::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::uint64_t LogSnapshotStore::append_record(RecordKind kind, const json& body) {
  if (kind == RecordKind::Snapshot || kind == RecordKind::Diagnostic)
    throw Error("append_record is for transcript and payload records");
  std::unique_lock lock(mutex_);
  auto offset = write_entry(kind, json::to_msgpack(body));
  write_index_line({{"op", "record"}, {"kind", static_cast<int>(kind)}, {"offset", offset}});
  records_.emplace_back(kind, offset);
  return offset;
}

std::vector<json> LogSnapshotStore::records(RecordKind kind) const {
  std::shared_lock lock(mutex_);
  std::vector<json> out;
  for (const auto& [record_kind, offset] : records_)
    if (record_kind == kind) out.push_back(json::from_msgpack(read_entry(offset, kind)));
  return out;
}

std::uint64_t LogSnapshotStore::compact() {
  std::unique_lock lock(mutex_);
  const std::uint64_t before = log_size_;

  std::vector<std::pair<SnapshotKey, Snapshot>> live;
  for (const auto& [key, entry] : entries_) {
    Snapshot snapshot = decode_snapshot(read_entry(entry.offset, RecordKind::Snapshot));
    for (auto offset : entry.diagnostics)
      snapshot.diagnostics.push_back(
          decode_verdict(read_entry(offset, RecordKind::Diagnostic)));
    live.emplace_back(key, std::move(snapshot));
  }
  std::vector<std::pair<RecordKind, std::vector<std::uint8_t>>> kept_records;
  for (const auto& [kind, offset] : records_) kept_records.emplace_back(kind, read_entry(offset, kind));

  close_files();
  auto log_path = directory_ / "snapshots.log";
  auto index_path = directory_ / "snapshots.idx";
  auto tmp_log = directory_ / "snapshots.log.tmp";
  auto tmp_index = directory_ / "snapshots.idx.tmp";
  std::filesystem::remove(tmp_log);
  std::filesystem::remove(tmp_index);
  log_fd_ = ::open(tmp_log.c_str(), O_RDWR | O_CREAT | O_APPEND | O_TRUNC, 0644);
  index_fd_ = ::open(tmp_index.c_str(), O_RDWR | O_CREAT | O_APPEND | O_TRUNC, 0644);
  if (log_fd_ < 0 || index_fd_ < 0) throw Error("cannot rewrite snapshot log");
  log_size_ = 0;
  entries_.clear();
  records_.clear();
  for (const auto& [key, snapshot] : live) {
    auto offset = write_entry(RecordKind::Snapshot, encode_snapshot(snapshot));
    write_index_line({{"op", "put"}, {"key", key}, {"offset", offset}});
    entries_[key] = Entry{offset, {}};
  }
  for (const auto& [kind, body] : kept_records) {
    auto offset = write_entry(kind, body);
    write_index_line({{"op", "record"}, {"kind", static_cast<int>(kind)}, {"offset", offset}});
    records_.emplace_back(kind, offset);
  }
  close_files();
  std::filesystem::rename(tmp_log, log_path);
  std::filesystem::rename(tmp_index, index_path);
  open_files();
  return before > log_size_ ? before - log_size_ : 0;
}

std::uint64_t LogSnapshotStore::log_bytes() const {
  std::shared_lock lock(mutex_);
  return log_size_;
}

std::uint64_t LogSnapshotStore::index_bytes() const {
  return path_size(directory_ / "snapshots.idx");
}

// ---------------------------------------------------------------------------

std::size_t prune_snapshots(SnapshotStore& store, std::size_t budget,
                            const std::set<NodeId>& frontier,
                            const std::set<NodeId>& retention_plan) {
  if (budget < 1) throw Error("snapshot budget must be at least 1");
  if (budget < frontier.size())
    throw Error("snapshot budget " + std::to_string(budget) + " is smaller than frontier size " +
                std::to_string(frontier.size()));

  auto keys = store.keys();
  if (keys.size() <= budget) return 0;

  std::map<NodeId, SnapshotKey> latest;
  for (const auto& key : keys) {
    auto it = latest.find(key.node);
    if (it == latest.end() ||
        std::tie(key.epoch, key.attempt) > std::tie(it->second.epoch, it->second.attempt))
      latest[key.node] = key;
  }

  auto tier = [&](const SnapshotKey& key) {
    const bool is_latest = latest.at(key.node) == key;
    if (!is_latest) return 3;
    if (frontier.count(key.node)) return 0;
    if (retention_plan.count(key.node)) return 1;
    return 2;
  };
  std::sort(keys.begin(), keys.end(), [&](const SnapshotKey& a, const SnapshotKey& b) {
    const int ta = tier(a), tb = tier(b);
    if (ta != tb) return ta < tb;
    if (a.epoch != b.epoch) return a.epoch > b.epoch;
    if (a.attempt != b.attempt) return a.attempt > b.attempt;
    return a.node < b.node;
  });

  std::size_t removed = 0;
  for (std::size_t i = budget; i < keys.size(); ++i)
    if (store.erase(keys[i])) ++removed;
  return removed;
}

}  // namespace vigil

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "finforge/core.hpp"
#include "json.hpp"

namespace finforge {

enum class RecordKind { task, gold, verdict, adjudication, stats, trajectory };
template <>
struct EnumNames<RecordKind> {
  static constexpr std::string_view kind = "record kind";
  static constexpr std::array<std::string_view, 6> names{"task",  "gold",  "verdict",
                                                         "adjudication", "stats", "trajectory"};
};

struct StoreRecord {
  RecordKind kind = RecordKind::task;
  std::string id;
  std::uint64_t sequence = 0;
  nlohmann::json payload;
  bool operator==(const StoreRecord&) const = default;
};

/// File holding records of a kind: tasks.jsonl, golds.jsonl, verdicts.jsonl,
/// adjudication.jsonl, stats.jsonl, trajectories.jsonl.
std::string store_file_name(RecordKind kind);

/// Append-only JSONL store, one file per record kind, with a sequence number
/// shared across files. State is the replay of all records in sequence
/// order. A torn final line (crash mid-write) is dropped on open.
class Store {
 public:
  explicit Store(std::filesystem::path dir);

  /// Serialized; the record is flushed before returning.
  StoreRecord append(RecordKind kind, std::string id, nlohmann::json payload);

  /// Records in sequence order as loaded at open time plus later appends.
  std::vector<StoreRecord> records() const;
  std::uint64_t last_sequence() const;
  const std::filesystem::path& dir() const noexcept { return dir_; }

  /// Reads a store directory without opening it for writing.
  static std::vector<StoreRecord> read_all(const std::filesystem::path& dir);

 private:
  std::filesystem::path dir_;
  mutable std::mutex mu_;
  std::vector<StoreRecord> records_;
  std::map<RecordKind, std::ofstream> files_;
  std::uint64_t next_sequence_ = 1;
};

}  // namespace finforge

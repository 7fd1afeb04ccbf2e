#include "finforge/store.hpp"

#include <algorithm>
#include <sstream>

namespace finforge {

std::string store_file_name(RecordKind kind) {
  switch (kind) {
    case RecordKind::task: return "tasks.jsonl";
    case RecordKind::gold: return "golds.jsonl";
    case RecordKind::verdict: return "verdicts.jsonl";
    case RecordKind::adjudication: return "adjudication.jsonl";
    case RecordKind::stats: return "stats.jsonl";
    case RecordKind::trajectory: return "trajectories.jsonl";
  }
  throw Error(ErrorCode::internal, "unknown record kind");
}

namespace {

constexpr RecordKind kAllKinds[] = {RecordKind::task,         RecordKind::gold,  RecordKind::verdict,
                                    RecordKind::adjudication, RecordKind::stats, RecordKind::trajectory};

struct FileScan {
  std::vector<StoreRecord> records;
  std::uintmax_t valid_bytes = 0;
  bool torn_tail = false;
};

FileScan scan_file(const std::filesystem::path& path, RecordKind kind) {
  FileScan scan;
  std::ifstream in(path, std::ios::binary);
  if (!in) return scan;
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string content = buf.str();
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < content.size()) {
    ++line_no;
    const auto nl = content.find('\n', pos);
    const bool complete = nl != std::string::npos;
    const std::string line = content.substr(pos, complete ? nl - pos : std::string::npos);
    const auto parsed = nlohmann::json::parse(line, nullptr, false);
    if (!complete) {
      // A final line without its newline was cut short by a crash; drop it
      // even if it happens to parse.
      scan.torn_tail = true;
      break;
    }
    if (parsed.is_discarded() || !parsed.is_object() || !parsed.contains("sequence") ||
        !parsed["sequence"].is_number_unsigned() || !parsed.contains("id") ||
        !parsed["id"].is_string() || !parsed.contains("payload")) {
      throw Error(ErrorCode::malformed, path.string() + ":" + std::to_string(line_no) +
                                            ": store record is not {kind, id, sequence, payload}");
    }
    if (parsed.contains("kind") && parsed["kind"] != enum_name(kind)) {
      throw Error(ErrorCode::malformed,
                  path.string() + ":" + std::to_string(line_no) + ": record kind does not match file");
    }
    scan.records.push_back(
        {kind, parsed["id"].get<std::string>(), parsed["sequence"].get<std::uint64_t>(), parsed["payload"]});
    pos = nl + 1;
    scan.valid_bytes = pos;
  }
  return scan;
}

std::vector<StoreRecord> merge(std::vector<StoreRecord> all, const std::filesystem::path& dir) {
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.sequence < b.sequence; });
  for (std::size_t i = 1; i < all.size(); ++i) {
    if (all[i].sequence == all[i - 1].sequence) {
      throw Error(ErrorCode::malformed,
                  "duplicate sequence " + std::to_string(all[i].sequence) + " in store " + dir.string());
    }
  }
  return all;
}

}  // namespace

std::vector<StoreRecord> Store::read_all(const std::filesystem::path& dir) {
  std::vector<StoreRecord> all;
  for (RecordKind k : kAllKinds) {
    auto scan = scan_file(dir / store_file_name(k), k);
    all.insert(all.end(), scan.records.begin(), scan.records.end());
  }
  return merge(std::move(all), dir);
}

Store::Store(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error(ErrorCode::unavailable, "cannot create store directory " + dir_.string(), ec.message());
  std::vector<StoreRecord> all;
  for (RecordKind k : kAllKinds) {
    const auto path = dir_ / store_file_name(k);
    auto scan = scan_file(path, k);
    if (scan.torn_tail) std::filesystem::resize_file(path, scan.valid_bytes);
    all.insert(all.end(), scan.records.begin(), scan.records.end());
  }
  records_ = merge(std::move(all), dir_);
  if (!records_.empty()) next_sequence_ = records_.back().sequence + 1;
}

StoreRecord Store::append(RecordKind kind, std::string id, nlohmann::json payload) {
  std::lock_guard lock(mu_);
  auto& out = files_[kind];
  if (!out.is_open()) {
    out.open(dir_ / store_file_name(kind), std::ios::app | std::ios::binary);
    if (!out) {
      throw Error(ErrorCode::unavailable, "cannot open " + (dir_ / store_file_name(kind)).string());
    }
  }
  StoreRecord rec{kind, std::move(id), next_sequence_, std::move(payload)};
  const nlohmann::json line{
      {"kind", enum_name(kind)}, {"id", rec.id}, {"sequence", rec.sequence}, {"payload", rec.payload}};
  out << line.dump() << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::unavailable, "write to store failed");
  ++next_sequence_;
  records_.push_back(rec);
  return rec;
}

std::vector<StoreRecord> Store::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::uint64_t Store::last_sequence() const {
  std::lock_guard lock(mu_);
  return next_sequence_ - 1;
}

}  // namespace finforge

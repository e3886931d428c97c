#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "netvis/edit.hpp"
#include "netvis/result.hpp"
#include "netvis/topology.hpp"

namespace netvis {

enum class StoreErrorCode { kIoFailure, kCorruptBase, kUnreplayableEntry, kBadManifest, kNotInitialized };

std::string_view to_string(StoreErrorCode code);

struct StoreError {
  StoreErrorCode code;
  std::string message;
};

inline constexpr int kStoreFormatVersion = 1;
inline constexpr std::uint32_t kMaxRecordPayload = 16u << 20;

/// data_dir/manifest, one "key = value" per line.
struct Manifest {
  int format_version = kStoreFormatVersion;
  std::uint64_t generation = 0;
  std::string base = "base.xml";
  std::string base_hash;
  std::uint64_t base_version = 0;
  std::string log = "edits.log";

  std::string render() const;
  static Expected<Manifest, StoreError> parse(std::string_view text);

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// 4-byte big-endian payload length, payload, 4-byte big-endian CRC32 of the
/// payload.
std::string encode_record(std::string_view payload);

struct LogScan {
  std::vector<std::string> payloads;
  /// Byte offset just past each complete record.
  std::vector<std::uint64_t> record_ends;
  /// Bytes of a torn final record, dropped on recovery.
  std::uint64_t torn_bytes = 0;
  /// Set when a damaged record is followed by intact data.
  std::optional<std::uint64_t> corrupt_offset;

  std::uint64_t valid_bytes() const { return record_ends.empty() ? 0 : record_ends.back(); }
};

LogScan scan_log(std::string_view bytes);

std::string sha256_hex(std::string_view bytes);

struct Recovered {
  Manifest manifest;
  NetworkSnapshot base;
  std::vector<EditOp> entries;
  NetworkSnapshot snapshot;
  std::vector<std::string> warnings;
  std::uint64_t log_valid_bytes = 0;
  std::uint64_t torn_bytes = 0;
};

/// Read-only: base plus every complete log entry. A torn tail is reported
/// as a warning; anything else that cannot be replayed is an error.
Expected<Recovered, StoreError> recover(const std::filesystem::path& data_dir);

/// Journal of accepted edits. Implementations must make the entry durable
/// before returning.
class EditStore {
 public:
  virtual ~EditStore() = default;
  /// Assigns and returns the entry's seq.
  virtual Expected<std::uint64_t, StoreError> append(const EditOp& op) = 0;
  /// Replace the base with `snapshot` and start an empty log.
  virtual Status<StoreError> rebase(const NetworkSnapshot& snapshot) = 0;
  virtual std::uint64_t last_seq() const = 0;
  virtual std::uint64_t base_version() const = 0;
};

enum class CompactStep { kBaseWritten, kLogCreated, kManifestWritten, kManifestCommitted };

std::string_view to_string(CompactStep step);

/// Returning true at a step aborts compaction there, leaving files exactly as
/// a crash at that point would.
using CrashHook = std::function<bool(CompactStep)>;

class FileEditStore final : public EditStore {
 public:
  ~FileEditStore() override;
  FileEditStore(const FileEditStore&) = delete;
  FileEditStore& operator=(const FileEditStore&) = delete;

  /// Writes a fresh store holding `base` and an empty log. Fails if a
  /// manifest already exists.
  static Status<StoreError> initialize(const std::filesystem::path& data_dir, const NetworkSnapshot& base);

  /// Recovers, truncates a torn tail and removes files the manifest no longer
  /// references. `recovered` receives the state.
  static Expected<std::unique_ptr<FileEditStore>, StoreError> open(const std::filesystem::path& data_dir,
                                                                   Recovered* recovered = nullptr);

  Expected<std::uint64_t, StoreError> append(const EditOp& op) override;
  Status<StoreError> rebase(const NetworkSnapshot& snapshot) override;
  std::uint64_t last_seq() const override { return last_seq_; }
  std::uint64_t base_version() const override { return manifest_.base_version; }

  /// Writes `snapshot` as the next-generation base with an empty log and
  /// commits by atomically replacing the manifest.
  Status<StoreError> compact(const NetworkSnapshot& snapshot, const CrashHook& crash = {});

  const Manifest& manifest() const { return manifest_; }
  const std::filesystem::path& data_dir() const { return dir_; }

 private:
  FileEditStore(std::filesystem::path dir, Manifest manifest, int fd, std::uint64_t last_seq);

  std::filesystem::path dir_;
  Manifest manifest_;
  int fd_ = -1;
  std::uint64_t last_seq_ = 0;
};

/// Offline compaction of a store directory.
Status<StoreError> compact(const std::filesystem::path& data_dir, const CrashHook& crash = {});

}  // namespace netvis

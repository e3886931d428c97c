#include "netvis/persistence.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <sys/stat.h>
#include <unistd.h>
#include <zlib.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "netvis/json_codec.hpp"
#include "netvis/xml_io.hpp"

namespace netvis {

namespace fs = std::filesystem;

std::string_view to_string(StoreErrorCode code) {
  switch (code) {
    case StoreErrorCode::kIoFailure: return "IoFailure";
    case StoreErrorCode::kCorruptBase: return "CorruptBase";
    case StoreErrorCode::kUnreplayableEntry: return "UnreplayableEntry";
    case StoreErrorCode::kBadManifest: return "BadManifest";
    case StoreErrorCode::kNotInitialized: return "NotInitialized";
  }
  return "Unknown";
}

std::string_view to_string(CompactStep step) {
  switch (step) {
    case CompactStep::kBaseWritten: return "base-written";
    case CompactStep::kLogCreated: return "log-created";
    case CompactStep::kManifestWritten: return "manifest-written";
    case CompactStep::kManifestCommitted: return "manifest-committed";
  }
  return "unknown";
}

namespace {

constexpr const char* kManifestName = "manifest";
constexpr const char* kManifestTemp = "manifest.tmp";

StoreError io_error(const std::string& what, const fs::path& path) {
  return StoreError{StoreErrorCode::kIoFailure, what + " " + path.string() + ": " + std::strerror(errno)};
}

std::uint32_t read_be32(std::string_view bytes, std::size_t at) {
  return (std::uint32_t{static_cast<unsigned char>(bytes[at])} << 24) |
         (std::uint32_t{static_cast<unsigned char>(bytes[at + 1])} << 16) |
         (std::uint32_t{static_cast<unsigned char>(bytes[at + 2])} << 8) |
         std::uint32_t{static_cast<unsigned char>(bytes[at + 3])};
}

void append_be32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v >> 24));
  out.push_back(static_cast<char>(v >> 16));
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v));
}

std::uint32_t crc_of(std::string_view payload) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(payload.data()), static_cast<uInt>(payload.size())));
}

// Intact record starting exactly at `at`.
bool record_at(std::string_view bytes, std::size_t at) {
  if (bytes.size() - at < 9) return false;
  std::uint32_t len = read_be32(bytes, at);
  if (len == 0 || len > kMaxRecordPayload || at + 8 + len > bytes.size()) return false;
  if (bytes[at + 4] != '{') return false;
  return crc_of(bytes.substr(at + 4, len)) == read_be32(bytes, at + 4 + len);
}

bool intact_record_after(std::string_view bytes, std::size_t from) {
  for (std::size_t at = from; at + 9 <= bytes.size(); ++at) {
    if (record_at(bytes, at)) return true;
  }
  return false;
}

Expected<std::string, StoreError> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return unexpected(io_error("cannot open", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) return unexpected(io_error("cannot read", path));
  return buf.str();
}

Status<StoreError> write_all(int fd, std::string_view bytes, const fs::path& path) {
  while (!bytes.empty()) {
    ssize_t n = ::write(fd, bytes.data(), bytes.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      return unexpected(io_error("cannot write", path));
    }
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
  return ok_status;
}

Status<StoreError> write_file_durable(const fs::path& path, std::string_view bytes) {
  int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) return unexpected(io_error("cannot create", path));
  auto s = write_all(fd, bytes, path);
  if (s && ::fsync(fd) != 0) s = unexpected(io_error("cannot sync", path));
  ::close(fd);
  return s;
}

Status<StoreError> sync_dir(const fs::path& dir) {
  int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (fd < 0) return unexpected(io_error("cannot open directory", dir));
  int rc = ::fsync(fd);
  ::close(fd);
  if (rc != 0) return unexpected(io_error("cannot sync directory", dir));
  return ok_status;
}

Status<StoreError> commit_manifest(const fs::path& dir, const Manifest& manifest, const CrashHook* crash) {
  if (auto s = write_file_durable(dir / kManifestTemp, manifest.render()); !s) return s;
  if (crash && *crash && (*crash)(CompactStep::kManifestWritten)) {
    return unexpected(StoreError{StoreErrorCode::kIoFailure, "simulated crash"});
  }
  std::error_code ec;
  fs::rename(dir / kManifestTemp, dir / kManifestName, ec);
  if (ec) return unexpected(StoreError{StoreErrorCode::kIoFailure, "cannot commit manifest: " + ec.message()});
  return sync_dir(dir);
}

bool is_store_file(const std::string& name) {
  auto ends_with = [&](std::string_view suffix) {
    return name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  return name == kManifestTemp || (name.rfind("base", 0) == 0 && ends_with(".xml")) ||
         (name.rfind("edits", 0) == 0 && ends_with(".log"));
}

void remove_unreferenced(const fs::path& dir, const Manifest& manifest) {
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    std::string name = entry.path().filename().string();
    if (!entry.is_regular_file() || !is_store_file(name)) continue;
    if (name == manifest.base || name == manifest.log) continue;
    fs::remove(entry.path(), ec);
  }
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

std::string Manifest::render() const {
  std::ostringstream out;
  out << "format_version = " << format_version << "\n"
      << "generation = " << generation << "\n"
      << "base = " << base << "\n"
      << "base_hash = sha256:" << base_hash << "\n"
      << "base_version = " << base_version << "\n"
      << "log = " << log << "\n";
  return out.str();
}

Expected<Manifest, StoreError> Manifest::parse(std::string_view text) {
  Manifest m;
  m.base.clear();
  m.log.clear();
  bool have_version = false;
  bool have_hash = false;
  auto bad = [](const std::string& why) { return unexpected(StoreError{StoreErrorCode::kBadManifest, why}); };
  auto number = [](std::string_view v, std::uint64_t& out) {
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    return ec == std::errc{} && p == v.data() + v.size();
  };
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) return bad("malformed manifest line: " + line);
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    std::uint64_t n = 0;
    if (key == "format_version") {
      if (!number(value, n)) return bad("bad format_version");
      m.format_version = static_cast<int>(n);
      have_version = true;
    } else if (key == "generation") {
      if (!number(value, n)) return bad("bad generation");
      m.generation = n;
    } else if (key == "base") {
      m.base = value;
    } else if (key == "base_hash") {
      if (value.rfind("sha256:", 0) != 0) return bad("base_hash must be sha256:<hex>");
      m.base_hash = value.substr(7);
      have_hash = true;
    } else if (key == "base_version") {
      if (!number(value, n)) return bad("bad base_version");
      m.base_version = n;
    } else if (key == "log") {
      m.log = value;
    }
  }
  if (!have_version || m.format_version != kStoreFormatVersion) return bad("unsupported format_version");
  if (m.base.empty() || m.log.empty() || !have_hash) return bad("manifest lacks base, base_hash or log");
  if (m.base.find('/') != std::string::npos || m.log.find('/') != std::string::npos) {
    return bad("store file names must be plain names");
  }
  return m;
}

std::string encode_record(std::string_view payload) {
  std::string out;
  out.reserve(payload.size() + 8);
  append_be32(out, static_cast<std::uint32_t>(payload.size()));
  out.append(payload);
  append_be32(out, crc_of(payload));
  return out;
}

LogScan scan_log(std::string_view bytes) {
  LogScan scan;
  std::size_t at = 0;
  while (at < bytes.size()) {
    const std::size_t rest = bytes.size() - at;
    std::uint32_t len = rest >= 4 ? read_be32(bytes, at) : 0;
    bool fits = rest >= 4 && len > 0 && len <= kMaxRecordPayload && len + 8 <= rest;
    if (!fits) {
      // A partial record is only a torn tail if nothing intact follows;
      // a damaged length field mid-log must not hide later entries.
      if (intact_record_after(bytes, at + 1)) {
        scan.corrupt_offset = at;
      } else {
        scan.torn_bytes = rest;
      }
      break;
    }
    std::string_view payload = bytes.substr(at + 4, len);
    if (crc_of(payload) != read_be32(bytes, at + 4 + len)) {
      if (at + 8 + len == bytes.size()) {
        scan.torn_bytes = rest;
      } else {
        scan.corrupt_offset = at;
      }
      break;
    }
    scan.payloads.emplace_back(payload);
    at += 8 + len;
    scan.record_ends.push_back(at);
  }
  return scan;
}

Expected<Recovered, StoreError> recover(const fs::path& dir) {
  if (!fs::exists(dir / kManifestName)) {
    return unexpected(StoreError{StoreErrorCode::kNotInitialized, "no manifest in " + dir.string()});
  }
  auto manifest_text = read_file(dir / kManifestName);
  if (!manifest_text) return unexpected(manifest_text.error());
  auto manifest = Manifest::parse(*manifest_text);
  if (!manifest) return unexpected(manifest.error());

  Recovered r;
  r.manifest = *manifest;
  auto base_bytes = read_file(dir / r.manifest.base);
  if (!base_bytes) return unexpected(StoreError{StoreErrorCode::kCorruptBase, base_bytes.error().message});
  if (sha256_hex(*base_bytes) != r.manifest.base_hash) {
    return unexpected(StoreError{StoreErrorCode::kCorruptBase, "base snapshot hash mismatch"});
  }
  ParseReport report = parse_topology(*base_bytes);
  if (!report.ok()) {
    std::string why = report.errors.empty() ? "unparseable base" : report.errors.front().message;
    return unexpected(StoreError{StoreErrorCode::kCorruptBase, "base snapshot does not parse: " + why});
  }
  r.base = std::move(*report.snapshot);
  r.base.version = r.manifest.base_version;

  auto log_bytes = read_file(dir / r.manifest.log);
  if (!log_bytes) return unexpected(log_bytes.error());
  LogScan scan = scan_log(*log_bytes);
  if (scan.corrupt_offset) {
    return unexpected(StoreError{StoreErrorCode::kUnreplayableEntry,
                                 "damaged record at byte " + std::to_string(*scan.corrupt_offset) + " (entry " +
                                     std::to_string(scan.payloads.size() + 1) + ") is followed by more data"});
  }
  r.log_valid_bytes = scan.valid_bytes();
  r.torn_bytes = scan.torn_bytes;
  if (scan.torn_bytes > 0) {
    r.warnings.push_back("discarded torn record of " + std::to_string(scan.torn_bytes) + " bytes at offset " +
                         std::to_string(r.log_valid_bytes));
  }

  NetworkSnapshot current = r.base;
  for (std::size_t i = 0; i < scan.payloads.size(); ++i) {
    auto op = decode_edit(scan.payloads[i]);
    if (!op) {
      return unexpected(StoreError{StoreErrorCode::kUnreplayableEntry,
                                   "entry " + std::to_string(i + 1) + " does not decode: " + op.error()});
    }
    if (op->seq != i + 1) {
      return unexpected(StoreError{StoreErrorCode::kUnreplayableEntry,
                                   "entry " + std::to_string(i + 1) + " carries seq " + std::to_string(op->seq)});
    }
    auto next = apply_edit(current, *op);
    if (!next) {
      return unexpected(StoreError{StoreErrorCode::kUnreplayableEntry,
                                   "entry " + std::to_string(i + 1) + " no longer applies: " + next.error().message});
    }
    current = std::move(*next);
    r.entries.push_back(std::move(*op));
  }
  r.snapshot = std::move(current);
  return r;
}

FileEditStore::FileEditStore(fs::path dir, Manifest manifest, int fd, std::uint64_t last_seq)
    : dir_(std::move(dir)), manifest_(std::move(manifest)), fd_(fd), last_seq_(last_seq) {}

FileEditStore::~FileEditStore() {
  if (fd_ >= 0) ::close(fd_);
}

Status<StoreError> FileEditStore::initialize(const fs::path& dir, const NetworkSnapshot& base) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) return unexpected(StoreError{StoreErrorCode::kIoFailure, "cannot create " + dir.string()});
  if (fs::exists(dir / kManifestName)) {
    return unexpected(StoreError{StoreErrorCode::kIoFailure, "store already initialized in " + dir.string()});
  }
  Manifest m;
  std::string xml = serialize_topology(base);
  m.base_hash = sha256_hex(xml);
  m.base_version = base.version;
  if (auto s = write_file_durable(dir / m.base, xml); !s) return s;
  if (auto s = write_file_durable(dir / m.log, ""); !s) return s;
  return commit_manifest(dir, m, nullptr);
}

Expected<std::unique_ptr<FileEditStore>, StoreError> FileEditStore::open(const fs::path& dir, Recovered* out) {
  auto r = recover(dir);
  if (!r) return unexpected(r.error());
  const fs::path log_path = dir / r->manifest.log;
  if (r->torn_bytes > 0) {
    if (::truncate(log_path.c_str(), static_cast<off_t>(r->log_valid_bytes)) != 0) {
      return unexpected(io_error("cannot truncate", log_path));
    }
  }
  remove_unreferenced(dir, r->manifest);
  int fd = ::open(log_path.c_str(), O_WRONLY | O_APPEND | O_CLOEXEC);
  if (fd < 0) return unexpected(io_error("cannot open", log_path));
  std::unique_ptr<FileEditStore> store(new FileEditStore(dir, r->manifest, fd, r->entries.size()));
  if (out) *out = std::move(*r);
  return store;
}

Expected<std::uint64_t, StoreError> FileEditStore::append(const EditOp& op) {
  const fs::path log_path = dir_ / manifest_.log;
  EditOp entry = op;
  entry.seq = last_seq_ + 1;
  std::string record = encode_record(encode_edit(entry));
  off_t before = ::lseek(fd_, 0, SEEK_END);
  auto s = write_all(fd_, record, log_path);
  if (s && ::fsync(fd_) != 0) s = unexpected(io_error("cannot sync", log_path));
  if (!s) {
    if (before >= 0 && ::ftruncate(fd_, before) == 0) ::fsync(fd_);
    return unexpected(s.error());
  }
  last_seq_ = entry.seq;
  return entry.seq;
}

Status<StoreError> FileEditStore::rebase(const NetworkSnapshot& snapshot) { return compact(snapshot); }

Status<StoreError> FileEditStore::compact(const NetworkSnapshot& snapshot, const CrashHook& crash) {
  auto crashed = [&](CompactStep step) { return crash && crash(step); };
  const auto simulated = [] { return unexpected(StoreError{StoreErrorCode::kIoFailure, "simulated crash"}); };

  Manifest next = manifest_;
  next.generation = manifest_.generation + 1;
  next.base = "base." + std::to_string(next.generation) + ".xml";
  next.log = "edits." + std::to_string(next.generation) + ".log";
  next.base_version = snapshot.version;
  std::string xml = serialize_topology(snapshot);
  next.base_hash = sha256_hex(xml);

  if (auto s = write_file_durable(dir_ / next.base, xml); !s) return s;
  if (crashed(CompactStep::kBaseWritten)) return simulated();
  if (auto s = write_file_durable(dir_ / next.log, ""); !s) return s;
  if (crashed(CompactStep::kLogCreated)) return simulated();
  if (auto s = commit_manifest(dir_, next, &crash); !s) return s;
  if (crashed(CompactStep::kManifestCommitted)) return simulated();

  int fd = ::open((dir_ / next.log).c_str(), O_WRONLY | O_APPEND | O_CLOEXEC);
  if (fd < 0) return unexpected(io_error("cannot open", dir_ / next.log));
  if (fd_ >= 0) ::close(fd_);
  fd_ = fd;
  manifest_ = std::move(next);
  last_seq_ = 0;
  remove_unreferenced(dir_, manifest_);
  return ok_status;
}

Status<StoreError> compact(const fs::path& dir, const CrashHook& crash) {
  Recovered r;
  auto store = FileEditStore::open(dir, &r);
  if (!store) return unexpected(store.error());
  return (*store)->compact(r.snapshot, crash);
}

}  // namespace netvis

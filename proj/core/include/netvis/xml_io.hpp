#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "netvis/topology.hpp"

namespace netvis {

struct Diagnostic {
  std::uint64_t line = 0;
  std::uint64_t column = 0;
  std::string message;
};

/// Result of reading a topology document. `snapshot` is present iff
/// `errors` is empty.
struct ParseReport {
  std::optional<NetworkSnapshot> snapshot;
  std::vector<Diagnostic> errors;
  std::vector<Diagnostic> warnings;

  bool ok() const { return snapshot.has_value(); }
};

/// Accepts arbitrary bytes. Unknown elements and attributes are skipped with
/// a warning; malformed XML, missing required attributes, duplicate ids,
/// dangling references and out-of-range values are errors. The resulting
/// snapshot has version 0.
ParseReport parse_topology(std::string_view xml_bytes);

/// Deterministic UTF-8 document, entities ordered by id.
std::string serialize_topology(const NetworkSnapshot& snapshot);

/// Fixed-point text with at least `min_decimals` fractional digits that
/// parses back to exactly `value`.
std::string format_decimal(double value, int min_decimals = 0);

}  // namespace netvis

#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "srtg/temporal/embedding.hpp"

namespace srtg::temporal {

/// One gate verdict for one clip at one SRTG layer.
struct GateRecord {
  std::string layer;
  std::size_t clip_id = 0;
  GateDecision decision;

  friend bool operator==(const GateRecord&, const GateRecord&) = default;
};

/// {"layer","clip_id","verdict","match_indices_fwd","match_indices_bwd"} on one line.
std::string to_json_line(const GateRecord& record);
GateRecord parse_json_line(const std::string& line);

void write_json_lines(std::ostream& os, std::span<const GateRecord> records);
std::vector<GateRecord> read_json_lines(std::istream& is);

/// Fraction of records per layer whose clip was fused (Open or Inactive).
std::map<std::string, double> open_rates(std::span<const GateRecord> records);

}  // namespace srtg::temporal

#include "srtg/temporal/gate_log.hpp"

#include <istream>
#include <ostream>

#include "json.hpp"

namespace srtg::temporal {

std::string to_json_line(const GateRecord& record) {
  nlohmann::ordered_json j;
  j["layer"] = record.layer;
  j["clip_id"] = record.clip_id;
  j["verdict"] = std::string(to_string(record.decision.verdict));
  j["match_indices_fwd"] = record.decision.forward_matches;
  j["match_indices_bwd"] = record.decision.backward_matches;
  return j.dump();
}

GateRecord parse_json_line(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  GateRecord r;
  r.layer = j.at("layer").get<std::string>();
  r.clip_id = j.at("clip_id").get<std::size_t>();
  r.decision.verdict = verdict_from_string(j.at("verdict").get<std::string>());
  r.decision.forward_matches = j.at("match_indices_fwd").get<std::vector<std::size_t>>();
  r.decision.backward_matches = j.at("match_indices_bwd").get<std::vector<std::size_t>>();
  auto identity = [](const std::vector<std::size_t>& m) {
    for (std::size_t t = 0; t < m.size(); ++t) {
      if (m[t] != t) return false;
    }
    return !m.empty();
  };
  r.decision.forward_consistent = identity(r.decision.forward_matches);
  r.decision.backward_consistent = identity(r.decision.backward_matches);
  return r;
}

void write_json_lines(std::ostream& os, std::span<const GateRecord> records) {
  for (const auto& r : records) os << to_json_line(r) << '\n';
}

std::vector<GateRecord> read_json_lines(std::istream& is) {
  std::vector<GateRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty()) out.push_back(parse_json_line(line));
  }
  return out;
}

std::map<std::string, double> open_rates(std::span<const GateRecord> records) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
  for (const auto& r : records) {
    auto& [fused, total] = counts[r.layer];
    ++total;
    if (r.decision.verdict != Verdict::kClosed) ++fused;
  }
  std::map<std::string, double> rates;
  for (const auto& [layer, c] : counts) {
    rates[layer] = static_cast<double>(c.first) / static_cast<double>(c.second);
  }
  return rates;
}

}  // namespace srtg::temporal

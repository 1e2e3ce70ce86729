#include "srtg/temporal/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "srtg/tensor/tensor.hpp"

namespace srtg::temporal {

using tensor::ShapeError;

TemporalEmbedding::TemporalEmbedding(std::size_t frames, std::size_t channels,
                                     std::vector<double> values)
    : frames_(frames), channels_(channels), values_(std::move(values)) {
  if (frames_ == 0 || channels_ == 0) throw ShapeError("embedding needs T >= 1 and C >= 1");
  if (values_.size() != frames_ * channels_) {
    throw ShapeError("embedding holds " + std::to_string(values_.size()) + " values, expected " +
                     std::to_string(frames_ * channels_));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw std::invalid_argument("embedding values must be finite");
  }
}

TemporalEmbedding::TemporalEmbedding(std::initializer_list<std::initializer_list<double>> rows)
    : frames_(rows.size()), channels_(rows.size() ? rows.begin()->size() : 0) {
  if (frames_ == 0 || channels_ == 0) throw ShapeError("embedding needs T >= 1 and C >= 1");
  for (const auto& row : rows) {
    if (row.size() != channels_) throw ShapeError("all frames must share dimension C");
    values_.insert(values_.end(), row.begin(), row.end());
  }
}

std::span<const double> TemporalEmbedding::frame(std::size_t t) const {
  if (t >= frames_) throw std::out_of_range("frame index out of range");
  return std::span<const double>(values_).subspan(t * channels_, channels_);
}

TemporalEmbedding TemporalEmbedding::translated(std::span<const double> shift) const {
  if (shift.size() != channels_) throw ShapeError("shift must have dimension C");
  std::vector<double> out(values_);
  for (std::size_t t = 0; t < frames_; ++t) {
    for (std::size_t c = 0; c < channels_; ++c) out[t * channels_ + c] += shift[c];
  }
  return {frames_, channels_, std::move(out)};
}

TemporalEmbedding TemporalEmbedding::permuted(std::span<const std::size_t> order) const {
  if (order.size() != frames_) throw ShapeError("permutation must have length T");
  std::vector<double> out;
  out.reserve(values_.size());
  for (std::size_t src : order) {
    auto f = frame(src);
    out.insert(out.end(), f.begin(), f.end());
  }
  return {frames_, channels_, std::move(out)};
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("vector dimensions differ (" + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  }
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    d += diff * diff;
  }
  return d;
}

std::vector<double> soft_match_weights(std::span<const double> query,
                                       const TemporalEmbedding& reference) {
  const std::size_t frames = reference.frames();
  std::vector<double> z(frames);
  for (std::size_t i = 0; i < frames; ++i) z[i] = -squared_distance(query, reference.frame(i));
  const double peak = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double& v : z) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double& v : z) v /= total;
  return z;
}

std::vector<double> soft_nearest_neighbor(std::span<const double> query,
                                          const TemporalEmbedding& reference) {
  const std::vector<double> z = soft_match_weights(query, reference);
  std::vector<double> match(reference.channels(), 0.0);
  for (std::size_t i = 0; i < reference.frames(); ++i) {
    auto f = reference.frame(i);
    for (std::size_t c = 0; c < match.size(); ++c) match[c] += z[i] * f[c];
  }
  return match;
}

std::size_t nearest_frame_index(std::span<const double> soft_match,
                                const TemporalEmbedding& reference) {
  std::size_t best = 0;
  double best_d = squared_distance(soft_match, reference.frame(0));
  for (std::size_t i = 1; i < reference.frames(); ++i) {
    const double d = squared_distance(soft_match, reference.frame(i));
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kOpen:
      return "open";
    case Verdict::kClosed:
      return "closed";
    case Verdict::kInactiveFused:
      return "inactive";
  }
  return "closed";
}

Verdict verdict_from_string(std::string_view s) {
  if (s == "open") return Verdict::kOpen;
  if (s == "closed") return Verdict::kClosed;
  if (s == "inactive") return Verdict::kInactiveFused;
  throw std::invalid_argument("unknown gate verdict '" + std::string(s) + "'");
}

namespace {

std::vector<std::size_t> match_into(const TemporalEmbedding& from, const TemporalEmbedding& into) {
  std::vector<std::size_t> matches(from.frames());
  for (std::size_t t = 0; t < from.frames(); ++t) {
    matches[t] = nearest_frame_index(soft_nearest_neighbor(from.frame(t), into), into);
  }
  return matches;
}

bool is_identity(const std::vector<std::size_t>& m) {
  for (std::size_t t = 0; t < m.size(); ++t) {
    if (m[t] != t) return false;
  }
  return true;
}

}  // namespace

GateDecision cycle_consistent(const TemporalEmbedding& a, const TemporalEmbedding& b) {
  if (a.frames() != b.frames()) {
    throw ShapeError("cycle_consistent: frame counts differ (" + std::to_string(a.frames()) +
                     " vs " + std::to_string(b.frames()) + ")");
  }
  if (a.channels() != b.channels()) {
    throw ShapeError("cycle_consistent: channel counts differ (" + std::to_string(a.channels()) +
                     " vs " + std::to_string(b.channels()) + ")");
  }
  GateDecision d;
  d.forward_matches = match_into(a, b);
  d.backward_matches = match_into(b, a);
  d.forward_consistent = is_identity(d.forward_matches);
  d.backward_consistent = is_identity(d.backward_matches);
  d.verdict = d.forward_consistent && d.backward_consistent ? Verdict::kOpen : Verdict::kClosed;
  return d;
}

}  // namespace srtg::temporal

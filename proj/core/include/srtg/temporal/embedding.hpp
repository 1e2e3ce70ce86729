#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace srtg::temporal {

/// A clip's sequence of T frame vectors of dimension C, stored frame-major.
class TemporalEmbedding {
 public:
  TemporalEmbedding(std::size_t frames, std::size_t channels, std::vector<double> values);
  /// One inner list per frame.
  TemporalEmbedding(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t frames() const noexcept { return frames_; }
  std::size_t channels() const noexcept { return channels_; }
  std::span<const double> frame(std::size_t t) const;
  std::span<const double> values() const noexcept { return values_; }

  /// Copy with every frame offset by `shift` (length C).
  TemporalEmbedding translated(std::span<const double> shift) const;
  /// Copy whose frame t is this embedding's frame order[t].
  TemporalEmbedding permuted(std::span<const std::size_t> order) const;

 private:
  std::size_t frames_;
  std::size_t channels_;
  std::vector<double> values_;
};

double squared_distance(std::span<const double> a, std::span<const double> b);

/// Softmax over i of -||query - reference_i||^2 (weights sum to one).
std::vector<double> soft_match_weights(std::span<const double> query,
                                       const TemporalEmbedding& reference);

/// Σ_i z_i · reference_i with z from soft_match_weights.
std::vector<double> soft_nearest_neighbor(std::span<const double> query,
                                          const TemporalEmbedding& reference);

/// argmin_i ||soft_match - reference_i||^2; ties go to the smallest index.
std::size_t nearest_frame_index(std::span<const double> soft_match,
                                const TemporalEmbedding& reference);

enum class Verdict { kOpen, kClosed, kInactiveFused };

std::string_view to_string(Verdict v);
Verdict verdict_from_string(std::string_view s);

struct GateDecision {
  Verdict verdict = Verdict::kClosed;
  bool forward_consistent = false;   // every A_t matched back to index t in B
  bool backward_consistent = false;  // every B_t matched back to index t in A
  std::vector<std::size_t> forward_matches;
  std::vector<std::size_t> backward_matches;

  friend bool operator==(const GateDecision&, const GateDecision&) = default;
};

/// Cyclic consistency of two same-shape embeddings. For each t the soft
/// nearest neighbour of A_t in B must resolve to frame t of B, and vice
/// versa. The verdict is Open only when all 2T checks pass.
GateDecision cycle_consistent(const TemporalEmbedding& a, const TemporalEmbedding& b);

}  // namespace srtg::temporal

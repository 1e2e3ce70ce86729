#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "srtg/temporal/unit.hpp"
#include "srtg/tensor/tensor.hpp"

namespace srtg::backbone {

using tensor::Extent3;

/// Invalid block or network description.
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class DepthKind { kSimple, kBottleneck };
enum class ConvKind { kFull3d, kTwoPlusOneD };
enum class Placement { kNone, kStart, kTop, kMid, kEnd, kRes, kFinal };

std::string_view to_string(DepthKind v);
std::string_view to_string(ConvKind v);
std::string_view to_string(Placement v);
DepthKind depth_kind_from_string(std::string_view s);
ConvKind conv_kind_from_string(std::string_view s);
Placement placement_from_string(std::string_view s);

/// Parses "TxHxW", e.g. "1x2x2".
Extent3 parse_extent(std::string_view s);

/// Simple blocks have no Top or End insertion point.
bool placement_allowed(DepthKind depth, Placement placement);

/// Input clip extents (C, T, H, W), written "CxTxHxW".
struct ClipShape {
  std::size_t channels = 0;
  std::size_t frames = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  friend bool operator==(const ClipShape&, const ClipShape&) = default;
};

ClipShape parse_clip_shape(std::string_view s);
std::string to_string(const ClipShape& s);

struct BlockSpec {
  DepthKind depth = DepthKind::kSimple;
  ConvKind conv = ConvKind::kFull3d;
  Placement placement = Placement::kNone;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  Extent3 stride{1, 1, 1};
  temporal::FusionMode fusion = temporal::FusionMode::kMultiplicative;
  bool gate_active = true;
  std::size_t expansion = 4;  // Bottleneck inner width = out_channels / expansion
  std::size_t lstm_layers = 2;

  void validate() const;
  std::size_t inner_channels() const;
  bool has_projection() const;
  /// Channel count of the activation the SRTG unit sees at `placement`.
  std::size_t srtg_channels() const;
};

struct PoolSpec {
  Extent3 kernel{1, 3, 3};
  Extent3 stride{1, 2, 2};
  Extent3 padding{0, 1, 1};
};

struct StemSpec {
  std::size_t channels = 64;
  Extent3 kernel{3, 7, 7};
  Extent3 stride{1, 2, 2};
  std::optional<PoolSpec> pool;
};

struct StageSpec {
  std::size_t blocks = 1;
  std::size_t channels = 64;  // block output (Simple) or inner width (Bottleneck)
  Extent3 stride{1, 1, 1};    // applied by the first block of the stage
};

struct NetworkSpec {
  std::size_t in_channels = 3;
  StemSpec stem;
  std::vector<StageSpec> stages;
  DepthKind depth = DepthKind::kSimple;
  ConvKind conv = ConvKind::kFull3d;
  Placement placement = Placement::kFinal;
  temporal::FusionMode fusion = temporal::FusionMode::kMultiplicative;
  bool gate_active = true;
  std::size_t expansion = 4;
  std::size_t lstm_layers = 2;
  std::size_t num_classes = 2;

  void validate() const;
  /// Every residual block in forward order, with channels chained.
  std::vector<BlockSpec> block_specs() const;
  std::size_t feature_channels() const;
  /// Same network with every SRTG unit removed.
  NetworkSpec without_srtg() const;
};

/// Full-size r3d-34: Simple blocks [3,4,6,3] at widths 64..512, a 5x7x7
/// stem, a spatial-only max pool and temporal downsampling in stage 2 only.
NetworkSpec r3d34_spec(std::size_t num_classes = 200);
/// Full-size r3d-50 on the same recipe with Bottleneck blocks.
NetworkSpec r3d50_spec(std::size_t num_classes = 200);

}  // namespace srtg::backbone

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "srtg/backbone/layers.hpp"
#include "srtg/temporal/gate_log.hpp"
#include "srtg/temporal/lstm.hpp"

namespace srtg::backbone {

struct ForwardContext {
  bool training = false;
  /// When set, every SRTG unit appends one record per clip.
  std::vector<temporal::GateRecord>* gate_log = nullptr;
  /// Added to in-batch clip indices when logging.
  std::size_t clip_offset = 0;
};

/// Residual block with an optional SRTG unit.
///
///   Simple:     [Start] conv-bn-relu [Mid] conv-bn (+ skip [Res]) relu [Final]
///   Bottleneck: [Start] 1x1-bn-relu [Top] kxk-bn-relu [Mid] 1x1-bn [End]
///               (+ skip [Res]) relu [Final]
///
/// The stride sits on the first conv (Simple) or the kxk conv (Bottleneck);
/// a strided 1x1x1 projection with batch norm replaces the identity skip when
/// the shape changes. Res applies the unit to the skip path after projection.
class ResidualBlock {
 public:
  explicit ResidualBlock(const BlockSpec& spec, std::string name = "block");

  void initialize(std::mt19937_64& rng);
  Var forward(Var x, ForwardContext& ctx);

  const BlockSpec& spec() const { return spec_; }
  const std::string& name() const { return name_; }
  std::string srtg_layer_name() const { return name_ + ".srtg"; }
  bool has_srtg() const { return srtg_.has_value(); }
  temporal::LstmParams* srtg_params() { return srtg_ ? &*srtg_ : nullptr; }

  void collect(NamedParams& params, NamedBuffers& buffers);

 private:
  Var apply_srtg(Var x, Placement at, ForwardContext& ctx);

  BlockSpec spec_;
  std::string name_;
  std::vector<ConvUnit> convs_;
  std::vector<BatchNorm3d> norms_;
  std::optional<Conv3dLayer> projection_;
  std::optional<BatchNorm3d> projection_norm_;
  std::optional<temporal::LstmParams> srtg_;
};

}  // namespace srtg::backbone

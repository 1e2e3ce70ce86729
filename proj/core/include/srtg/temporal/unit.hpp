#pragma once

#include <string_view>
#include <vector>

#include "srtg/temporal/embedding.hpp"
#include "srtg/temporal/lstm.hpp"

namespace srtg::temporal {

enum class FusionMode {
  kMultiplicative,  // main · σ(recurrent)
  kAdditive,        // main + recurrent
};

std::string_view to_string(FusionMode mode);
FusionMode fusion_mode_from_string(std::string_view s);

/// (N,C,T,H,W) -> (N,T,C) per-frame, per-channel spatial mean.
Var squeeze(Var volume);

/// Embedding of one clip taken from an (N,T,C) sequence's forward values.
TemporalEmbedding clip_embedding(Var sequence, std::size_t clip);

/// Broadcasts the (N,T,C) recurrent stream over H and W and combines it with
/// the (N,C,T,H,W) main stream. Clips whose entry in `fused_clips` is false
/// pass through bit-identically. An empty mask fuses every clip.
Var fuse(Var main, Var recurrent, FusionMode mode, const std::vector<bool>& fused_clips = {});

struct SrtgOptions {
  bool gate_active = true;
  FusionMode fusion = FusionMode::kMultiplicative;
};

struct SrtgOutput {
  Var output;
  std::vector<GateDecision> decisions;  // one per clip
};

/// Squeeze, two-layer recursion, per-clip temporal gate and fusion.
/// With an active gate a clip is fused only when its squeezed embedding and
/// the LSTM output are cycle-consistent; otherwise it passes unchanged.
/// The verdict is a hard routing decision and carries no gradient.
SrtgOutput srtg_unit(Var input, LstmParams& params, const SrtgOptions& options);

}  // namespace srtg::temporal

#include "srtg/backbone/spec.hpp"

#include <charconv>
#include <sstream>

namespace srtg::backbone {

std::string_view to_string(DepthKind v) {
  return v == DepthKind::kSimple ? "simple" : "bottleneck";
}

std::string_view to_string(ConvKind v) {
  return v == ConvKind::kFull3d ? "full_3d" : "two_plus_one_d";
}

std::string_view to_string(Placement v) {
  switch (v) {
    case Placement::kNone:
      return "none";
    case Placement::kStart:
      return "start";
    case Placement::kTop:
      return "top";
    case Placement::kMid:
      return "mid";
    case Placement::kEnd:
      return "end";
    case Placement::kRes:
      return "res";
    case Placement::kFinal:
      return "final";
  }
  return "none";
}

DepthKind depth_kind_from_string(std::string_view s) {
  if (s == "simple") return DepthKind::kSimple;
  if (s == "bottleneck") return DepthKind::kBottleneck;
  throw SpecError("unknown depth kind '" + std::string(s) + "'");
}

ConvKind conv_kind_from_string(std::string_view s) {
  if (s == "full_3d" || s == "3d") return ConvKind::kFull3d;
  if (s == "two_plus_one_d" || s == "2+1d") return ConvKind::kTwoPlusOneD;
  throw SpecError("unknown conv kind '" + std::string(s) + "'");
}

Placement placement_from_string(std::string_view s) {
  for (Placement p : {Placement::kNone, Placement::kStart, Placement::kTop, Placement::kMid,
                      Placement::kEnd, Placement::kRes, Placement::kFinal}) {
    if (to_string(p) == s) return p;
  }
  throw SpecError("unknown SRTG placement '" + std::string(s) + "'");
}

namespace {

std::vector<std::size_t> parse_dims(std::string_view s, std::size_t count, const char* what) {
  std::vector<std::size_t> dims;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find('x', start);
    if (end == std::string_view::npos) end = s.size();
    std::string_view part = s.substr(start, end - start);
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (part.empty() || ec != std::errc() || ptr != part.data() + part.size()) {
      throw SpecError(std::string("malformed ") + what + " '" + std::string(s) + "'");
    }
    dims.push_back(value);
    start = end + 1;
  }
  if (dims.size() != count) {
    throw SpecError(std::string(what) + " '" + std::string(s) + "' must have " +
                    std::to_string(count) + " fields");
  }
  return dims;
}

}  // namespace

Extent3 parse_extent(std::string_view s) {
  auto d = parse_dims(s, 3, "extent TxHxW");
  return {d[0], d[1], d[2]};
}

ClipShape parse_clip_shape(std::string_view s) {
  auto d = parse_dims(s, 4, "input shape CxTxHxW");
  ClipShape c{d[0], d[1], d[2], d[3]};
  if (!c.channels || !c.frames || !c.height || !c.width) {
    throw SpecError("input shape extents must be positive");
  }
  return c;
}

std::string to_string(const ClipShape& s) {
  std::ostringstream os;
  os << s.channels << 'x' << s.frames << 'x' << s.height << 'x' << s.width;
  return os.str();
}

bool placement_allowed(DepthKind depth, Placement placement) {
  if (depth == DepthKind::kBottleneck) return true;
  return placement != Placement::kTop && placement != Placement::kEnd;
}

namespace {

void check_stride(const Extent3& s) {
  if (!s.t || !s.h || !s.w) throw SpecError("strides must be positive");
}

}  // namespace

void BlockSpec::validate() const {
  if (!placement_allowed(depth, placement)) {
    throw SpecError("placement '" + std::string(to_string(placement)) +
                    "' does not apply to Simple blocks");
  }
  if (in_channels == 0 || out_channels == 0) throw SpecError("block channels must be positive");
  check_stride(stride);
  if (depth == DepthKind::kBottleneck) {
    if (expansion == 0 || out_channels % expansion != 0) {
      throw SpecError("bottleneck output channels must be divisible by the expansion");
    }
  }
  if (placement != Placement::kNone && lstm_layers == 0) {
    throw SpecError("SRTG units need at least one LSTM layer");
  }
}

std::size_t BlockSpec::inner_channels() const {
  return depth == DepthKind::kBottleneck ? out_channels / expansion : out_channels;
}

bool BlockSpec::has_projection() const {
  return in_channels != out_channels || stride != Extent3{1, 1, 1};
}

std::size_t BlockSpec::srtg_channels() const {
  switch (placement) {
    case Placement::kStart:
      return in_channels;
    case Placement::kTop:
      return inner_channels();
    case Placement::kMid:
      return inner_channels();
    case Placement::kEnd:
    case Placement::kRes:
    case Placement::kFinal:
      return out_channels;
    case Placement::kNone:
      return 0;
  }
  return 0;
}

void NetworkSpec::validate() const {
  if (in_channels == 0) throw SpecError("network input channels must be positive");
  if (stem.channels == 0) throw SpecError("stem channels must be positive");
  check_stride(stem.stride);
  if (!stem.kernel.t || !stem.kernel.h || !stem.kernel.w) {
    throw SpecError("stem kernel must be positive");
  }
  if (stages.empty()) throw SpecError("network needs at least one stage");
  if (num_classes == 0) throw SpecError("num_classes must be positive");
  for (const auto& st : stages) {
    if (st.blocks == 0) throw SpecError("every stage needs at least one block");
  }
  for (const auto& b : block_specs()) b.validate();
}

std::vector<BlockSpec> NetworkSpec::block_specs() const {
  std::vector<BlockSpec> out;
  std::size_t channels = stem.channels;
  for (const auto& st : stages) {
    const std::size_t block_out = depth == DepthKind::kBottleneck ? st.channels * expansion
                                                                  : st.channels;
    for (std::size_t i = 0; i < st.blocks; ++i) {
      BlockSpec b;
      b.depth = depth;
      b.conv = conv;
      b.placement = placement;
      b.in_channels = channels;
      b.out_channels = block_out;
      b.stride = i == 0 ? st.stride : Extent3{1, 1, 1};
      b.fusion = fusion;
      b.gate_active = gate_active;
      b.expansion = expansion;
      b.lstm_layers = lstm_layers;
      out.push_back(b);
      channels = block_out;
    }
  }
  return out;
}

std::size_t NetworkSpec::feature_channels() const {
  const std::size_t last = stages.empty() ? stem.channels : stages.back().channels;
  return depth == DepthKind::kBottleneck ? last * expansion : last;
}

NetworkSpec NetworkSpec::without_srtg() const {
  NetworkSpec s = *this;
  s.placement = Placement::kNone;
  return s;
}

namespace {

NetworkSpec r3d_recipe(DepthKind depth, Placement placement, std::size_t num_classes) {
  NetworkSpec s;
  s.in_channels = 3;
  s.stem.channels = 64;
  s.stem.kernel = {5, 7, 7};
  s.stem.stride = {1, 2, 2};
  s.stem.pool = PoolSpec{};
  s.stages = {{3, 64, {1, 1, 1}}, {4, 128, {2, 2, 2}}, {6, 256, {1, 2, 2}}, {3, 512, {1, 2, 2}}};
  s.depth = depth;
  s.conv = ConvKind::kFull3d;
  s.placement = placement;
  s.num_classes = num_classes;
  return s;
}

}  // namespace

NetworkSpec r3d34_spec(std::size_t num_classes) {
  return r3d_recipe(DepthKind::kSimple, Placement::kFinal, num_classes);
}

NetworkSpec r3d50_spec(std::size_t num_classes) {
  // Mid: the unit sees the inner width, not 4x.
  return r3d_recipe(DepthKind::kBottleneck, Placement::kMid, num_classes);
}

}  // namespace srtg::backbone

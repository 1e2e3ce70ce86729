#include "srtg/backbone/op_count.hpp"

#include <json.hpp>

#include "srtg/backbone/layers.hpp"
#include "srtg/tensor/ops.hpp"

namespace srtg::backbone {

namespace {

constexpr Extent3 kPointwise{1, 1, 1};
constexpr Extent3 kCube{3, 3, 3};

Extent3 window_extent(Extent3 in, Extent3 kernel, Extent3 stride, Extent3 padding) {
  return {tensor::conv_output_extent(in.t, kernel.t, stride.t, padding.t, "T"),
          tensor::conv_output_extent(in.h, kernel.h, stride.h, padding.h, "H"),
          tensor::conv_output_extent(in.w, kernel.w, stride.w, padding.w, "W")};
}

// Mirrors ConvUnit: (2+1)D splits a kernel with temporal and spatial extent.
Extent3 count_conv_unit(ConvKind kind, std::size_t in, std::size_t out, Extent3 kernel,
                        Extent3 stride, Extent3 extent, const std::string& name,
                        OpCount& count) {
  const bool factorize =
      kind == ConvKind::kTwoPlusOneD && kernel.t > 1 && (kernel.h > 1 || kernel.w > 1);
  if (!factorize) {
    const Extent3 o = window_extent(extent, kernel, stride, same_padding(kernel));
    count.add(name, OpCategory::kConvolution, conv_macs(in, out, kernel, o));
    return o;
  }
  const Extent3 spatial{1, kernel.h, kernel.w};
  const Extent3 temporal{kernel.t, 1, 1};
  const Extent3 mid = window_extent(extent, spatial, {1, stride.h, stride.w}, same_padding(spatial));
  count.add(name + ".spatial", OpCategory::kConvolution, conv_macs(in, out, spatial, mid));
  const Extent3 o = window_extent(mid, temporal, {stride.t, 1, 1}, same_padding(temporal));
  count.add(name + ".temporal", OpCategory::kConvolution, conv_macs(out, out, temporal, o));
  return o;
}

}  // namespace

std::string_view to_string(OpCategory c) {
  switch (c) {
    case OpCategory::kConvolution: return "convolution";
    case OpCategory::kLstm: return "lstm";
    case OpCategory::kGate: return "gate";
    case OpCategory::kHead: return "head";
  }
  return "?";
}

void OpCount::add(std::string name, OpCategory category, std::uint64_t macs) {
  switch (category) {
    case OpCategory::kConvolution: convolutions += macs; break;
    case OpCategory::kLstm: lstm += macs; break;
    case OpCategory::kGate: gate += macs; break;
    case OpCategory::kHead: head += macs; break;
  }
  layers.push_back({std::move(name), category, macs});
}

double OpCount::srtg_overhead_ratio() const {
  const std::uint64_t t = total();
  return t == 0 ? 0.0 : static_cast<double>(srtg()) / static_cast<double>(t);
}

std::uint64_t conv_macs(std::size_t in_channels, std::size_t out_channels, Extent3 kernel,
                        Extent3 out_extent) {
  return std::uint64_t{out_channels} * out_extent.t * out_extent.h * out_extent.w * in_channels *
         kernel.t * kernel.h * kernel.w;
}

std::uint64_t lstm_macs(std::size_t frames, std::size_t channels, std::size_t layers) {
  return std::uint64_t{frames} * layers * 4 * channels * (2 * channels);
}

std::uint64_t gate_macs(std::size_t frames, std::size_t channels, std::size_t plane,
                        bool gate_active, temporal::FusionMode fusion) {
  std::uint64_t macs = 0;
  if (gate_active) macs += 3 * (2 * std::uint64_t{frames} * frames * channels);
  if (fusion == temporal::FusionMode::kMultiplicative) {
    macs += std::uint64_t{channels} * frames * plane;
  }
  return macs;
}

Extent3 block_output_extent(const BlockSpec& block, Extent3 in) {
  OpCount scratch;
  return count_block_macs(block, in, "block", scratch);
}

Extent3 count_block_macs(const BlockSpec& block, Extent3 in, const std::string& prefix,
                         OpCount& count) {
  block.validate();
  const std::size_t cin = block.in_channels;
  const std::size_t cout = block.out_channels;
  Extent3 out;
  Extent3 srtg_at = in;
  if (block.depth == DepthKind::kSimple) {
    out = count_conv_unit(block.conv, cin, cout, kCube, block.stride, in, prefix + ".conv1", count);
    count_conv_unit(block.conv, cout, cout, kCube, kPointwise, out, prefix + ".conv2", count);
  } else {
    const std::size_t inner = block.inner_channels();
    count_conv_unit(block.conv, cin, inner, kPointwise, kPointwise, in, prefix + ".conv1", count);
    out = count_conv_unit(block.conv, inner, inner, kCube, block.stride, in, prefix + ".conv2",
                          count);
    count_conv_unit(block.conv, inner, cout, kPointwise, kPointwise, out, prefix + ".conv3",
                    count);
  }
  if (block.has_projection()) {
    const Extent3 o = window_extent(in, kPointwise, block.stride, {0, 0, 0});
    count.add(prefix + ".downsample", OpCategory::kConvolution, conv_macs(cin, cout, kPointwise, o));
  }
  if (block.placement == Placement::kNone) return out;
  if (block.placement != Placement::kStart && block.placement != Placement::kTop) srtg_at = out;
  const std::size_t c = block.srtg_channels();
  count.add(prefix + ".srtg.lstm", OpCategory::kLstm, lstm_macs(srtg_at.t, c, block.lstm_layers));
  count.add(prefix + ".srtg.gate", OpCategory::kGate,
            gate_macs(srtg_at.t, c, srtg_at.h * srtg_at.w, block.gate_active, block.fusion));
  return out;
}

OpCount count_macs(const NetworkSpec& spec, const ClipShape& input) {
  spec.validate();
  if (input.channels != spec.in_channels) {
    throw tensor::ShapeError("input channels " + std::to_string(input.channels) +
                             " but the stem expects " + std::to_string(spec.in_channels));
  }
  OpCount count;
  Extent3 e{input.frames, input.height, input.width};
  e = count_conv_unit(spec.conv, spec.in_channels, spec.stem.channels, spec.stem.kernel,
                      spec.stem.stride, e, "stem.conv", count);
  if (spec.stem.pool) e = window_extent(e, spec.stem.pool->kernel, spec.stem.pool->stride,
                                        spec.stem.pool->padding);
  const auto blocks = spec.block_specs();
  std::size_t b = 0;
  for (std::size_t s = 0; s < spec.stages.size(); ++s) {
    for (std::size_t j = 0; j < spec.stages[s].blocks; ++j, ++b) {
      e = count_block_macs(blocks[b], e,
                           "stage" + std::to_string(s + 1) + ".block" + std::to_string(j), count);
    }
  }
  count.add("head", OpCategory::kHead, std::uint64_t{spec.feature_channels()} * spec.num_classes);
  return count;
}

OpUnits op_units_from_string(std::string_view s) {
  if (s == "macs") return OpUnits::kMacs;
  if (s == "gflops") return OpUnits::kGflops;
  throw SpecError("unknown units '" + std::string(s) + "' (expected macs or gflops)");
}

std::string op_count_report(const OpCount& count, const ClipShape& input, OpUnits units) {
  using nlohmann::ordered_json;
  const auto gflops = [](std::uint64_t macs) { return 2.0 * static_cast<double>(macs) / 1e9; };
  ordered_json j;
  j["units"] = units == OpUnits::kMacs ? "macs" : "gflops";
  j["convention"] =
      "multiplies only; batch norm, pooling, activations and argmin comparisons are not counted; "
      "gate counts distance matrices, soft-match sums, re-match distances and fusion multiplies; "
      "gflops = 2 * macs / 1e9";
  j["input"] = to_string(input);
  ordered_json layers = ordered_json::array();
  for (const auto& l : count.layers) {
    ordered_json row;
    row["name"] = l.name;
    row["category"] = to_string(l.category);
    if (units == OpUnits::kMacs) {
      row["macs"] = l.macs;
    } else {
      row["gflops"] = gflops(l.macs);
    }
    layers.push_back(std::move(row));
  }
  j["layers"] = std::move(layers);
  ordered_json totals;
  totals["convolutions"] = count.convolutions;
  totals["lstm"] = count.lstm;
  totals["gate"] = count.gate;
  totals["head"] = count.head;
  totals["macs"] = count.total();
  totals["gmacs"] = static_cast<double>(count.total()) / 1e9;
  totals["gflops"] = gflops(count.total());
  j["totals"] = std::move(totals);
  j["srtg_overhead_ratio"] = count.srtg_overhead_ratio();
  return j.dump(2);
}

}  // namespace srtg::backbone

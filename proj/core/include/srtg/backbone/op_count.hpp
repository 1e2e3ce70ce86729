#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "srtg/backbone/spec.hpp"

namespace srtg::backbone {

enum class OpCategory { kConvolution, kLstm, kGate, kHead };
std::string_view to_string(OpCategory c);

struct LayerOps {
  std::string name;
  OpCategory category = OpCategory::kConvolution;
  std::uint64_t macs = 0;
};

/// Multiply-accumulate tally for one clip. Only multiplies are counted:
/// batch norm, pooling, activations, comparisons and argmins are free.
struct OpCount {
  std::vector<LayerOps> layers;
  std::uint64_t convolutions = 0;
  std::uint64_t lstm = 0;
  std::uint64_t gate = 0;
  std::uint64_t head = 0;

  void add(std::string name, OpCategory category, std::uint64_t macs);
  std::uint64_t total() const { return convolutions + lstm + gate + head; }
  std::uint64_t srtg() const { return lstm + gate; }
  /// (lstm + gate) / total.
  double srtg_overhead_ratio() const;
};

/// Conv MACs: out_elements * in_channels * kT*kH*kW.
std::uint64_t conv_macs(std::size_t in_channels, std::size_t out_channels, Extent3 kernel,
                        Extent3 out_extent);
/// frames * layers * 4 * C * (C + C).
std::uint64_t lstm_macs(std::size_t frames, std::size_t channels, std::size_t layers);
/// Distances (2T^2C), soft-match sums (2T^2C) and re-match distances (2T^2C)
/// when the gate is active, plus C*T*H*W fusion multiplies in multiplicative
/// mode.
std::uint64_t gate_macs(std::size_t frames, std::size_t channels, std::size_t plane,
                        bool gate_active, temporal::FusionMode fusion);

/// Output extent of one block for a given input extent.
Extent3 block_output_extent(const BlockSpec& block, Extent3 in);

/// Appends the layers of one block, named "<prefix>.conv1" and so on.
/// Returns the output extent.
Extent3 count_block_macs(const BlockSpec& block, Extent3 in, const std::string& prefix,
                         OpCount& count);

OpCount count_macs(const NetworkSpec& spec, const ClipShape& input);

enum class OpUnits { kMacs, kGflops };
OpUnits op_units_from_string(std::string_view s);

/// JSON report: {units, convention, input, layers, totals, srtg_overhead_ratio}.
/// GFLOPs = 2 * MACs / 1e9; both are always present in totals, `units`
/// selects the per-layer value.
std::string op_count_report(const OpCount& count, const ClipShape& input, OpUnits units);

}  // namespace srtg::backbone

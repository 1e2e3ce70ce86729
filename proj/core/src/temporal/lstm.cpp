#include "srtg/temporal/lstm.hpp"

#include <cmath>
#include <stdexcept>

#include "srtg/tensor/ops.hpp"

namespace srtg::temporal {

namespace t = srtg::tensor;

LstmLayerParams::LstmLayerParams(std::size_t input, std::size_t hidden)
    : input_size(input),
      hidden_size(hidden),
      forget_w({hidden, hidden + input}),
      input_w({hidden, hidden + input}),
      candidate_w({hidden, hidden + input}),
      output_w({hidden, hidden + input}),
      forget_b({hidden}),
      input_b({hidden}),
      candidate_b({hidden}),
      output_b({hidden}) {
  for (Tensor* p : {&forget_w, &input_w, &candidate_w, &output_w, &forget_b, &input_b,
                    &candidate_b, &output_b}) {
    p->set_requires_grad(true);
  }
}

LstmParams::LstmParams(std::size_t channels, std::size_t num_layers) : channels_(channels) {
  if (channels == 0) throw t::ShapeError("LSTM hidden size must be positive");
  if (num_layers == 0) throw std::invalid_argument("LSTM needs at least one layer");
  layers_.reserve(num_layers);
  for (std::size_t i = 0; i < num_layers; ++i) layers_.emplace_back(channels, channels);
}

void LstmParams::initialize(std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(channels_));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& layer : layers_) {
    for (Tensor* w : {&layer.forget_w, &layer.input_w, &layer.candidate_w, &layer.output_w}) {
      for (double& v : w->data()) v = dist(rng);
    }
    for (Tensor* b : {&layer.input_b, &layer.candidate_b, &layer.output_b}) {
      for (double& v : b->data()) v = 0.0;
    }
    for (double& v : layer.forget_b.data()) v = 1.0;
  }
}

std::vector<std::pair<std::string, Tensor*>> LstmParams::named_parameters(
    const std::string& prefix) {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto& l = layers_[i];
    const std::string p = prefix + "lstm" + std::to_string(i) + ".";
    out.emplace_back(p + "w_f", &l.forget_w);
    out.emplace_back(p + "w_i", &l.input_w);
    out.emplace_back(p + "w_c", &l.candidate_w);
    out.emplace_back(p + "w_a", &l.output_w);
    out.emplace_back(p + "b_f", &l.forget_b);
    out.emplace_back(p + "b_i", &l.input_b);
    out.emplace_back(p + "b_c", &l.candidate_b);
    out.emplace_back(p + "b_a", &l.output_b);
  }
  return out;
}

BoundLstmLayer bind(Graph& graph, LstmLayerParams& p) {
  return {graph.param(p.forget_w),    graph.param(p.input_w), graph.param(p.candidate_w),
          graph.param(p.output_w),    graph.param(p.forget_b), graph.param(p.input_b),
          graph.param(p.candidate_b), graph.param(p.output_b)};
}

LstmStep lstm_cell_step(Var x_t, Var h_prev, Var c_prev, const BoundLstmLayer& layer) {
  const std::size_t hidden = layer.forget_w.dim(0);
  const std::size_t concat = layer.forget_w.dim(1);
  if (x_t.shape().size() != 2 || h_prev.shape().size() != 2) {
    throw t::ShapeError("lstm_cell_step: inputs must be (N, features)");
  }
  if (h_prev.dim(1) != hidden || c_prev.dim(1) != hidden) {
    throw t::ShapeError("lstm_cell_step: state dimension (dim 1) must be " +
                        std::to_string(hidden));
  }
  if (x_t.dim(1) + hidden != concat) {
    throw t::ShapeError("lstm_cell_step: input dimension (dim 1) = " + std::to_string(x_t.dim(1)) +
                        " but weights expect " + std::to_string(concat - hidden));
  }
  Var joined = t::concat_columns(h_prev, x_t);
  auto affine = [&](Var w, Var b) { return t::add_bias(t::matmul_transposed(joined, w), b); };
  Var forget = t::sigmoid(affine(layer.forget_w, layer.forget_b));
  Var input = t::sigmoid(affine(layer.input_w, layer.input_b));
  Var candidate = t::tanh(affine(layer.candidate_w, layer.candidate_b));
  Var cell = t::add(t::mul(forget, c_prev), t::mul(input, candidate));
  Var out_gate = t::sigmoid(affine(layer.output_w, layer.output_b));
  Var hidden_state = t::mul(out_gate, t::tanh(cell));
  return {hidden_state, cell};
}

Var recursion(Var embedding, LstmParams& params) {
  const t::Shape& s = embedding.shape();
  if (s.size() != 3) throw t::ShapeError("recursion: expected (N,T,C), got " + t::shape_string(s));
  const std::size_t batch = s[0];
  const std::size_t frames = s[1];
  if (s[2] != params.layer(0).input_size) {
    throw t::ShapeError("recursion: embedding channels (dim 2) = " + std::to_string(s[2]) +
                        " but the LSTM expects " + std::to_string(params.layer(0).input_size));
  }
  Graph& g = embedding.graph();
  Var sequence = embedding;
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    LstmLayerParams& lp = params.layer(l);
    const BoundLstmLayer bound = bind(g, lp);
    Var h = g.constant(t::Tensor({batch, lp.hidden_size}));
    Var c = g.constant(t::Tensor({batch, lp.hidden_size}));
    std::vector<Var> outputs;
    outputs.reserve(frames);
    for (std::size_t step = 0; step < frames; ++step) {
      LstmStep next = lstm_cell_step(t::time_step(sequence, step), h, c, bound);
      h = next.hidden;
      c = next.cell;
      outputs.push_back(h);
    }
    sequence = t::stack_steps(outputs);
  }
  return sequence;
}

}  // namespace srtg::temporal

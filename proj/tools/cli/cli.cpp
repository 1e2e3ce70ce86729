#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "srtg/backbone/network.hpp"
#include "srtg/backbone/op_count.hpp"
#include "srtg/harness/checkpoint.hpp"
#include "srtg/harness/config.hpp"
#include "srtg/harness/grad_suite.hpp"
#include "srtg/harness/metrics.hpp"
#include "srtg/harness/synthetic.hpp"
#include "srtg/harness/trainer.hpp"
#include "srtg/temporal/gate_log.hpp"

namespace srtg::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

/// Failure of the environment rather than of the request (exit code 2).
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string input;
  std::string units = "gflops";
  std::string data;
  std::string checkpoint;
  std::string resume;
  std::optional<std::size_t> stop_after;
  double eps = 1e-5;
  double tolerance = 1e-4;
};

harness::Config load_config(const Options& o) {
  harness::Config c = o.config.empty() ? harness::Config() : harness::Config::from_file(o.config);
  for (const auto& s : o.sets) c.set(std::string_view(s));
  if (o.seed) {
    c.set("data.seed", std::to_string(*o.seed));
    c.set("train.seed", std::to_string(*o.seed));
  }
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw RuntimeFailure("cannot write " + path.string());
  os << text;
  if (!os) throw RuntimeFailure("write failed for " + path.string());
}

/// Creates the output directory and persists the effective configuration
/// before any other artifact.
fs::path prepare_out(const std::string& dir, const harness::Config& config) {
  const fs::path path = dir.empty() ? fs::path("out") : fs::path(dir);
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec || !fs::is_directory(path)) {
    throw RuntimeFailure("cannot create output directory " + path.string() +
                         (ec ? ": " + ec.message() : ""));
  }
  write_text(path / "effective.cfg", config.to_ini());
  return path;
}

harness::SyntheticData load_or_generate(const Options& o, const harness::Config& config) {
  if (o.data.empty()) return harness::generate(config.data());
  const fs::path dir(o.data);
  return {harness::load_dataset(dir / "train.bin"), harness::load_dataset(dir / "val.bin")};
}

harness::Dataset eval_split(const Options& o, const harness::Config& config) {
  if (o.data.empty()) return harness::generate_split(config.data(), harness::Split::kVal);
  return harness::load_dataset(o.data);
}

ordered_json metrics_json(const harness::Metrics& m) {
  ordered_json j;
  j["count"] = m.count;
  j["loss"] = m.loss;
  j["top1"] = m.top1;
  j["top5"] = m.top5;
  j["gate_open_rate"] = ordered_json::object();
  for (const auto& [layer, rate] : m.gate_open_rate) j["gate_open_rate"][layer] = rate;
  return j;
}

int cmd_gen_data(const Options& o, std::ostream& out) {
  const auto config = load_config(o);
  config.validate();
  const fs::path dir = prepare_out(o.out, config);
  const auto data = harness::generate(config.data());
  harness::save_dataset(data.train, dir / "train.bin");
  harness::save_dataset(data.val, dir / "val.bin");
  out << "wrote " << data.train.size() << " train and " << data.val.size() << " val clips ("
      << backbone::to_string(data.train.shape) << ") to " << dir.string() << "\n";
  return kOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  std::optional<harness::Checkpoint> resumed;
  harness::Config config;
  if (!o.resume.empty()) {
    resumed = harness::load_checkpoint(o.resume);
    config = harness::Config::from_string(resumed->config);
    for (const auto& s : o.sets) config.set(std::string_view(s));
    if (o.seed) {
      config.set("data.seed", std::to_string(*o.seed));
      config.set("train.seed", std::to_string(*o.seed));
    }
  } else {
    config = load_config(o);
  }
  config.validate();
  const fs::path dir = prepare_out(o.out, config);
  const auto cfg = config.train();
  write_text(dir / "seed.txt", std::to_string(cfg.seed) + "\n");
  const auto data = load_or_generate(o, config);

  backbone::Network net(config.network());
  net.initialize(cfg.seed);
  harness::Trainer trainer(net, cfg);
  if (resumed) {
    harness::restore(*resumed, net, &trainer.optimizer());
    trainer.history() = resumed->history;
    out << "resumed after epoch " << resumed->epoch << "\n";
  }
  const std::size_t last = o.stop_after ? *o.stop_after : cfg.epochs;
  const std::string text = config.to_ini();
  trainer.fit(data.train, data.val, last, [&](const harness::EpochRecord& r) {
    write_text(dir / "metrics.csv", trainer.history().to_csv());
    harness::save_checkpoint(harness::capture(net, &trainer.optimizer(), trainer.history(), text),
                             dir / "checkpoint.bin");
    out << "epoch " << r.epoch << " loss " << r.train_loss << " train_top1 " << r.train_top1
        << " val_top1 " << r.val_top1 << " lr " << r.lr << "\n";
  });
  write_text(dir / "metrics.csv", trainer.history().to_csv());
  return kOk;
}

struct LoadedModel {
  harness::Config config;
  std::unique_ptr<backbone::Network> net;
};

LoadedModel load_model(const Options& o) {
  if (o.checkpoint.empty()) throw harness::ConfigError("--checkpoint is required");
  const auto ck = harness::load_checkpoint(o.checkpoint);
  LoadedModel m;
  m.config = harness::Config::from_string(ck.config);
  m.net = std::make_unique<backbone::Network>(m.config.network());
  harness::restore(ck, *m.net, nullptr);
  return m;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  auto model = load_model(o);
  const fs::path dir = prepare_out(o.out, model.config);
  const auto val = eval_split(o, model.config);
  const auto cfg = model.config.train();
  const auto m = harness::evaluate(*model.net, val, {cfg.batch_size, cfg.frames});
  const std::string text = metrics_json(m).dump(2) + "\n";
  write_text(dir / "metrics.json", text);
  out << text;
  return kOk;
}

int cmd_gate_analyze(const Options& o, std::ostream& out) {
  auto model = load_model(o);
  const fs::path dir = prepare_out(o.out, model.config);
  const auto val = eval_split(o, model.config);
  const auto cfg = model.config.train();
  std::vector<temporal::GateRecord> log;
  harness::evaluate(*model.net, val, {cfg.batch_size, cfg.frames}, &log);
  {
    std::ofstream os(dir / "gate_log.jsonl", std::ios::trunc);
    if (!os) throw RuntimeFailure("cannot write gate log");
    temporal::write_json_lines(os, log);
  }
  ordered_json rates = ordered_json::object();
  for (const auto& [layer, rate] : temporal::open_rates(log)) rates[layer] = rate;
  const std::string text = rates.dump(2) + "\n";
  write_text(dir / "open_rates.json", text);
  out << text;
  return kOk;
}

int cmd_count_ops(const Options& o, std::ostream& out) {
  const auto config = load_config(o);
  const auto spec = config.network();
  const auto input = backbone::parse_clip_shape(o.input.empty() ? config.get("data.clip") : o.input);
  const auto units = backbone::op_units_from_string(o.units);
  const std::string report = backbone::op_count_report(backbone::count_macs(spec, input), input,
                                                       units) + "\n";
  if (!o.out.empty()) write_text(prepare_out(o.out, config) / "op_count.json", report);
  out << report;
  return kOk;
}

int cmd_grad_check(const Options& o, std::ostream& out) {
  if (!(o.tolerance > 0.0)) throw harness::ConfigError("--tolerance must be positive");
  const auto results = harness::run_grad_suite(o.seed.value_or(0), o.eps);
  ordered_json j;
  j["eps"] = o.eps;
  j["tolerance"] = o.tolerance;
  bool pass = true;
  j["cases"] = ordered_json::array();
  for (const auto& r : results) {
    pass &= r.report.max_error <= o.tolerance;
    j["cases"].push_back({{"name", r.name},
                          {"max_error", r.report.max_error},
                          {"checked", r.report.checked},
                          {"pass", r.report.max_error <= o.tolerance}});
  }
  j["pass"] = pass;
  const std::string text = j.dump(2) + "\n";
  if (!o.out.empty()) {
    const fs::path dir(o.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw RuntimeFailure("cannot create output directory " + dir.string());
    write_text(dir / "grad_check.json", text);
  }
  out << text;
  return pass ? kOk : kRuntimeError;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Squeeze-and-Recursion Temporal Gates: training, evaluation and op counting"};
  app.require_subcommand(1);
  Options o;

  const auto add_config = [&](CLI::App* c) {
    c->add_option("--config,--net", o.config, "Sectioned key = value config file");
    c->add_option("--set", o.sets, "Override, section.key=value (repeatable)");
    c->add_option("--seed", o.seed, "Seed for data generation and training");
  };
  const auto add_out = [&](CLI::App* c) {
    c->add_option("--out", o.out, "Output directory (default: out)");
  };

  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic train/val splits");
  add_config(gen);
  add_out(gen);

  auto* train = app.add_subcommand("train", "Train a network and log per-epoch metrics");
  add_config(train);
  add_out(train);
  train->add_option("--data", o.data, "Directory holding train.bin and val.bin");
  train->add_option("--resume", o.resume, "Continue from a checkpoint");
  train->add_option("--stop-after", o.stop_after, "Stop after this epoch (1-based)");

  auto* eval = app.add_subcommand("evaluate", "Top-1/top-5 and gate-open rates of a checkpoint");
  eval->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
  eval->add_option("--data", o.data, "Dataset file (default: regenerate the val split)");
  add_out(eval);

  auto* ops = app.add_subcommand("count-ops", "Analytic multiply-accumulate count");
  add_config(ops);
  ops->add_option("--input", o.input, "Clip shape CxTxHxW (default: data.clip)");
  ops->add_option("--units", o.units, "Per-layer units")->check(CLI::IsMember({"macs", "gflops"}));
  ops->add_option("--out", o.out, "Also write op_count.json here");

  auto* gate = app.add_subcommand("gate-analyze", "Per-clip gate verdicts as JSON lines");
  gate->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
  gate->add_option("--data", o.data, "Dataset file (default: regenerate the val split)");
  add_out(gate);

  auto* grad = app.add_subcommand("grad-check", "Finite-difference checks of the SRTG path");
  grad->add_option("--seed", o.seed, "Seed for parameters and inputs");
  grad->add_option("--eps", o.eps, "Central-difference step")->check(CLI::Range(1e-7, 1e-3));
  grad->add_option("--tolerance", o.tolerance, "Maximum relative error");
  grad->add_option("--out", o.out, "Also write grad_check.json here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidationError;
  }

  try {
    if (*gen) return cmd_gen_data(o, out);
    if (*train) return cmd_train(o, out);
    if (*eval) return cmd_evaluate(o, out);
    if (*ops) return cmd_count_ops(o, out);
    if (*gate) return cmd_gate_analyze(o, out);
    if (*grad) return cmd_grad_check(o, out);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kValidationError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kValidationError;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("srtg");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace srtg::cli

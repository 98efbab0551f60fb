// Command-line front end: train, eval, encode, energy and gradcheck
// subcommands driven by a JSON experiment config.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "srnn/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

struct GlobalOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<int> threads;
};

srnn::ExperimentConfig load_config(const GlobalOpts& g) {
  if (g.config_path.empty())
    throw std::runtime_error("missing --config");
  srnn::ExperimentConfig cfg = srnn::load_experiment(g.config_path);
  if (g.seed) {
    cfg.seed = *g.seed;
    cfg.training.seed = *g.seed;
  }
  if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
  if (g.threads) cfg.training.threads = *g.threads;
  return cfg;
}

double measure_input_fr(const srnn::Dataset& ds, std::size_t max_samples = 32) {
  double spikes = 0.0, slots = 0.0;
  std::vector<double> buf;
  const std::size_t n = std::min(ds.size(), max_samples);
  for (std::size_t i = 0; i < n; ++i) {
    ds.materialize(i, buf);
    for (double v : buf) spikes += v;
    slots += static_cast<double>(buf.size());
  }
  return slots > 0 ? spikes / slots : 0.0;
}

int cmd_train(const GlobalOpts& g) {
  srnn::ExperimentConfig cfg = load_config(g);
  srnn::TaskData data = srnn::make_datasets(cfg);
  srnn::NetworkConfig nc = srnn::make_network_config(cfg, data.train);
  srnn::Network net = srnn::build(nc);

  const std::string run_dir =
      g.out_dir.empty() ? srnn::make_run_dir(cfg.out_dir, to_string(cfg.task))
                        : (fs::create_directories(g.out_dir), g.out_dir);
  std::cout << "run dir: " << run_dir << "\n";
  std::ofstream metrics(fs::path(run_dir) / "metrics.jsonl");

  cfg.training.verbose = true;
  srnn::TrainResult res =
      srnn::train(net, data.train, cfg.training,
                  data.test ? &*data.test : nullptr,
                  [&](const srnn::EpochMetrics& m) {
                    const std::string line = srnn::metrics_json(m);
                    std::cout << line << "\n";
                    metrics << line << "\n";
                    metrics.flush();
                  });

  res.restore_best(net);
  net.save((fs::path(run_dir) / "best.ckpt").string());

  const srnn::Dataset& eval_set = data.test ? *data.test : data.train;
  srnn::EvalResult ev = srnn::evaluate(net, eval_set, cfg.seed);
  srnn::NetworkEnergySpec espec = srnn::energy_spec_from_network(
      net, ev.layer_fr, measure_input_fr(eval_set), ev.accuracy);
  srnn::EnergyReport er = srnn::network_energy(espec);

  json summary;
  summary["task"] = to_string(cfg.task);
  summary["accuracy"] = ev.accuracy;
  summary["best_val_accuracy"] = res.best_val_accuracy;
  summary["best_epoch"] = res.best_epoch;
  json fr = json::array();
  for (double f : ev.layer_fr) {
    if (std::isfinite(f))
      fr.push_back(f);
    else
      fr.push_back(nullptr);
  }
  summary["fr"] = fr;
  summary["energy_pj_per_step"] = er.total_pj_per_step;
  summary["checkpoint"] = (fs::path(run_dir) / "best.ckpt").string();
  std::ofstream(fs::path(run_dir) / "summary.json") << summary.dump(2) << "\n";
  std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

int cmd_eval(const GlobalOpts& g, const std::string& checkpoint) {
  srnn::ExperimentConfig cfg = load_config(g);
  srnn::TaskData data = srnn::make_datasets(cfg);
  srnn::NetworkConfig nc = srnn::make_network_config(cfg, data.train);
  srnn::Network net = srnn::build(nc);
  net.load_weights(checkpoint);

  const srnn::Dataset& eval_set = data.test ? *data.test : data.train;
  srnn::EvalResult ev = srnn::evaluate(net, eval_set, cfg.seed);
  json out;
  out["accuracy"] = ev.accuracy;
  json fr = json::array();
  for (double f : ev.layer_fr) {
    if (std::isfinite(f))
      fr.push_back(f);
    else
      fr.push_back(nullptr);
  }
  out["fr"] = fr;
  json confusion = json::array();
  for (std::size_t r = 0; r < ev.classes; ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < ev.classes; ++c)
      row.push_back(ev.confusion[r * ev.classes + c]);
    confusion.push_back(row);
  }
  out["confusion"] = confusion;
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

int cmd_gradcheck(const GlobalOpts& g) {
  srnn::ExperimentConfig cfg = load_config(g);
  srnn::TaskData data = srnn::make_datasets(cfg);
  srnn::NetworkConfig nc = srnn::make_network_config(cfg, data.train);
  srnn::Network net = srnn::build(nc);

  // A short window of the first sample is plenty for the check.
  std::vector<std::size_t> idx = {0};
  srnn::BatchInput full = srnn::make_batch(data.train, idx);
  srnn::BatchInput input;
  input.T = std::min<std::size_t>(full.T, 20);
  input.B = 1;
  input.C = full.C;
  input.data.assign(full.data.begin(),
                    full.data.begin() + input.T * input.C);
  if (data.train.task_kind == srnn::TaskKind::sequence) {
    input.seq_targets = full.seq_targets;
  } else {
    input.step_targets.assign(full.step_targets.begin(),
                              full.step_targets.begin() + input.T);
  }

  bool all_relu = true;
  for (auto k : nc.neuron_kinds)
    if (k != srnn::NeuronKind::relu) all_relu = false;
  const double threshold = all_relu ? 1e-5 : 1e-4;

  srnn::GradCheckResult res = srnn::run_gradcheck(
      net, input, data.train.task_kind, threshold, cfg.seed);
  for (const auto& c : res.classes)
    std::cout << c.name << " max rel err " << c.max_rel_err << "\n";
  if (!res.pass) {
    const auto worst = std::max_element(
        res.classes.begin(), res.classes.end(),
        [](const auto& a, const auto& b) {
          return a.max_rel_err < b.max_rel_err;
        });
    std::cout << "FAIL: " << worst->name << " rel err " << worst->max_rel_err
              << " >= " << res.threshold << "\n";
    return kExitCheckFailed;
  }
  std::cout << "PASS: all classes < " << res.threshold << "\n";
  return kExitOk;
}

int cmd_encode(const std::string& input_path, const std::string& encoder,
               const std::string& out_path, double threshold,
               std::size_t population, std::uint64_t seed, double bin_ms,
               std::size_t channels, double t_max_ms) {
  srnn::SpikeTrain train;
  double raw_values = 0.0;
  if (encoder == "level_crossing") {
    srnn::Dataset ds = srnn::load_labeled_signal_csv(input_path);
    srnn::LabeledSignal sig;
    const auto& s = ds.samples.front();
    sig.T = s.T;
    sig.C = s.raw_channels;
    sig.sample_rate = 1000.0 / ds.dt;
    sig.values = s.values;
    train = srnn::level_crossing_encode(sig, threshold);
    raw_values = static_cast<double>(sig.T * sig.C);
  } else if (encoder == "bin") {
    const auto events = srnn::load_event_csv(input_path);
    train = srnn::to_spike_train(
        srnn::bin_events(events, channels, bin_ms, t_max_ms,
                         srnn::BinMode::binary));
    raw_values = static_cast<double>(events.size());
  } else if (encoder == "population") {
    std::ifstream is(input_path);
    if (!is) throw std::runtime_error("cannot read " + input_path);
    std::vector<double> values;
    double v;
    while (is >> v) values.push_back(v);
    train = srnn::poisson_population_encode(values, population, seed);
    raw_values = static_cast<double>(values.size());
  } else {
    throw std::runtime_error("unknown encoder: " + encoder);
  }
  srnn::save_spike_train(out_path, train);

  const auto events = train.count();
  json stats;
  stats["timesteps"] = train.T;
  stats["channels"] = train.C;
  stats["events"] = events;
  stats["fr"] = static_cast<double>(events) /
                static_cast<double>(train.T * train.C);
  if (raw_values > 0)
    stats["compression"] =
        1.0 - static_cast<double>(events) / raw_values;
  std::cout << stats.dump(2) << "\n";
  return kExitOk;
}

int cmd_energy(const GlobalOpts& g, const std::string& arch_path,
               const std::string& baseline_path, const std::string& scatter,
               const std::string& csv_path, const std::string& checkpoint) {
  srnn::NetworkEnergySpec spec;
  if (!arch_path.empty()) {
    spec = srnn::load_energy_spec(arch_path);
  } else if (!checkpoint.empty()) {
    srnn::ExperimentConfig cfg = load_config(g);
    srnn::TaskData data = srnn::make_datasets(cfg);
    srnn::NetworkConfig nc = srnn::make_network_config(cfg, data.train);
    srnn::Network net = srnn::build(nc);
    net.load_weights(checkpoint);
    const srnn::Dataset& eval_set = data.test ? *data.test : data.train;
    srnn::EvalResult ev = srnn::evaluate(net, eval_set, cfg.seed);
    spec = srnn::energy_spec_from_network(net, ev.layer_fr,
                                          measure_input_fr(eval_set),
                                          ev.accuracy);
    spec.name = to_string(cfg.task);
  } else {
    throw std::runtime_error("energy: need --arch or --checkpoint");
  }

  srnn::EnergyReport report;
  if (!baseline_path.empty()) {
    srnn::NetworkEnergySpec base = srnn::load_energy_spec(baseline_path);
    report = srnn::network_energy(spec, base);
  } else {
    report = srnn::network_energy(spec);
  }
  std::cout << srnn::format_report(report, spec.name);
  if (!csv_path.empty()) std::ofstream(csv_path) << srnn::report_csv(report);
  if (!scatter.empty()) {
    if (!report.energy_ratio || !report.error_ratio)
      throw std::runtime_error(
          "energy: --scatter needs --baseline and accuracies in both specs");
    std::ofstream os(scatter);
    os << "name,energy_ratio,error_ratio\n";
    os << spec.name << ',' << *report.energy_ratio << ','
       << *report.error_ratio << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spiking recurrent network trainer"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "experiment config (JSON)");
  std::uint64_t seed_value = 0;
  auto* seed_opt =
      app.add_option("--seed", seed_value, "override the config seed");
  app.add_option("--out-dir", g.out_dir, "output directory for artifacts");
  int threads_value = 0;
  auto* threads_opt =
      app.add_option("--threads", threads_value, "worker threads");

  auto* train_cmd = app.add_subcommand("train", "train a network");
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string checkpoint;
  eval_cmd->add_option("--checkpoint", checkpoint, "network checkpoint")
      ->required();

  auto* encode_cmd = app.add_subcommand("encode", "encode a signal file");
  std::string enc_input, enc_kind = "level_crossing", enc_out = "spikes.spkt";
  double enc_threshold = 0.3, enc_bin_ms = 4.0, enc_tmax = 1000.0;
  std::size_t enc_population = 40, enc_channels = 700;
  encode_cmd->add_option("--input", enc_input, "input file")->required();
  encode_cmd->add_option("--encoder", enc_kind,
                         "level_crossing | population | bin");
  encode_cmd->add_option("--out", enc_out, "output spike-train archive");
  encode_cmd->add_option("--threshold", enc_threshold, "level-crossing delta");
  encode_cmd->add_option("--population", enc_population, "population size");
  encode_cmd->add_option("--bin-ms", enc_bin_ms, "bin width (ms)");
  encode_cmd->add_option("--channels", enc_channels, "event channels");
  encode_cmd->add_option("--t-max-ms", enc_tmax, "window length (ms)");

  auto* energy_cmd = app.add_subcommand("energy", "estimate energy per step");
  std::string arch_path, baseline_path, scatter_path, energy_csv,
      energy_checkpoint;
  energy_cmd->add_option("--arch", arch_path, "architecture+Fr JSON");
  energy_cmd->add_option("--baseline", baseline_path, "baseline JSON");
  energy_cmd->add_option("--scatter", scatter_path,
                         "write (energy ratio, error ratio) CSV");
  energy_cmd->add_option("--csv", energy_csv, "write machine-readable table");
  energy_cmd->add_option("--checkpoint", energy_checkpoint,
                         "measure Fr from a checkpoint + dataset");

  auto* gradcheck_cmd =
      app.add_subcommand("gradcheck", "finite-difference gradient check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (seed_opt->count()) g.seed = seed_value;
  if (threads_opt->count()) g.threads = threads_value;

  try {
    if (train_cmd->parsed()) return cmd_train(g);
    if (eval_cmd->parsed()) return cmd_eval(g, checkpoint);
    if (gradcheck_cmd->parsed()) return cmd_gradcheck(g);
    if (encode_cmd->parsed())
      return cmd_encode(enc_input, enc_kind, enc_out, enc_threshold,
                        enc_population, g.seed.value_or(1), enc_bin_ms,
                        enc_channels, enc_tmax);
    if (energy_cmd->parsed())
      return cmd_energy(g, arch_path, baseline_path, scatter_path, energy_csv,
                        energy_checkpoint);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

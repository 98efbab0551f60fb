#include "srnn/experiment.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace srnn {

using nlohmann::json;

TaskName task_from_string(const std::string& s) {
  if (s == "ecg_synth") return TaskName::ecg_synth;
  if (s == "ecg_csv") return TaskName::ecg_csv;
  if (s == "smnist") return TaskName::smnist;
  if (s == "psmnist") return TaskName::psmnist;
  if (s == "shd_events") return TaskName::shd_events;
  throw std::invalid_argument("unknown task: " + s);
}

std::string to_string(TaskName t) {
  switch (t) {
    case TaskName::ecg_synth: return "ecg_synth";
    case TaskName::ecg_csv: return "ecg_csv";
    case TaskName::smnist: return "smnist";
    case TaskName::psmnist: return "psmnist";
    case TaskName::shd_events: return "shd_events";
  }
  return "?";
}

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& why) {
  throw std::runtime_error("config field `" + field + "`: " + why);
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    field_error(key, e.what());
  }
}

std::string require_path(const json& j, const std::string& key,
                         const std::string& field) {
  if (!j.contains(key)) field_error(field, "required for this task");
  const auto path = j.at(key).get<std::string>();
  if (!std::filesystem::exists(path))
    field_error(field, "path does not exist: " + path);
  return path;
}

}  // namespace

ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read config " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }

  ExperimentConfig cfg;
  if (!j.contains("task")) field_error("task", "missing");
  cfg.task = task_from_string(j.at("task").get<std::string>());
  cfg.seed = get_or<std::uint64_t>(j, "seed", 1);
  cfg.out_dir = get_or<std::string>(j, "out_dir", "runs");

  if (j.contains("network")) {
    const json& n = j.at("network");
    cfg.hidden = get_or<std::vector<std::size_t>>(n, "hidden", cfg.hidden);
    if (cfg.hidden.empty()) field_error("network.hidden", "needs >= 1 layer");
    if (n.contains("neuron")) {
      cfg.neuron_kinds.clear();
      if (n.at("neuron").is_array()) {
        for (const auto& s : n.at("neuron"))
          cfg.neuron_kinds.push_back(
              neuron_kind_from_string(s.get<std::string>()));
      } else {
        cfg.neuron_kinds.assign(
            cfg.hidden.size(),
            neuron_kind_from_string(n.at("neuron").get<std::string>()));
      }
    } else {
      cfg.neuron_kinds.assign(cfg.hidden.size(), NeuronKind::adaptive);
    }
    if (n.contains("recurrent")) {
      cfg.recurrent.clear();
      if (n.at("recurrent").is_array()) {
        for (const auto& b : n.at("recurrent"))
          cfg.recurrent.push_back(b.get<bool>());
      } else {
        cfg.recurrent.assign(cfg.hidden.size(), n.at("recurrent").get<bool>());
      }
    } else {
      cfg.recurrent.assign(cfg.hidden.size(), true);
    }
    if (cfg.neuron_kinds.size() != cfg.hidden.size())
      field_error("network.neuron", "length must match hidden layers");
    if (cfg.recurrent.size() != cfg.hidden.size())
      field_error("network.recurrent", "length must match hidden layers");
    if (n.contains("decoder"))
      cfg.decoder = decoder_from_string(n.at("decoder").get<std::string>());
    cfg.dt = get_or<double>(n, "dt", 0.0);
    cfg.sigma = get_or<double>(n, "sigma", 0.5);
    cfg.b0 = get_or<double>(n, "b0", 1.0);
    cfg.beta = get_or<double>(n, "beta", 1.8);
    cfg.detach_reset = get_or<bool>(n, "detach_reset", false);
    cfg.zero_init_membrane = get_or<bool>(n, "zero_init_membrane", false);
  } else {
    cfg.neuron_kinds.assign(cfg.hidden.size(), NeuronKind::adaptive);
    cfg.recurrent.assign(cfg.hidden.size(), true);
  }

  if (j.contains("training")) {
    const json& t = j.at("training");
    cfg.training.lr0 = get_or<double>(t, "lr0", 0.01);
    cfg.training.decay_epochs =
        get_or<std::vector<int>>(t, "decay_epochs", {10, 50, 120, 200});
    cfg.training.decay_factor = get_or<double>(t, "decay_factor", 0.5);
    cfg.training.batch = get_or<int>(t, "batch", 64);
    cfg.training.epochs = get_or<int>(t, "epochs", 200);
    cfg.training.clip_norm = get_or<double>(t, "clip_norm", 10.0);
    cfg.training.train_tau_m = get_or<bool>(t, "train_tau_m", true);
    cfg.training.train_tau_adp = get_or<bool>(t, "train_tau_adp", true);
    cfg.training.threads = get_or<int>(t, "threads", 1);
    cfg.training.val_fraction = get_or<double>(t, "val_fraction", 0.10);
    cfg.training.stop_at_val_acc = get_or<double>(t, "stop_at_val_acc", 0.0);
  }
  cfg.training.seed = cfg.seed;

  if (j.contains("codec")) {
    const json& c = j.at("codec");
    cfg.codec.lc_threshold = get_or<double>(c, "lc_threshold", 0.3);
    cfg.codec.population = get_or<std::size_t>(c, "population", 40);
    cfg.codec.p_max = get_or<double>(c, "p_max", 0.5);
  }

  const json d = j.contains("data") ? j.at("data") : json::object();
  cfg.data.bin_ms = get_or<double>(d, "bin_ms", 4.0);
  cfg.data.synth_samples = get_or<std::size_t>(d, "synth_samples", 200);
  cfg.data.synth_test_samples =
      get_or<std::size_t>(d, "synth_test_samples", 60);
  cfg.data.synth_steps = get_or<std::size_t>(d, "synth_steps", 600);
  cfg.data.limit_train = get_or<std::size_t>(d, "limit_train", 0);
  cfg.data.limit_test = get_or<std::size_t>(d, "limit_test", 0);
  cfg.data.permute_seed = get_or<std::uint64_t>(d, "permute_seed", 42);
  switch (cfg.task) {
    case TaskName::ecg_synth:
      break;
    case TaskName::ecg_csv:
      cfg.data.csv = require_path(d, "csv", "data.csv");
      break;
    case TaskName::smnist:
    case TaskName::psmnist:
      cfg.data.images = require_path(d, "images", "data.images");
      cfg.data.labels = require_path(d, "labels", "data.labels");
      if (d.contains("test_images")) {
        cfg.data.test_images = require_path(d, "test_images", "data.test_images");
        cfg.data.test_labels = require_path(d, "test_labels", "data.test_labels");
      }
      break;
    case TaskName::shd_events:
      cfg.data.events_dir = require_path(d, "events_dir", "data.events_dir");
      if (d.contains("test_events_dir"))
        cfg.data.test_events_dir =
            require_path(d, "test_events_dir", "data.test_events_dir");
      break;
  }
  return cfg;
}

DecoderKind default_decoder(TaskName task) {
  switch (task) {
    case TaskName::ecg_synth:
    case TaskName::ecg_csv: return DecoderKind::streaming_readout;
    case TaskName::smnist:
    case TaskName::psmnist: return DecoderKind::spike_count;
    case TaskName::shd_events: return DecoderKind::mean_readout;
  }
  return DecoderKind::mean_readout;
}

namespace {

double default_dt(TaskName task, const ExperimentConfig& cfg) {
  switch (task) {
    case TaskName::ecg_synth:
    case TaskName::ecg_csv: return 4.0;  // 250 Hz
    case TaskName::smnist:
    case TaskName::psmnist: return 1.0;
    case TaskName::shd_events: return cfg.data.bin_ms;
  }
  return 1.0;
}

}  // namespace

TaskData make_datasets(const ExperimentConfig& cfg) {
  TaskData out;
  switch (cfg.task) {
    case TaskName::ecg_synth: {
      out.train = synth_ecg_like(cfg.data.synth_samples, cfg.seed,
                                 cfg.data.synth_steps);
      out.test = synth_ecg_like(cfg.data.synth_test_samples,
                                cfg.seed ^ 0x7e57ULL, cfg.data.synth_steps);
      break;
    }
    case TaskName::ecg_csv: {
      out.train = load_labeled_signal_csv(cfg.data.csv);
      break;
    }
    case TaskName::smnist:
    case TaskName::psmnist: {
      Dataset ds = load_idx_images(cfg.data.images, cfg.data.labels);
      if (cfg.task == TaskName::psmnist)
        ds = permute_sequence(ds, cfg.data.permute_seed);
      ds.encoding.kind = EncodingSpec::Kind::population;
      ds.encoding.population = cfg.codec.population;
      ds.encoding.p_max = cfg.codec.p_max;
      ds.encoding.seed = cfg.seed;
      ds.width = cfg.codec.population;
      out.train = std::move(ds);
      if (!cfg.data.test_images.empty()) {
        Dataset te = load_idx_images(cfg.data.test_images, cfg.data.test_labels);
        if (cfg.task == TaskName::psmnist)
          te = permute_sequence(te, cfg.data.permute_seed);
        te.encoding = out.train.encoding;
        te.encoding.seed = cfg.seed ^ 0x7e57ULL;
        te.width = out.train.width;
        out.test = std::move(te);
      }
      break;
    }
    case TaskName::shd_events: {
      out.train = load_event_dataset(cfg.data.events_dir, cfg.data.bin_ms,
                                     BinMode::binary);
      if (!cfg.data.test_events_dir.empty())
        out.test = load_event_dataset(cfg.data.test_events_dir, cfg.data.bin_ms,
                                      BinMode::binary);
      break;
    }
  }
  if (cfg.data.limit_train) out.train = subset(out.train, cfg.data.limit_train);
  if (out.test && cfg.data.limit_test)
    out.test = subset(*out.test, cfg.data.limit_test);

  const double dt = cfg.dt > 0.0 ? cfg.dt : default_dt(cfg.task, cfg);
  out.train.dt = dt;
  out.train.encoding.threshold = cfg.codec.lc_threshold;
  if (out.test) {
    out.test->dt = dt;
    out.test->encoding.threshold = cfg.codec.lc_threshold;
  }
  return out;
}

NetworkConfig make_network_config(const ExperimentConfig& cfg,
                                  const Dataset& dataset) {
  NetworkConfig nc;
  nc.layer_widths.push_back(dataset.width);
  for (auto w : cfg.hidden) nc.layer_widths.push_back(w);
  nc.layer_widths.push_back(static_cast<std::size_t>(dataset.class_count));
  nc.neuron_kinds = cfg.neuron_kinds;
  nc.recurrent = cfg.recurrent;
  nc.decoder = cfg.decoder.value_or(default_decoder(cfg.task));
  nc.dt = dataset.dt;
  nc.sigma = cfg.sigma;
  nc.b0 = cfg.b0;
  nc.beta = cfg.beta;
  nc.detach_reset = cfg.detach_reset;
  nc.zero_init_membrane = cfg.zero_init_membrane;
  nc.seed = cfg.seed;
  return nc;
}

// ---- energy ----------------------------------------------------------------

namespace {

EnergyKind family(NeuronKind k) {
  switch (k) {
    case NeuronKind::lif: return EnergyKind::lif;
    case NeuronKind::adaptive: return EnergyKind::adaptive;
    case NeuronKind::relu: return EnergyKind::adaptive_star;
  }
  return EnergyKind::dense;
}

}  // namespace

NetworkEnergySpec energy_spec_from_network(const Network& net,
                                           const std::vector<double>& layer_fr,
                                           double input_fr,
                                           std::optional<double> accuracy) {
  NetworkEnergySpec spec;
  spec.fr_input = input_fr;
  spec.accuracy = accuracy;
  for (std::size_t l = 0; l < net.hidden.size(); ++l) {
    EnergyLayerSpec e;
    e.kind = family(net.hidden[l].kind);
    e.m = net.config.layer_widths[l];
    e.n = net.hidden[l].width;
    e.recurrent = net.hidden[l].recurrent;
    e.fr = l < layer_fr.size() && std::isfinite(layer_fr[l]) ? layer_fr[l] : 0.0;
    spec.layers.push_back(e);
  }
  // Readout: feedforward layer of the network's own family.
  EnergyLayerSpec r;
  r.kind = family(net.hidden.back().kind);
  r.m = net.hidden.back().width;
  r.n = net.output_width();
  r.recurrent = false;
  const double last_fr = spec.layers.back().fr;
  r.fr = net.spiking_output() && net.hidden.size() < layer_fr.size() &&
                 std::isfinite(layer_fr[net.hidden.size()])
             ? layer_fr[net.hidden.size()]
             : last_fr;
  spec.layers.push_back(r);
  return spec;
}

NetworkEnergySpec load_energy_spec(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  NetworkEnergySpec spec;
  spec.name = get_or<std::string>(j, "name", "");
  spec.fr_input = get_or<double>(j, "fr_input", 0.0);
  if (j.contains("accuracy")) spec.accuracy = j.at("accuracy").get<double>();
  if (!j.contains("layers")) field_error("layers", "missing");
  for (const auto& l : j.at("layers")) {
    EnergyLayerSpec e;
    e.kind = energy_kind_from_string(l.at("kind").get<std::string>());
    e.m = l.at("m").get<std::size_t>();
    e.n = l.at("n").get<std::size_t>();
    e.recurrent = get_or<bool>(l, "recurrent", false);
    e.fr = get_or<double>(l, "fr", 0.0);
    spec.layers.push_back(e);
  }
  return spec;
}

// ---- gradcheck ---------------------------------------------------------------

GradCheckResult run_gradcheck(Network& net, const BatchInput& input,
                              TaskKind task, double threshold,
                              std::uint64_t seed) {
  for (const auto& layer : net.hidden)
    if (layer.width > 32)
      throw std::invalid_argument(
          "gradcheck: layers are capped at 32 neurons (got " +
          std::to_string(layer.width) + ")");

  bool any_spiking = false;
  for (const auto& layer : net.hidden)
    if (layer.kind != NeuronKind::relu) any_spiking = true;
  SmoothModeGuard guard(any_spiking);

  auto loss_value = [&]() {
    std::mt19937_64 rng(seed);
    ForwardOptions opts;
    opts.membrane_rng = &rng;
    return unroll_loss(net, input, task, opts).loss.item();
  };

  // Analytic gradients.
  auto named = net.named_params();
  for (auto& [name, t] : named) t.zero_grad();
  {
    std::mt19937_64 rng(seed);
    ForwardOptions opts;
    opts.membrane_rng = &rng;
    Tape tape;
    TapeScope scope(tape);
    LossResult lr = unroll_loss(net, input, task, opts);
    tape.backward(lr.loss);
  }
  std::vector<std::vector<double>> analytic;
  for (auto& [name, t] : named)
    analytic.push_back(t.has_grad() ? t.grad()
                                    : std::vector<double>(t.numel(), 0.0));
  for (auto& [name, t] : named) t.zero_grad();

  auto class_of = [](const std::string& name) -> std::string {
    if (name.find("w_in") != std::string::npos) return "W_in";
    if (name.find("w_rec") != std::string::npos) return "W_rec";
    if (name == "out.w") return "readout_w";
    if (name.find("tau_adp") != std::string::npos) return "tau_adp";
    if (name.find("tau_m") != std::string::npos) return "tau_m";
    return name;
  };

  const double h = 1e-5;
  GradCheckResult result;
  result.threshold = threshold;
  std::vector<GradCheckClass> classes;
  auto class_err = [&classes](const std::string& cls) -> GradCheckClass& {
    for (auto& c : classes)
      if (c.name == cls) return c;
    classes.push_back({cls, 0.0});
    return classes.back();
  };

  for (std::size_t pi = 0; pi < named.size(); ++pi) {
    auto& tensor = named[pi].second;
    if (!tensor.requires_grad()) continue;
    auto& cls = class_err(class_of(named[pi].first));
    auto& values = tensor.node()->value;
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double keep = values[j];
      values[j] = keep + h;
      const double lp = loss_value();
      values[j] = keep - h;
      const double lm = loss_value();
      values[j] = keep;
      const double fd = (lp - lm) / (2.0 * h);
      const double an = analytic[pi][j];
      const double denom = std::max({std::abs(fd), std::abs(an), 1e-3});
      cls.max_rel_err = std::max(cls.max_rel_err, std::abs(fd - an) / denom);
    }
  }
  result.classes = classes;
  result.pass = true;
  for (const auto& c : classes)
    if (!(c.max_rel_err < threshold)) result.pass = false;
  return result;
}

// ---- run artifacts -------------------------------------------------------------

std::string make_run_dir(const std::string& base, const std::string& task) {
  namespace fs = std::filesystem;
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(
                        now.time_since_epoch())
                        .count();
  std::time_t tt = static_cast<std::time_t>(secs);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y%m%d_%H%M%S", std::localtime(&tt));
  fs::path dir = fs::path(base) / (task + "_" + stamp);
  // Keep paths unique if two runs start within a second.
  int suffix = 0;
  fs::path candidate = dir;
  while (fs::exists(candidate))
    candidate = dir.string() + "_" + std::to_string(++suffix);
  fs::create_directories(candidate);
  return candidate.string();
}

std::string metrics_json(const EpochMetrics& m) {
  json j;
  j["epoch"] = m.epoch;
  j["train_loss"] = m.train_loss;
  j["val_acc"] = m.val_accuracy;
  if (m.test_accuracy) j["test_acc"] = *m.test_accuracy;
  json fr = json::array();
  for (double f : m.layer_fr) {
    if (std::isfinite(f))
      fr.push_back(f);
    else
      fr.push_back(nullptr);
  }
  j["fr"] = fr;
  j["lr"] = m.lr;
  j["wall_s"] = m.wall_seconds;
  j["grad_norm"] = m.grad_norm;
  return j.dump();
}

}  // namespace srnn

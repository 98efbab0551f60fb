#pragma once

#include <optional>
#include <string>

#include "srnn/energy.hpp"
#include "srnn/network.hpp"
#include "srnn/trainer.hpp"

namespace srnn {

enum class TaskName { ecg_synth, ecg_csv, smnist, psmnist, shd_events };

TaskName task_from_string(const std::string& s);
std::string to_string(TaskName t);

struct DataConfig {
  std::string images, labels, test_images, test_labels;  // IDX
  std::string csv;                                       // labeled signal
  std::string events_dir, test_events_dir;               // event datasets
  double bin_ms = 4.0;
  std::size_t synth_samples = 200;
  std::size_t synth_test_samples = 60;
  std::size_t synth_steps = 600;
  std::size_t limit_train = 0;  // 0 = no limit
  std::size_t limit_test = 0;
  std::uint64_t permute_seed = 42;
};

struct CodecConfig {
  double lc_threshold = 0.3;
  std::size_t population = 40;
  double p_max = 0.5;
};

struct ExperimentConfig {
  TaskName task = TaskName::ecg_synth;
  std::uint64_t seed = 1;
  std::string out_dir;
  std::vector<std::size_t> hidden = {36};
  std::vector<NeuronKind> neuron_kinds = {NeuronKind::adaptive};
  std::vector<bool> recurrent = {true};
  std::optional<DecoderKind> decoder;  // default chosen per task
  double dt = 0.0;                     // 0 = task default
  double sigma = 0.5;
  double b0 = 1.0;
  double beta = 1.8;
  bool detach_reset = false;
  bool zero_init_membrane = false;
  TrainConfig training;
  CodecConfig codec;
  DataConfig data;
};

// Parses the JSON experiment file; errors name the offending field.
ExperimentConfig load_experiment(const std::string& path);

struct TaskData {
  Dataset train;
  std::optional<Dataset> test;
};

TaskData make_datasets(const ExperimentConfig& cfg);
DecoderKind default_decoder(TaskName task);
NetworkConfig make_network_config(const ExperimentConfig& cfg,
                                  const Dataset& dataset);

// Maps a trained network plus measured firing rates onto the energy model;
// the readout is priced as a feedforward layer of the network's own neuron
// family.
NetworkEnergySpec energy_spec_from_network(const Network& net,
                                           const std::vector<double>& layer_fr,
                                           double input_fr,
                                           std::optional<double> accuracy = {});

NetworkEnergySpec load_energy_spec(const std::string& path);

struct GradCheckClass {
  std::string name;
  double max_rel_err = 0.0;
};

struct GradCheckResult {
  std::vector<GradCheckClass> classes;
  double threshold = 1e-4;
  bool pass = false;
};

// Central finite differences (step 1e-5) against the tape gradients for
// every parameter class, on a small network. Spiking networks run in smooth
// test mode; relu networks are checked as-is.
GradCheckResult run_gradcheck(Network& net, const BatchInput& input,
                              TaskKind task, double threshold,
                              std::uint64_t seed = 7);

std::string make_run_dir(const std::string& base, const std::string& task);
std::string metrics_json(const EpochMetrics& m);

}  // namespace srnn

#pragma once

#include <optional>
#include <string>
#include <vector>

namespace srnn {

// 45nm CMOS figures: 32-bit integer MAC and AC.
constexpr double kEnergyMac = 3.2;  // pJ
constexpr double kEnergyAc = 0.1;   // pJ

enum class EnergyKind {
  lif,            // spiking, AC-based
  adaptive,       // spiking, AC-based with 2n MAC state updates
  adaptive_star,  // non-spiking adaptive (RELU variant), all MAC
  rnn,
  lstm,
  bilstm,
  dense,  // plain m*n MAC projection
};

EnergyKind energy_kind_from_string(const std::string& s);
std::string to_string(EnergyKind k);

// pJ per timestep for one layer with fan-in m and width n. Fr scales every
// spike-driven AC term; non-spiking kinds ignore it.
double layer_energy(EnergyKind kind, std::size_t m, std::size_t n,
                    bool recurrent, double fr = 0.0);

struct EnergyLayerSpec {
  EnergyKind kind = EnergyKind::dense;
  std::size_t m = 0;
  std::size_t n = 0;
  bool recurrent = false;
  // Firing rate of this layer's own neurons (spiking kinds only).
  double fr = 0.0;
};

struct EnergyLayerReport {
  EnergyLayerSpec spec;
  double mac_count = 0.0;  // MACs per step
  double ac_count = 0.0;   // expected (Fr-weighted) ACs per step
  double pj_per_step = 0.0;
};

struct EnergyReport {
  std::vector<EnergyLayerReport> layers;
  double total_pj_per_step = 0.0;
  // Ratios vs. a baseline, when one was supplied.
  std::optional<double> energy_ratio;
  std::optional<double> error_ratio;
  std::optional<double> efficiency;
};

struct NetworkEnergySpec {
  std::string name;
  std::vector<EnergyLayerSpec> layers;
  // Firing rate of the input spike channels, used for the first layer's m*n
  // AC term; each later layer's m*n term uses the presynaptic layer's fr.
  double fr_input = 0.0;
  std::optional<double> accuracy;
};

EnergyReport network_energy(const NetworkEnergySpec& spec);
EnergyReport network_energy(const NetworkEnergySpec& spec,
                            const NetworkEnergySpec& baseline);

// Fr = total spikes / (T * neurons), per layer plus the overall average.
struct FiringRates {
  std::vector<double> per_layer;
  double overall = 0.0;
};

FiringRates firing_rate(const std::vector<std::vector<double>>& layer_records,
                        std::size_t timesteps,
                        const std::vector<std::size_t>& layer_widths);

std::string format_report(const EnergyReport& report, const std::string& name);
std::string report_csv(const EnergyReport& report);

}  // namespace srnn

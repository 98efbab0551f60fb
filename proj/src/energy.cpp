#include "srnn/energy.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace srnn {

EnergyKind energy_kind_from_string(const std::string& s) {
  if (s == "lif") return EnergyKind::lif;
  if (s == "adaptive") return EnergyKind::adaptive;
  if (s == "adaptive_star" || s == "relu") return EnergyKind::adaptive_star;
  if (s == "rnn") return EnergyKind::rnn;
  if (s == "lstm") return EnergyKind::lstm;
  if (s == "bilstm") return EnergyKind::bilstm;
  if (s == "dense" || s == "readout") return EnergyKind::dense;
  throw std::invalid_argument("unknown energy kind: " + s);
}

std::string to_string(EnergyKind k) {
  switch (k) {
    case EnergyKind::lif: return "lif";
    case EnergyKind::adaptive: return "adaptive";
    case EnergyKind::adaptive_star: return "adaptive_star";
    case EnergyKind::rnn: return "rnn";
    case EnergyKind::lstm: return "lstm";
    case EnergyKind::bilstm: return "bilstm";
    case EnergyKind::dense: return "dense";
  }
  return "?";
}

namespace {

struct OpCounts {
  double mac = 0.0;
  double ac = 0.0;  // already Fr-weighted
};

// Table of per-step operation counts per layer. `fr_in` scales the fan-in
// term, `fr_own` the recurrent and state-update AC terms; the published
// single-Fr formulas are the special case fr_in == fr_own.
OpCounts layer_ops(EnergyKind kind, double m, double n, bool recurrent,
                   double fr_in, double fr_own) {
  OpCounts ops;
  switch (kind) {
    case EnergyKind::lif:
      ops.ac = m * n * fr_in + (recurrent ? n * n * fr_own : 0.0);
      return ops;
    case EnergyKind::adaptive:
      ops.ac = m * n * fr_in + (recurrent ? n * n * fr_own : 0.0) +
               2.0 * n * fr_own;
      ops.mac = 2.0 * n;
      return ops;
    case EnergyKind::adaptive_star:
      ops.mac = m * n + (recurrent ? n * n : 0.0) + 4.0 * n;
      return ops;
    case EnergyKind::rnn:
      if (!recurrent)
        throw std::invalid_argument("layer_energy: rnn layers are recurrent");
      ops.mac = m * n + n * n;
      return ops;
    case EnergyKind::lstm:
      if (!recurrent)
        throw std::invalid_argument("layer_energy: lstm layers are recurrent");
      ops.mac = 4.0 * m * n + 4.0 * n * n + 3.0 * n;
      return ops;
    case EnergyKind::bilstm:
      if (!recurrent)
        throw std::invalid_argument(
            "layer_energy: bilstm layers are recurrent");
      ops.mac = 2.0 * (4.0 * m * n + 4.0 * n * n + 3.0 * n);
      return ops;
    case EnergyKind::dense:
      if (recurrent)
        throw std::invalid_argument(
            "layer_energy: dense projection is feedforward");
      ops.mac = m * n;
      return ops;
  }
  throw std::invalid_argument("layer_energy: unknown kind");
}

bool is_spiking(EnergyKind k) {
  return k == EnergyKind::lif || k == EnergyKind::adaptive;
}

}  // namespace

double layer_energy(EnergyKind kind, std::size_t m, std::size_t n,
                    bool recurrent, double fr) {
  if (m < 1 || n < 1)
    throw std::invalid_argument("layer_energy: m and n must be >= 1");
  if (is_spiking(kind) && (fr < 0.0 || fr > 1.0))
    throw std::invalid_argument("layer_energy: Fr must be in [0,1], got " +
                                std::to_string(fr));
  OpCounts ops = layer_ops(kind, static_cast<double>(m),
                           static_cast<double>(n), recurrent, fr, fr);
  return ops.mac * kEnergyMac + ops.ac * kEnergyAc;
}

EnergyReport network_energy(const NetworkEnergySpec& spec) {
  if (spec.layers.empty())
    throw std::invalid_argument("network_energy: no layers");
  EnergyReport report;
  double fr_prev = spec.fr_input;
  for (const auto& layer : spec.layers) {
    if (layer.m < 1 || layer.n < 1)
      throw std::invalid_argument("network_energy: m and n must be >= 1");
    if (is_spiking(layer.kind) && (layer.fr < 0.0 || layer.fr > 1.0))
      throw std::invalid_argument(
          "network_energy: spiking layer needs Fr in [0,1]");
    OpCounts ops =
        layer_ops(layer.kind, static_cast<double>(layer.m),
                  static_cast<double>(layer.n), layer.recurrent, fr_prev,
                  layer.fr);
    EnergyLayerReport lr;
    lr.spec = layer;
    lr.mac_count = ops.mac;
    lr.ac_count = ops.ac;
    lr.pj_per_step = ops.mac * kEnergyMac + ops.ac * kEnergyAc;
    report.total_pj_per_step += lr.pj_per_step;
    report.layers.push_back(lr);
    fr_prev = is_spiking(layer.kind) ? layer.fr : 1.0;
  }
  return report;
}

EnergyReport network_energy(const NetworkEnergySpec& spec,
                            const NetworkEnergySpec& baseline) {
  EnergyReport report = network_energy(spec);
  EnergyReport base = network_energy(baseline);
  report.energy_ratio = report.total_pj_per_step / base.total_pj_per_step;
  if (spec.accuracy && baseline.accuracy) {
    report.error_ratio = (1.0 - *spec.accuracy) / (1.0 - *baseline.accuracy);
    report.efficiency = *report.energy_ratio * *report.error_ratio;
  }
  return report;
}

FiringRates firing_rate(const std::vector<std::vector<double>>& layer_records,
                        std::size_t timesteps,
                        const std::vector<std::size_t>& layer_widths) {
  if (layer_records.empty() || timesteps == 0)
    throw std::invalid_argument("firing_rate: empty record");
  if (layer_records.size() != layer_widths.size())
    throw std::invalid_argument("firing_rate: record/width count mismatch");
  FiringRates rates;
  double total = 0.0;
  double slots = 0.0;
  for (std::size_t l = 0; l < layer_records.size(); ++l) {
    double s = 0.0;
    for (double v : layer_records[l]) s += v;
    const double denom =
        static_cast<double>(timesteps) * static_cast<double>(layer_widths[l]);
    if (denom == 0.0) throw std::invalid_argument("firing_rate: empty layer");
    rates.per_layer.push_back(s / denom);
    total += s;
    slots += denom;
  }
  rates.overall = total / slots;
  return rates;
}

std::string format_report(const EnergyReport& report, const std::string& name) {
  std::ostringstream os;
  os.precision(6);
  os << "energy report";
  if (!name.empty()) os << " for " << name;
  os << "\n";
  os << "  layer  kind           m      n     rec  Fr      MAC/step    AC/step     pJ/step\n";
  for (std::size_t i = 0; i < report.layers.size(); ++i) {
    const auto& l = report.layers[i];
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "  %-6zu %-14s %-6zu %-6zu %-4s %-7.4g %-11.6g %-11.6g %.6g\n",
                  i, to_string(l.spec.kind).c_str(), l.spec.m, l.spec.n,
                  l.spec.recurrent ? "yes" : "no", l.spec.fr, l.mac_count,
                  l.ac_count, l.pj_per_step);
    os << buf;
  }
  os << "  total: " << report.total_pj_per_step << " pJ/step\n";
  if (report.energy_ratio)
    os << "  energy ratio: " << *report.energy_ratio << "x\n";
  if (report.error_ratio)
    os << "  error ratio:  " << *report.error_ratio << "x\n";
  if (report.efficiency)
    os << "  efficiency:   " << *report.efficiency << "x\n";
  return os.str();
}

std::string report_csv(const EnergyReport& report) {
  std::ostringstream os;
  os.precision(10);
  os << "layer,kind,m,n,recurrent,fr,mac_per_step,ac_per_step,pj_per_step\n";
  for (std::size_t i = 0; i < report.layers.size(); ++i) {
    const auto& l = report.layers[i];
    os << i << ',' << to_string(l.spec.kind) << ',' << l.spec.m << ','
       << l.spec.n << ',' << (l.spec.recurrent ? 1 : 0) << ',' << l.spec.fr
       << ',' << l.mac_count << ',' << l.ac_count << ',' << l.pj_per_step
       << '\n';
  }
  os << "total,,,,,,,," << report.total_pj_per_step << '\n';
  return os.str();
}

}  // namespace srnn

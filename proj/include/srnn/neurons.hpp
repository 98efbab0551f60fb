#pragma once

#include <cstdint>
#include <random>

#include "srnn/autograd.hpp"

namespace srnn {

// Per-layer neuron constants. The time constants are per-neuron tensors and
// may be trainable; everything else is a fixed scalar.
struct NeuronParams {
  Tensor tau_m;        // [n], ms
  Tensor tau_adp;      // [n], ms (adaptive and relu kinds only)
  double b0 = 1.0;     // baseline threshold
  double beta = 1.8;   // adaptation strength
  double r_m = 1.0;    // membrane resistance
  double u_r = 0.0;    // resting / reset potential
  double dt = 1.0;     // ms per step
  double sigma = 0.5;  // surrogate gradient width
  bool detach_reset = false;

  enum class Reset { subtract, hard };
  Reset reset = Reset::subtract;  // adaptive cells; LIF always resets hard
};

// Dynamic state of one layer for a batch: membranes u, adaptation traces eta
// and the previous step's outputs s, all shaped [batch, n].
struct LayerState {
  Tensor u;
  Tensor eta;
  Tensor s;
};

// Decay factors derived from the time constants, built once per unroll so
// the tau gradients flow through exp(-dt/tau) without re-recording the same
// nodes every step.
struct CellCoeffs {
  Tensor alpha;            // exp(-dt/tau_m)
  Tensor one_minus_alpha;  // 1 - alpha
  Tensor input_scale;      // (1 - alpha) * R_m
  Tensor rho;              // exp(-dt/tau_adp)
  Tensor one_minus_rho;
  Tensor theta0;           // scalar b0, for fixed-threshold cells
};

CellCoeffs make_coeffs(const NeuronParams& p);

LayerState make_state(std::size_t batch, std::size_t n, bool adaptive,
                      std::mt19937_64* membrane_rng);

struct StepOut {
  LayerState state;
  Tensor out;  // spikes (binary), or real activations for relu/readout
};

StepOut lif_step(const LayerState& state, const Tensor& current,
                 const NeuronParams& p, const CellCoeffs& c);
StepOut adaptive_step(const LayerState& state, const Tensor& current,
                      const NeuronParams& p, const CellCoeffs& c);
StepOut relu_step(const LayerState& state, const Tensor& current,
                  const NeuronParams& p, const CellCoeffs& c);
// Non-spiking leaky readout integrator: u' = alpha*u + (1-alpha)*x.
LayerState readout_step(const LayerState& state, const Tensor& x,
                        const NeuronParams& p, const CellCoeffs& c);

// While enabled, spike outputs become Phi((u-theta)/sigma) so the surrogate
// backward equals the true derivative and finite-difference checks apply to
// the whole network.
void smooth_test_mode(bool on);
bool smooth_test_mode_enabled();

struct SmoothModeGuard {
  explicit SmoothModeGuard(bool on) : prev_(smooth_test_mode_enabled()) {
    smooth_test_mode(on);
  }
  ~SmoothModeGuard() { smooth_test_mode(prev_); }

 private:
  bool prev_;
};

}  // namespace srnn

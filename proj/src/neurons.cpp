#include "srnn/neurons.hpp"

#include <atomic>
#include <stdexcept>

namespace srnn {

namespace {

std::atomic<bool> g_smooth_mode{false};

void check_current(const Tensor& current) {
  if (!all_finite(current.value()))
    throw std::invalid_argument("neuron step: non-finite input current");
}

SpikeForward spike_mode() {
  return g_smooth_mode.load(std::memory_order_relaxed) ? SpikeForward::smooth
                                                       : SpikeForward::binary;
}

// alpha*u + input_scale*I, the shared leaky integration term.
Tensor integrate(const LayerState& state, const Tensor& current,
                 const CellCoeffs& c) {
  return add(mul_rowvec(state.u, c.alpha), mul_rowvec(current, c.input_scale));
}

Tensor hard_reset(const Tensor& u_new, const Tensor& s, const NeuronParams& p) {
  Tensor s_reset = p.detach_reset ? detach(s) : s;
  Tensor kept = mul(u_new, affine(s_reset, -1.0, 1.0));
  if (p.u_r != 0.0) return add(kept, scalar_mul(s_reset, p.u_r));
  return kept;
}

}  // namespace

void smooth_test_mode(bool on) {
  g_smooth_mode.store(on, std::memory_order_relaxed);
}

bool smooth_test_mode_enabled() {
  return g_smooth_mode.load(std::memory_order_relaxed);
}

CellCoeffs make_coeffs(const NeuronParams& p) {
  CellCoeffs c;
  c.alpha = exp_t(scalar_mul(reciprocal(p.tau_m), -p.dt));
  c.one_minus_alpha = affine(c.alpha, -1.0, 1.0);
  c.input_scale = p.r_m == 1.0 ? c.one_minus_alpha
                               : scalar_mul(c.one_minus_alpha, p.r_m);
  if (p.tau_adp.defined()) {
    c.rho = exp_t(scalar_mul(reciprocal(p.tau_adp), -p.dt));
    c.one_minus_rho = affine(c.rho, -1.0, 1.0);
  }
  c.theta0 = Tensor::scalar(p.b0);
  return c;
}

LayerState make_state(std::size_t batch, std::size_t n, bool adaptive,
                      std::mt19937_64* membrane_rng) {
  LayerState st;
  if (membrane_rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> u(batch * n);
    for (auto& v : u) v = unit(*membrane_rng);
    st.u = Tensor::from({batch, n}, std::move(u));
  } else {
    st.u = Tensor::zeros({batch, n});
  }
  if (adaptive) st.eta = Tensor::zeros({batch, n});
  st.s = Tensor::zeros({batch, n});
  return st;
}

StepOut lif_step(const LayerState& state, const Tensor& current,
                 const NeuronParams& p, const CellCoeffs& c) {
  check_current(current);
  Tensor u_new = integrate(state, current, c);
  Tensor s = custom_grad_spike(u_new, c.theta0, p.sigma, spike_mode());
  LayerState next;
  next.u = hard_reset(u_new, s, p);
  next.s = s;
  return {next, s};
}

// Shared recursion for the adaptive cell and its non-spiking RELU variant
// (Eqs. for eta, theta and u are identical; only the output differs).
namespace {

struct AdaptiveCore {
  Tensor eta;
  Tensor theta;
  Tensor u;  // pre-spike membrane
};

AdaptiveCore adaptive_core(const LayerState& state, const Tensor& current,
                           const NeuronParams& p, const CellCoeffs& c) {
  check_current(current);
  AdaptiveCore core;
  core.eta = add(mul_rowvec(state.eta, c.rho),
                 mul_rowvec(state.s, c.one_minus_rho));
  core.theta = affine(core.eta, p.beta, p.b0);
  Tensor base = integrate(state, current, c);
  if (p.reset == NeuronParams::Reset::subtract) {
    Tensor s_reset = p.detach_reset ? detach(state.s) : state.s;
    core.u = sub(base, mul(s_reset, core.theta));
  } else {
    core.u = base;
  }
  return core;
}

}  // namespace

StepOut adaptive_step(const LayerState& state, const Tensor& current,
                      const NeuronParams& p, const CellCoeffs& c) {
  AdaptiveCore core = adaptive_core(state, current, p, c);
  Tensor s = custom_grad_spike(core.u, core.theta, p.sigma, spike_mode());
  LayerState next;
  next.u = p.reset == NeuronParams::Reset::hard ? hard_reset(core.u, s, p)
                                                : core.u;
  next.eta = core.eta;
  next.s = s;
  return {next, s};
}

StepOut relu_step(const LayerState& state, const Tensor& current,
                  const NeuronParams& p, const CellCoeffs& c) {
  AdaptiveCore core = adaptive_core(state, current, p, c);
  Tensor out = relu(sub(core.u, core.theta));
  LayerState next;
  next.u = core.u;
  next.eta = core.eta;
  next.s = out;  // the eta recursion consumes the real-valued output
  return {next, out};
}

LayerState readout_step(const LayerState& state, const Tensor& x,
                        const NeuronParams& p, const CellCoeffs& c) {
  (void)p;
  check_current(x);
  LayerState next;
  next.u = add(mul_rowvec(state.u, c.alpha), mul_rowvec(x, c.one_minus_alpha));
  next.s = state.s;
  return next;
}

}  // namespace srnn

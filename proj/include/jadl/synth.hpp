#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

#include "jadl/random.hpp"
#include "jadl/signal.hpp"

namespace jadl {

// Synthetic multi-trial benchmark: three known atoms placed with per-signal
// coefficients and shifts, corrupted by spurious oscillatory events and white
// noise scaled to a target SNR (mean over signals of clean energy / noise
// energy). target_snr = inf disables the noise.
struct SynthConfig {
  int signal_len = 512;
  double sample_rate = 128.0;  // window = 4 s
  int signal_count = 200;

  double coeff_mean = 1.0;
  double coeff_stddev = 0.3;
  double shift_stddev_s = 0.2;
  double shift_bound_s = 0.6;  // truncation bound of the shift draw

  int max_spurious_events = 3;  // count per signal ~ uniform {0..max}
  double event_amp_min = 0.05, event_amp_max = 0.2;
  double event_freq_min = 2.0, event_freq_max = 20.0;
  double event_support_min_s = 0.2, event_support_max_s = 1.0;

  double target_snr = 0.790;

  // true-atom shapes
  double spike_center_s = 2.0;
  double spike_sigma_samples = 1.0;
  double osc_freq1_hz = 7.0, osc_freq2_hz = 11.0;
  double osc_support_s = 1.0;
  double osc_center1_s = 1.2, osc_center2_s = 2.8;

  std::uint64_t seed = 0;
};

struct GroundTruth {
  Dictionary true_dictionary;    // signal-length atoms, circular domain
  Eigen::MatrixXd coefficients;  // signal_count x atom_count
  Eigen::MatrixXi shifts;        // signal_count x atom_count, samples
  std::vector<Signal> clean;        // model signals
  std::vector<Signal> with_events;  // clean + spurious events
  std::vector<Signal> noisy;        // with_events + white noise
  int shift_bound_samples = 0;
  double noise_scale = 0.0;
  double measured_snr = std::numeric_limits<double>::infinity();

  SparseCode code_for(int j) const {
    SparseCode code;
    for (int i = 0; i < coefficients.cols(); ++i)
      code.entries.push_back({i, shifts(j, i), coefficients(j, i)});
    return code;
  }
};

namespace detail {

inline Eigen::VectorXd gaussian_windowed_sine(int len, double fs, double freq,
                                              double center_s, double sigma_s,
                                              double amplitude) {
  Eigen::VectorXd v(len);
  constexpr double two_pi = 6.283185307179586476925286766559;
  for (int t = 0; t < len; ++t) {
    const double dt = t / fs - center_s;
    v[t] = amplitude * std::exp(-dt * dt / (2.0 * sigma_s * sigma_s)) *
           std::sin(two_pi * freq * dt);
  }
  return v;
}

}  // namespace detail

// The fixed benchmark dictionary: a narrow Gaussian spike centered in the
// window and two Gaussian-windowed sinusoids at distinct frequencies and
// center times; all unit norm.
inline Dictionary make_true_dictionary(const SynthConfig& cfg) {
  if (cfg.signal_len < 2) throw ConfigError("signal_len must be >= 2");
  if (cfg.sample_rate <= 0) throw ConfigError("sample_rate must be positive");
  Dictionary d;
  d.mode = ShiftMode::circular;
  d.sample_rate = cfg.sample_rate;
  d.atoms.resize(cfg.signal_len, 3);

  const double spike_center = cfg.spike_center_s * cfg.sample_rate;
  for (int t = 0; t < cfg.signal_len; ++t) {
    const double dt = t - spike_center;
    d.atoms(t, 0) =
        std::exp(-dt * dt / (2.0 * cfg.spike_sigma_samples * cfg.spike_sigma_samples));
  }
  const double sigma_s = cfg.osc_support_s / 4.0;
  d.atoms.col(1) = detail::gaussian_windowed_sine(
      cfg.signal_len, cfg.sample_rate, cfg.osc_freq1_hz, cfg.osc_center1_s,
      sigma_s, 1.0);
  d.atoms.col(2) = detail::gaussian_windowed_sine(
      cfg.signal_len, cfg.sample_rate, cfg.osc_freq2_hz, cfg.osc_center2_s,
      sigma_s, 1.0);
  for (int k = 0; k < 3; ++k) {
    const double norm = d.atoms.col(k).norm();
    if (norm < 1e-12)
      throw ConfigError("true atom " + std::to_string(k) +
                        " has no energy inside the window; adjust the centers");
    d.atoms.col(k) /= norm;
  }
  return d;
}

// Draws the full benchmark. Each signal has its own derived random stream, so
// the result is bit-reproducible for a fixed config.
inline GroundTruth generate(const SynthConfig& cfg) {
  if (cfg.signal_count < 1) throw ConfigError("signal_count must be >= 1");
  if (cfg.coeff_stddev < 0 || cfg.shift_stddev_s < 0)
    throw ConfigError("stddev must be >= 0");
  if (cfg.max_spurious_events < 0)
    throw ConfigError("max_spurious_events must be >= 0");
  if (cfg.shift_bound_s < 0) throw ConfigError("shift bound must be >= 0");

  GroundTruth gt;
  gt.true_dictionary = make_true_dictionary(cfg);
  gt.shift_bound_samples =
      static_cast<int>(std::llround(cfg.shift_bound_s * cfg.sample_rate));
  const ShiftSet gen_shifts = ShiftSet::symmetric(
      gt.shift_bound_samples, ShiftMode::circular, 1);
  gen_shifts.validate_for_signal_length(cfg.signal_len);

  const int m = cfg.signal_count;
  const int k_true = gt.true_dictionary.atom_count();
  gt.coefficients.resize(m, k_true);
  gt.shifts.resize(m, k_true);
  gt.clean.resize(m);
  gt.with_events.resize(m);
  gt.noisy.resize(m);

  const Rng base(cfg.seed);
  const bool noisy = std::isfinite(cfg.target_snr) && cfg.target_snr > 0;
  std::vector<Eigen::VectorXd> noise_draws(noisy ? m : 0);

  for (int j = 0; j < m; ++j) {
    Rng rng = base.fork(static_cast<std::uint64_t>(j) + 1);
    for (int i = 0; i < k_true; ++i)
      gt.coefficients(j, i) = rng.normal(cfg.coeff_mean, cfg.coeff_stddev);
    for (int i = 0; i < k_true; ++i) {
      double s = rng.normal(0.0, cfg.shift_stddev_s);
      while (std::abs(s) > cfg.shift_bound_s)  // truncated normal
        s = rng.normal(0.0, cfg.shift_stddev_s);
      gt.shifts(j, i) = static_cast<int>(std::llround(s * cfg.sample_rate));
    }
    gt.clean[j].sample_rate = cfg.sample_rate;
    gt.clean[j].samples =
        reconstruct(gt.true_dictionary, gt.code_for(j), gen_shifts, cfg.signal_len);

    gt.with_events[j] = gt.clean[j];
    const int events =
        static_cast<int>(rng.uniform_int(0, cfg.max_spurious_events));
    const double window_s = cfg.signal_len / cfg.sample_rate;
    for (int e = 0; e < events; ++e) {
      const double amp = rng.uniform(cfg.event_amp_min, cfg.event_amp_max);
      const double freq = rng.uniform(cfg.event_freq_min, cfg.event_freq_max);
      const double support = rng.uniform(cfg.event_support_min_s, cfg.event_support_max_s);
      const double center = rng.uniform(0.0, window_s);
      gt.with_events[j].samples += detail::gaussian_windowed_sine(
          cfg.signal_len, cfg.sample_rate, freq, center, support / 4.0, amp);
    }

    if (noisy) {
      noise_draws[j].resize(cfg.signal_len);
      for (int t = 0; t < cfg.signal_len; ++t) noise_draws[j][t] = rng.normal();
    }
  }

  if (noisy) {
    // One global scale: mean over signals of clean energy / noise energy hits
    // the target exactly.
    double ratio_sum = 0.0;
    int counted = 0;
    for (int j = 0; j < m; ++j) {
      const double clean_e = gt.clean[j].samples.squaredNorm();
      const double noise_e = noise_draws[j].squaredNorm();
      if (clean_e > 0 && noise_e > 0) {
        ratio_sum += clean_e / noise_e;
        ++counted;
      }
    }
    if (counted == 0) throw NumericalError("cannot scale noise: zero-energy data");
    const double alpha_sq = (ratio_sum / counted) / cfg.target_snr;
    gt.noise_scale = std::sqrt(alpha_sq);
    double snr_sum = 0.0;
    for (int j = 0; j < m; ++j) {
      gt.noisy[j].sample_rate = cfg.sample_rate;
      gt.noisy[j].samples =
          gt.with_events[j].samples + gt.noise_scale * noise_draws[j];
      const double noise_e = alpha_sq * noise_draws[j].squaredNorm();
      if (noise_e > 0) snr_sum += gt.clean[j].samples.squaredNorm() / noise_e;
    }
    gt.measured_snr = snr_sum / counted;
  } else {
    gt.noise_scale = 0.0;
    for (int j = 0; j < m; ++j) gt.noisy[j] = gt.with_events[j];
    gt.measured_snr = std::numeric_limits<double>::infinity();
  }
  return gt;
}

}  // namespace jadl

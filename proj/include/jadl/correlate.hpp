#pragma once

#include <unsupported/Eigen/FFT>

#include <complex>
#include <vector>

#include "jadl/signal.hpp"

namespace jadl {

// Above this shift count, batched correlations go through an FFT
// cross-correlation instead of direct dot products.
inline constexpr int kFftShiftThreshold = 40;

namespace detail {

// Per-thread FFT plans and scratch. Complex-to-complex transforms are used in
// both directions so arbitrary (odd, prime-factor) lengths are handled.
struct FftWorkspace {
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> in, spec, prod, out;
};

inline FftWorkspace& fft_workspace() {
  thread_local FftWorkspace w;
  return w;
}

// Full complex spectrum of x zero-padded to nfft.
inline void fft_forward_padded(const Eigen::Ref<const Eigen::VectorXd>& x,
                               int nfft, std::vector<std::complex<double>>& spec) {
  auto& w = fft_workspace();
  w.in.assign(nfft, std::complex<double>(0.0, 0.0));
  for (int i = 0; i < x.size(); ++i) w.in[i] = std::complex<double>(x[i], 0.0);
  w.fft.fwd(spec, w.in);
}

inline void fft_inverse(const std::vector<std::complex<double>>& spec,
                        std::vector<std::complex<double>>& time) {
  fft_workspace().fft.inv(time, spec);
}

// <v, shift_n(atom)> for one shift without materializing the shifted copy.
inline double correlate_one(const Eigen::Ref<const Eigen::VectorXd>& v,
                            const Eigen::Ref<const Eigen::VectorXd>& atom,
                            int n, const ShiftSet& ss) {
  const int len = static_cast<int>(v.size());
  if (ss.mode() == ShiftMode::circular) {
    const int k = wrap_shift(n, len);
    if (k == 0) return v.dot(atom);
    return v.head(k).dot(atom.tail(k)) + v.tail(len - k).dot(atom.head(len - k));
  }
  return v.dot(atom.segment(n - ss.min_shift(), len));
}

}  // namespace detail

// Correlations of one signal with every allowed shift of one atom:
// out[s] = <signal, shift_{n_s}(atom)>. Direct dot products for small shift
// sets, FFT cross-correlation above the threshold; the two paths agree to
// 1e-8 relative.
inline Eigen::VectorXd correlate_all_shifts(
    const Eigen::Ref<const Eigen::VectorXd>& signal,
    const Eigen::Ref<const Eigen::VectorXd>& atom, const ShiftSet& ss,
    int fft_threshold = kFftShiftThreshold) {
  const int len = static_cast<int>(signal.size());
  const int expected = ss.atom_length(len);
  if (atom.size() != expected)
    throw ConfigError("atom length " + std::to_string(atom.size()) +
                      " inconsistent with shift mode (expected " +
                      std::to_string(expected) + ")");
  const int s_count = ss.count();
  Eigen::VectorXd out(s_count);
  if (s_count <= fft_threshold) {
    for (int s = 0; s < s_count; ++s)
      out[s] = detail::correlate_one(signal, atom, ss.shifts()[s], ss);
    return out;
  }
  auto& w = detail::fft_workspace();
  const int nfft = expected;  // N circular, N + span extended
  if (ss.mode() == ShiftMode::circular) {
    // c[n] = IFFT(FFT(v) .* conj(FFT(atom)))[n mod N]
    std::vector<std::complex<double>> vspec;
    detail::fft_forward_padded(signal, nfft, vspec);
    std::vector<std::complex<double>> aspec;
    detail::fft_forward_padded(atom, nfft, aspec);
    w.prod.resize(nfft);
    for (int f = 0; f < nfft; ++f) w.prod[f] = vspec[f] * std::conj(aspec[f]);
    detail::fft_inverse(w.prod, w.out);
    for (int s = 0; s < s_count; ++s)
      out[s] = w.out[detail::wrap_shift(ss.shifts()[s], nfft)].real();
  } else {
    // c[o] = IFFT(conj(FFT(v_pad)) .* FFT(atom))[o], o = n - min_shift.
    // v is zero-padded to the atom length, so the size-L circular
    // correlation never wraps into the window range.
    std::vector<std::complex<double>> vspec;
    detail::fft_forward_padded(signal, nfft, vspec);
    std::vector<std::complex<double>> aspec;
    detail::fft_forward_padded(atom, nfft, aspec);
    w.prod.resize(nfft);
    for (int f = 0; f < nfft; ++f) w.prod[f] = std::conj(vspec[f]) * aspec[f];
    detail::fft_inverse(w.prod, w.out);
    for (int s = 0; s < s_count; ++s)
      out[s] = w.out[ss.shifts()[s] - ss.min_shift()].real();
  }
  return out;
}

inline Eigen::VectorXd correlate_all_shifts(const Signal& signal,
                                            const Eigen::Ref<const Eigen::VectorXd>& atom,
                                            const ShiftSet& ss,
                                            int fft_threshold = kFftShiftThreshold) {
  return correlate_all_shifts(signal.samples, atom, ss, fft_threshold);
}

// Batched correlations against a whole dictionary, with the atom spectra
// precomputed once. Output indexing matches the unrolled-dictionary column
// layout: entry (atom * S + s) = <v, shift_s(atom)>. Thread-safe: FFT scratch
// is per thread.
class CorrelationEngine {
 public:
  CorrelationEngine(Dictionary dict, ShiftSet shifts, int signal_len,
                    int fft_threshold = kFftShiftThreshold)
      : dict_(std::move(dict)),
        shifts_(std::move(shifts)),
        signal_len_(signal_len),
        fft_(shifts_.count() > fft_threshold) {
    shifts_.validate_for_signal_length(signal_len_);
    validate_dictionary(dict_, shifts_, signal_len_);
    nfft_ = shifts_.atom_length(signal_len_);
    if (fft_) {
      atom_spectra_.resize(dict_.atom_count());
      for (int k = 0; k < dict_.atom_count(); ++k)
        detail::fft_forward_padded(dict_.atoms.col(k), nfft_, atom_spectra_[k]);
    }
  }

  int signal_length() const { return signal_len_; }
  int atom_count() const { return dict_.atom_count(); }
  int shift_count() const { return shifts_.count(); }
  int column_count() const { return atom_count() * shift_count(); }
  const Dictionary& dictionary() const { return dict_; }
  const ShiftSet& shift_set() const { return shifts_; }
  bool fft_active() const { return fft_; }

  int column_atom(int col) const { return col / shift_count(); }
  int column_shift(int col) const { return shifts_.shifts()[col % shift_count()]; }

  void column(int col, Eigen::Ref<Eigen::VectorXd> out) const {
    out.setZero();
    add_shifted(out, dict_.atoms.col(column_atom(col)), column_shift(col),
                shifts_, 1.0);
  }

  // out[i*S + s] = <v, shift_s(atom_i)>; FFT path when configured.
  void correlations(const Eigen::Ref<const Eigen::VectorXd>& v,
                    Eigen::VectorXd& out) const {
    if (!fft_) {
      correlations_direct(v, out);
      return;
    }
    const int s_count = shift_count();
    out.resize(column_count());
    auto& w = detail::fft_workspace();
    std::vector<std::complex<double>> vspec;
    detail::fft_forward_padded(v, nfft_, vspec);
    const bool circular = shifts_.mode() == ShiftMode::circular;
    if (!circular)
      for (auto& z : vspec) z = std::conj(z);
    for (int k = 0; k < atom_count(); ++k) {
      const auto& aspec = atom_spectra_[k];
      w.prod.resize(nfft_);
      if (circular)
        for (int f = 0; f < nfft_; ++f) w.prod[f] = vspec[f] * std::conj(aspec[f]);
      else
        for (int f = 0; f < nfft_; ++f) w.prod[f] = vspec[f] * aspec[f];
      detail::fft_inverse(w.prod, w.out);
      double* dst = out.data() + k * s_count;
      if (circular) {
        for (int s = 0; s < s_count; ++s)
          dst[s] = w.out[detail::wrap_shift(shifts_.shifts()[s], nfft_)].real();
      } else {
        for (int s = 0; s < s_count; ++s)
          dst[s] = w.out[shifts_.shifts()[s] - shifts_.min_shift()].real();
      }
    }
  }

  // Direct dot products regardless of the threshold; O(K * S * N).
  void correlations_direct(const Eigen::Ref<const Eigen::VectorXd>& v,
                           Eigen::VectorXd& out) const {
    const int s_count = shift_count();
    out.resize(column_count());
    for (int k = 0; k < atom_count(); ++k) {
      const auto atom = dict_.atoms.col(k);
      double* dst = out.data() + k * s_count;
      for (int s = 0; s < s_count; ++s)
        dst[s] = detail::correlate_one(v, atom, shifts_.shifts()[s], shifts_);
    }
  }

 private:
  Dictionary dict_;
  ShiftSet shifts_;
  int signal_len_;
  bool fft_;
  int nfft_ = 0;
  std::vector<std::vector<std::complex<double>>> atom_spectra_;
};

}  // namespace jadl

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "jadl/errors.hpp"

namespace jadl {

// One trial/epoch: a fixed-length sample vector. The sample rate is metadata
// used to convert shift bounds given in seconds.
struct Signal {
  Eigen::VectorXd samples;
  double sample_rate = 0.0;  // Hz

  int length() const { return static_cast<int>(samples.size()); }
};

inline void validate_signal(const Signal& s) {
  if (s.samples.size() == 0) throw DataError("signal has zero length");
  if (!s.samples.allFinite()) throw DataError("signal has non-finite samples");
}

// How an atom is translated in time.
//   circular: wraparound shift on the signal domain.
//   extended: the atom lives on a larger domain (signal length + shift span)
//             and each shift reads a full-length window, so no wraparound.
enum class ShiftMode { circular, extended };

inline const char* to_string(ShiftMode m) {
  return m == ShiftMode::circular ? "circular" : "extended";
}

inline ShiftMode shift_mode_from_string(const std::string& s) {
  if (s == "circular") return ShiftMode::circular;
  if (s == "extended") return ShiftMode::extended;
  throw ConfigError("unknown shift mode '" + s + "' (expected circular|extended)");
}

// The set of allowed integer sample shifts, symmetric around 0. A stride > 1
// subsamples the set (minimal distance between shifts); 0 is always a member
// so the identity stays representable.
class ShiftSet {
 public:
  ShiftSet() : shifts_{0} {}

  static ShiftSet identity(ShiftMode mode = ShiftMode::circular) {
    ShiftSet s;
    s.mode_ = mode;
    return s;
  }

  static ShiftSet symmetric(int max_shift, ShiftMode mode, int stride = 1) {
    if (max_shift < 0) throw ConfigError("max shift must be >= 0");
    if (stride < 1) throw ConfigError("shift stride must be >= 1");
    ShiftSet s;
    s.mode_ = mode;
    s.stride_ = stride;
    s.shifts_.clear();
    const int q = max_shift / stride;
    for (int k = -q; k <= q; ++k) s.shifts_.push_back(k * stride);
    return s;
  }

  // Seconds are converted with round-to-nearest.
  static ShiftSet from_seconds(double max_shift_s, double sample_rate,
                               ShiftMode mode, int stride = 1) {
    if (max_shift_s < 0) throw ConfigError("max shift must be >= 0 seconds");
    if (sample_rate <= 0) throw ConfigError("sample rate must be positive");
    const int max_shift = static_cast<int>(std::llround(max_shift_s * sample_rate));
    return symmetric(max_shift, mode, stride);
  }

  const std::vector<int>& shifts() const { return shifts_; }
  int count() const { return static_cast<int>(shifts_.size()); }
  int min_shift() const { return shifts_.front(); }
  int max_shift() const { return shifts_.back(); }
  int span() const { return max_shift() - min_shift(); }
  ShiftMode mode() const { return mode_; }
  int stride() const { return stride_; }

  // Length of the atom domain for a given signal length.
  int atom_length(int signal_len) const {
    return mode_ == ShiftMode::circular ? signal_len : signal_len + span();
  }

  bool contains(int n) const {
    return std::binary_search(shifts_.begin(), shifts_.end(), n);
  }

  int index_of(int n) const {
    const auto it = std::lower_bound(shifts_.begin(), shifts_.end(), n);
    if (it == shifts_.end() || *it != n) return -1;
    return static_cast<int>(it - shifts_.begin());
  }

  bool in_bounds(int n) const { return n >= min_shift() && n <= max_shift(); }

  void validate_for_signal_length(int signal_len) const {
    const int m = std::max(std::abs(min_shift()), std::abs(max_shift()));
    if (2 * m > signal_len)
      throw ConfigError("max |shift| " + std::to_string(m) +
                        " exceeds half the signal length " +
                        std::to_string(signal_len));
  }

 private:
  std::vector<int> shifts_;
  ShiftMode mode_ = ShiftMode::circular;
  int stride_ = 1;
};

// K atoms as columns; unit l2 norm each. In extended mode atoms are longer
// than the signal by the shift span.
struct Dictionary {
  Eigen::MatrixXd atoms;  // atom_length x atom_count
  ShiftMode mode = ShiftMode::circular;
  double sample_rate = 0.0;

  int atom_count() const { return static_cast<int>(atoms.cols()); }
  int atom_length() const { return static_cast<int>(atoms.rows()); }
};

inline constexpr double kUnitNormTol = 1e-9;

inline void validate_unit_norms(const Dictionary& d, double tol = kUnitNormTol) {
  for (int k = 0; k < d.atom_count(); ++k) {
    const double n = d.atoms.col(k).norm();
    if (std::abs(n - 1.0) > tol)
      throw ConfigError("atom " + std::to_string(k) + " has norm " +
                        std::to_string(n) + ", expected 1");
  }
}

inline void validate_dictionary(const Dictionary& d, const ShiftSet& ss,
                                int signal_len) {
  if (d.atom_count() < 1) throw ConfigError("dictionary has no atoms");
  if (d.mode != ss.mode())
    throw ConfigError("dictionary and shift set disagree on shift mode");
  if (d.atom_length() != ss.atom_length(signal_len))
    throw ConfigError("atom length " + std::to_string(d.atom_length()) +
                      " inconsistent with mode (expected " +
                      std::to_string(ss.atom_length(signal_len)) + ")");
  if (!d.atoms.allFinite()) throw DataError("dictionary has non-finite entries");
  validate_unit_norms(d);
}

// Per-signal code: at most one (shift, coefficient) pair per atom.
struct CodeEntry {
  int atom = 0;
  int shift = 0;
  double coeff = 0.0;
};

struct SparseCode {
  std::vector<CodeEntry> entries;  // sorted by atom index, one entry per atom

  double l1() const {
    double s = 0.0;
    for (const auto& e : entries) s += std::abs(e.coeff);
    return s;
  }
};

// --- shift operators -------------------------------------------------------

namespace detail {

inline int wrap_shift(int n, int len) {
  int k = n % len;
  if (k < 0) k += len;
  return k;
}

inline void check_shift_bounds(int n, const ShiftSet& ss) {
  if (!ss.in_bounds(n))
    throw std::domain_error("shift " + std::to_string(n) +
                            " outside shift set bounds [" +
                            std::to_string(ss.min_shift()) + ", " +
                            std::to_string(ss.max_shift()) + "]");
}

}  // namespace detail

// target += scale * shift_n(atom). Circular: out[i] = atom[(i - n) mod N].
// Extended: the window of the long atom at offset n - min_shift.
inline void add_shifted(Eigen::Ref<Eigen::VectorXd> target,
                        const Eigen::Ref<const Eigen::VectorXd>& atom, int n,
                        const ShiftSet& ss, double scale) {
  detail::check_shift_bounds(n, ss);
  const int len = static_cast<int>(target.size());
  if (ss.mode() == ShiftMode::circular) {
    if (atom.size() != len)
      throw ConfigError("circular shift needs atom length == signal length");
    const int k = detail::wrap_shift(n, len);
    if (k == 0) {
      target += scale * atom;
    } else {
      target.head(k) += scale * atom.tail(k);
      target.tail(len - k) += scale * atom.head(len - k);
    }
  } else {
    if (atom.size() != len + ss.span())
      throw ConfigError("extended shift needs atom length == signal length + span");
    target += scale * atom.segment(n - ss.min_shift(), len);
  }
}

// target_atom += scale * adjoint(shift_n)(v): the linear adjoint of
// add_shifted, so <shift(u), v> == <u, adjoint_shift(v)>. Circular shifts are
// orthogonal, so the adjoint is the inverse shift; extended mode scatters v
// into the window of the atom domain.
inline void add_adjoint_shifted(Eigen::Ref<Eigen::VectorXd> target_atom,
                                const Eigen::Ref<const Eigen::VectorXd>& v,
                                int n, const ShiftSet& ss, double scale) {
  detail::check_shift_bounds(n, ss);
  const int len = static_cast<int>(v.size());
  if (ss.mode() == ShiftMode::circular) {
    if (target_atom.size() != len)
      throw ConfigError("circular adjoint needs atom length == signal length");
    const int k = detail::wrap_shift(-n, len);
    if (k == 0) {
      target_atom += scale * v;
    } else {
      target_atom.head(k) += scale * v.tail(k);
      target_atom.tail(len - k) += scale * v.head(len - k);
    }
  } else {
    if (target_atom.size() != len + ss.span())
      throw ConfigError("extended adjoint needs atom length == signal length + span");
    target_atom.segment(n - ss.min_shift(), len) += scale * v;
  }
}

inline Eigen::VectorXd apply_shift(const Eigen::Ref<const Eigen::VectorXd>& atom,
                                   int n, const ShiftSet& ss, int signal_len) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(signal_len);
  add_shifted(out, atom, n, ss, 1.0);
  return out;
}

inline Eigen::VectorXd adjoint_shift(const Eigen::Ref<const Eigen::VectorXd>& v,
                                     int n, const ShiftSet& ss) {
  Eigen::VectorXd out =
      Eigen::VectorXd::Zero(ss.atom_length(static_cast<int>(v.size())));
  add_adjoint_shifted(out, v, n, ss, 1.0);
  return out;
}

// --- unrolled dictionary ----------------------------------------------------

// All shifts of all atoms as explicit columns. Column layout contract:
// column (atom * S + s) = shift shifts()[s] applied to that atom.
struct UnrolledDictionary {
  Eigen::MatrixXd columns;  // signal_len x (K * S)
  int atom_count = 0;
  int shift_count = 0;

  int column_index(int atom, int shift_index) const {
    return atom * shift_count + shift_index;
  }
};

inline UnrolledDictionary unroll(const Dictionary& dict, const ShiftSet& ss,
                                 int signal_len) {
  validate_dictionary(dict, ss, signal_len);
  UnrolledDictionary u;
  u.atom_count = dict.atom_count();
  u.shift_count = ss.count();
  u.columns.resize(signal_len, u.atom_count * u.shift_count);
  u.columns.setZero();
  for (int i = 0; i < u.atom_count; ++i)
    for (int s = 0; s < u.shift_count; ++s)
      add_shifted(u.columns.col(u.column_index(i, s)), dict.atoms.col(i),
                  ss.shifts()[s], ss, 1.0);
  return u;
}

// Sum of shifted atoms weighted by the code, i.e. the model reconstruction.
inline Eigen::VectorXd reconstruct(const Dictionary& dict, const SparseCode& code,
                                   const ShiftSet& ss, int signal_len) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(signal_len);
  for (const auto& e : code.entries)
    add_shifted(out, dict.atoms.col(e.atom), e.shift, ss, e.coeff);
  return out;
}

}  // namespace jadl

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "jadl/random.hpp"
#include "jadl/signal.hpp"

namespace jadl {

// An atom whose update direction collapses below this norm is treated as dead
// and gets reinitialized from the seeded random stream.
inline constexpr double kDeadAtomNorm = 1e-12;

namespace detail {

inline Eigen::VectorXd random_unit_atom(Rng& rng, int len) {
  Eigen::VectorXd a(len);
  for (int i = 0; i < len; ++i) a[i] = rng.normal();
  const double n = a.norm();
  if (n > 0) a /= n;
  return a;
}

// One block-coordinate-descent sweep over atoms, ascending index. residuals
// must hold x_j - reconstruction_j on entry and are kept current. For each
// atom the update direction is the code-weighted adjoint-shifted sum of the
// residuals with that atom excluded; in extended mode the direction is
// rescaled per sample by the coverage weights sum_j a_kj^2 * mask_j (samples
// never covered stay zero), then normalized. Returns the indices of atoms
// that were reinitialized.
inline std::vector<int> dictionary_update_sweep(
    Dictionary& dict, const std::vector<SparseCode>& codes,
    std::vector<Eigen::VectorXd>& residuals, const ShiftSet& ss, Rng& rng) {
  const int atom_count = dict.atom_count();
  const int atom_len = dict.atom_length();
  const int m = static_cast<int>(residuals.size());
  const bool extended = ss.mode() == ShiftMode::extended;
  const int signal_len =
      m > 0 ? static_cast<int>(residuals.front().size()) : 0;

  // occurrences[k] = (signal, shift, coeff) of every signal using atom k
  std::vector<std::vector<std::array<double, 3>>> occurrences(atom_count);
  for (int j = 0; j < m; ++j)
    for (const auto& e : codes[j].entries)
      occurrences[e.atom].push_back(
          {static_cast<double>(j), static_cast<double>(e.shift), e.coeff});

  std::vector<int> reinitialized;
  Eigen::VectorXd direction(atom_len), coverage;
  if (extended) coverage.resize(atom_len);

  for (int k = 0; k < atom_count; ++k) {
    direction.setZero();
    if (extended) coverage.setZero();
    // put atom k back into the residuals, accumulate the update direction
    for (const auto& occ : occurrences[k]) {
      const int j = static_cast<int>(occ[0]);
      const int n = static_cast<int>(occ[1]);
      const double a = occ[2];
      add_shifted(residuals[j], dict.atoms.col(k), n, ss, a);
    }
    for (const auto& occ : occurrences[k]) {
      const int j = static_cast<int>(occ[0]);
      const int n = static_cast<int>(occ[1]);
      const double a = occ[2];
      add_adjoint_shifted(direction, residuals[j], n, ss, a);
      if (extended)
        coverage.segment(n - ss.min_shift(), signal_len).array() += a * a;
    }
    if (extended) {
      for (int t = 0; t < atom_len; ++t)
        direction[t] = coverage[t] > 0.0 ? direction[t] / coverage[t] : 0.0;
    }
    const double norm = direction.norm();
    if (norm < kDeadAtomNorm) {
      dict.atoms.col(k) = random_unit_atom(rng, atom_len);
      reinitialized.push_back(k);
    } else {
      dict.atoms.col(k) = direction / norm;
    }
    // subtract the refreshed atom
    for (const auto& occ : occurrences[k]) {
      const int j = static_cast<int>(occ[0]);
      const int n = static_cast<int>(occ[1]);
      const double a = occ[2];
      add_shifted(residuals[j], dict.atoms.col(k), n, ss, -a);
    }
  }
  return reinitialized;
}

}  // namespace detail

struct DictionaryUpdateResult {
  Dictionary dictionary;
  std::vector<int> reinitialized;
};

// One full sweep of the dictionary-update step for fixed codes. Codes must
// satisfy the one-shift-per-atom constraint. The rng is consumed only when a
// dead atom is reinitialized.
inline DictionaryUpdateResult update_dictionary(
    const std::vector<Signal>& signals, const std::vector<SparseCode>& codes,
    const Dictionary& dict, const ShiftSet& ss, Rng& rng) {
  if (signals.size() != codes.size())
    throw DataError("signal and code counts disagree");
  if (signals.empty()) throw DataError("no signals");
  const int signal_len = signals.front().length();
  validate_dictionary(dict, ss, signal_len);
  std::vector<Eigen::VectorXd> residuals(signals.size());
  for (std::size_t j = 0; j < signals.size(); ++j) {
    if (signals[j].length() != signal_len)
      throw DataError("signals have inconsistent lengths");
    residuals[j] = signals[j].samples -
                   reconstruct(dict, codes[j], ss, signal_len);
  }
  DictionaryUpdateResult out{dict, {}};
  out.reinitialized =
      detail::dictionary_update_sweep(out.dictionary, codes, residuals, ss, rng);
  return out;
}

}  // namespace jadl

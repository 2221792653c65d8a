#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <vector>

#include "jadl/signal.hpp"

namespace jadl {

// Atom-recovery similarity: for each true atom, the maximal absolute
// correlation between a recovered atom and circular shifts of the true atom
// within +-max_shift_s. Atoms are matched greedily by descending similarity
// without replacement.
struct SimilarityReport {
  std::vector<int> matched_recovered;   // per true atom; -1 when unmatched
  std::vector<double> rho;              // per true atom, in [0, 1]
  std::vector<double> rho_sign;         // sign of the best correlation
  std::vector<int> best_shift;          // aligning shift of the best match
  double rho_bar = 0.0;                 // mean over matched true atoms
};

inline SimilarityReport similarity(const Dictionary& recovered,
                                   const Dictionary& truth,
                                   double max_shift_s = 0.6) {
  if (truth.sample_rate <= 0)
    throw ConfigError("similarity needs a positive sample rate on the truth");
  if (recovered.sample_rate > 0 &&
      std::abs(recovered.sample_rate - truth.sample_rate) > 1e-9)
    throw ConfigError("sample rates of the dictionaries disagree");
  const int n = truth.atom_length();
  const int k_true = truth.atom_count();
  const int k_rec = recovered.atom_count();
  if (recovered.atom_length() < n)
    throw DataError("recovered atoms shorter than the true atoms");

  // Extended-domain atoms are compared through their central signal-length
  // window, renormalized.
  Eigen::MatrixXd rec(n, k_rec);
  const int margin = (recovered.atom_length() - n) / 2;
  for (int r = 0; r < k_rec; ++r) {
    rec.col(r) = recovered.atoms.col(r).segment(margin, n);
    const double norm = rec.col(r).norm();
    if (norm > 0) rec.col(r) /= norm;
  }

  const int bound =
      static_cast<int>(std::llround(max_shift_s * truth.sample_rate));
  const ShiftSet search = ShiftSet::symmetric(
      std::min(bound, n / 2), ShiftMode::circular, 1);

  Eigen::MatrixXd best(k_true, k_rec);
  Eigen::MatrixXd best_signed(k_true, k_rec);
  Eigen::MatrixXi best_n(k_true, k_rec);
  for (int t = 0; t < k_true; ++t) {
    for (int r = 0; r < k_rec; ++r) {
      double b = -1.0, bs = 0.0;
      int bn = 0;
      for (int shift : search.shifts()) {
        double corr = 0.0;
        const int k = detail::wrap_shift(shift, n);
        if (k == 0) {
          corr = rec.col(r).dot(truth.atoms.col(t));
        } else {
          corr = rec.col(r).head(k).dot(truth.atoms.col(t).tail(k)) +
                 rec.col(r).tail(n - k).dot(truth.atoms.col(t).head(n - k));
        }
        if (std::abs(corr) > b) {
          b = std::abs(corr);
          bs = corr >= 0 ? 1.0 : -1.0;
          bn = shift;
        }
      }
      best(t, r) = std::min(b, 1.0);
      best_signed(t, r) = bs;
      best_n(t, r) = bn;
    }
  }

  SimilarityReport report;
  report.matched_recovered.assign(k_true, -1);
  report.rho.assign(k_true, 0.0);
  report.rho_sign.assign(k_true, 0.0);
  report.best_shift.assign(k_true, 0);
  std::vector<char> rec_used(k_rec, 0);
  const int matches = std::min(k_true, k_rec);
  for (int round = 0; round < matches; ++round) {
    int bt = -1, br = -1;
    double b = -1.0;
    for (int t = 0; t < k_true; ++t) {
      if (report.matched_recovered[t] >= 0) continue;
      for (int r = 0; r < k_rec; ++r) {
        if (rec_used[r]) continue;
        if (best(t, r) > b) {
          b = best(t, r);
          bt = t;
          br = r;
        }
      }
    }
    report.matched_recovered[bt] = br;
    report.rho[bt] = best(bt, br);
    report.rho_sign[bt] = best_signed(bt, br);
    report.best_shift[bt] = best_n(bt, br);
    rec_used[br] = 1;
  }
  double sum = 0.0;
  for (int t = 0; t < k_true; ++t)
    if (report.matched_recovered[t] >= 0) sum += report.rho[t];
  report.rho_bar = matches > 0 ? sum / matches : 0.0;
  return report;
}

// Mean relative l2 reconstruction error over signals. Zero-norm clean signals
// are excluded; the count of exclusions is reported.
struct DenoiseError {
  double epsilon = 0.0;
  int excluded = 0;
};

inline DenoiseError denoise_error(const std::vector<Signal>& denoised,
                                  const std::vector<Signal>& clean) {
  if (denoised.size() != clean.size())
    throw DataError("denoised and clean counts disagree");
  if (denoised.empty()) throw DataError("no signals");
  double sum = 0.0;
  int used = 0, excluded = 0;
  for (std::size_t j = 0; j < clean.size(); ++j) {
    if (denoised[j].samples.size() != clean[j].samples.size())
      throw DataError("signal lengths disagree");
    const double ref = clean[j].samples.norm();
    if (ref == 0.0) {
      ++excluded;
      continue;
    }
    sum += (denoised[j].samples - clean[j].samples).norm() / ref;
    ++used;
  }
  if (used == 0) throw DataError("all clean signals have zero norm");
  return {sum / used, excluded};
}

// Per-atom code statistics: average energy (mean squared coefficient across
// all signals, atoms being unit norm) and the histogram of used shifts.
struct CodeStats {
  Eigen::VectorXd energy;                        // per atom
  std::vector<std::map<int, int>> latency_hist;  // per atom: shift -> count
};

inline CodeStats code_stats(const std::vector<SparseCode>& codes,
                            int atom_count) {
  if (codes.empty()) throw DataError("no codes");
  CodeStats stats;
  stats.energy = Eigen::VectorXd::Zero(atom_count);
  stats.latency_hist.resize(atom_count);
  for (const auto& code : codes) {
    for (const auto& e : code.entries) {
      if (e.atom < 0 || e.atom >= atom_count)
        throw DataError("code entry references an unknown atom");
      stats.energy[e.atom] += e.coeff * e.coeff;
      ++stats.latency_hist[e.atom][e.shift];
    }
  }
  stats.energy /= static_cast<double>(codes.size());
  return stats;
}

}  // namespace jadl

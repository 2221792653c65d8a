#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <vector>

#include "jadl/signal.hpp"

namespace jadl {

// Principal components of a signal set, descending explained variance.
// centered == false fits on the raw signals (mean stays zero), the variant
// used for strict method comparisons.
struct PcaModel {
  Eigen::MatrixXd components;  // signal_len x rank, orthonormal columns
  Eigen::VectorXd mean;
  Eigen::VectorXd variances;  // non-increasing, >= 0
  bool centered = true;
  double sample_rate = 0.0;

  int rank() const { return static_cast<int>(components.cols()); }
};

inline PcaModel fit_pca(const std::vector<Signal>& signals, bool centered = true) {
  if (signals.size() < 2) throw ConfigError("PCA needs at least two signals");
  const int n = signals.front().length();
  const int m = static_cast<int>(signals.size());
  Eigen::MatrixXd x(n, m);
  for (int j = 0; j < m; ++j) {
    validate_signal(signals[j]);
    if (signals[j].length() != n)
      throw DataError("signals have inconsistent lengths");
    x.col(j) = signals[j].samples;
  }

  PcaModel model;
  model.centered = centered;
  model.sample_rate = signals.front().sample_rate;
  model.mean = centered ? Eigen::VectorXd(x.rowwise().mean())
                        : Eigen::VectorXd(Eigen::VectorXd::Zero(n));
  const double input_scale = x.squaredNorm() / static_cast<double>(m);
  if (centered) x.colwise() -= model.mean;

  const Eigen::MatrixXd cov = (x * x.transpose()) / static_cast<double>(m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success)
    throw NumericalError("eigendecomposition failed");

  // Degenerate directions are truncated: keep eigenvalues that are a
  // meaningful fraction of the largest and of the raw input scale (variance
  // that is pure cancellation noise of the centering does not count).
  const double scale = input_scale;
  const double lambda_max = eig.eigenvalues().maxCoeff();
  const double cutoff = std::max(lambda_max * 1e-10, scale * 1e-24);

  std::vector<int> keep;
  for (int i = n - 1; i >= 0; --i)  // solver sorts ascending
    if (eig.eigenvalues()[i] > cutoff) keep.push_back(i);

  const int rank = static_cast<int>(keep.size());
  model.components.resize(n, rank);
  model.variances.resize(rank);
  for (int r = 0; r < rank; ++r) {
    Eigen::VectorXd comp = eig.eigenvectors().col(keep[r]);
    // deterministic sign: the largest-magnitude entry is positive
    int arg = 0;
    double best = std::abs(comp[0]);
    for (int i = 1; i < n; ++i)
      if (std::abs(comp[i]) > best) {
        best = std::abs(comp[i]);
        arg = i;
      }
    if (comp[arg] < 0) comp = -comp;
    model.components.col(r) = comp;
    model.variances[r] = std::max(eig.eigenvalues()[keep[r]], 0.0);
  }
  return model;
}

// Projection onto the span of the first k components (plus the mean).
// k beyond the model rank is clamped.
inline Signal pca_denoise(const PcaModel& model, const Signal& signal, int k) {
  if (k < 0) throw ConfigError("component count must be >= 0");
  if (signal.samples.size() != model.mean.size())
    throw DataError("signal length does not match the PCA model");
  k = std::min(k, model.rank());
  Signal out;
  out.sample_rate = signal.sample_rate;
  const Eigen::VectorXd centered = signal.samples - model.mean;
  out.samples = model.mean;
  if (k > 0) {
    const auto comps = model.components.leftCols(k);
    out.samples += comps * (comps.transpose() * centered);
  }
  return out;
}

// PCA components reinterpreted as a dictionary (first k components).
inline Dictionary pca_dictionary(const PcaModel& model, int k) {
  k = std::min(k, model.rank());
  if (k < 1) throw ConfigError("PCA dictionary needs at least one component");
  Dictionary d;
  d.mode = ShiftMode::circular;
  d.sample_rate = model.sample_rate;
  d.atoms = model.components.leftCols(k);
  return d;
}

}  // namespace jadl

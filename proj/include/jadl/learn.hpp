#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "jadl/dict_update.hpp"
#include "jadl/lars.hpp"
#include "jadl/parallel.hpp"
#include "jadl/random.hpp"
#include "jadl/signal.hpp"

namespace jadl {

enum class DictInit { random, provided };

struct LearnConfig {
  int atom_count = 1;
  double lambda = 0.0;
  ShiftSet shifts;  // identity by default => plain dictionary learning
  int max_iters = 200;
  double tol = 1e-6;  // relative objective-change stopping threshold
  std::uint64_t seed = 0;
  DictInit init = DictInit::random;
  Dictionary initial_dictionary;  // used when init == provided
  int fft_threshold = kFftShiftThreshold;
  int threads = 0;  // 0 => thread_budget()
};

struct LearnResult {
  Dictionary dictionary;
  std::vector<SparseCode> codes;
  std::vector<double> objective_history;         // after each full iteration
  std::vector<double> coding_objective_history;  // after coding, before update
  std::vector<double> quadratic_before_update;
  std::vector<double> quadratic_after_update;
  int iterations_run = 0;
  std::vector<std::pair<int, int>> reinitialized_atoms;  // (iteration, atom)
};

inline void validate_learn_config(const LearnConfig& cfg) {
  if (cfg.atom_count < 1) throw ConfigError("atom count must be >= 1");
  if (cfg.max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (!(cfg.tol > 0)) throw ConfigError("tol must be > 0");
  if (cfg.lambda < 0) throw ConfigError("lambda must be >= 0");
}

namespace detail {

inline Dictionary initialize_dictionary(const LearnConfig& cfg, int signal_len,
                                        double sample_rate, Rng& rng) {
  validate_learn_config(cfg);
  cfg.shifts.validate_for_signal_length(signal_len);
  if (cfg.init == DictInit::provided) {
    Dictionary d = cfg.initial_dictionary;
    d.sample_rate = sample_rate;
    if (d.atom_count() != cfg.atom_count)
      throw ConfigError("provided dictionary has wrong atom count");
    validate_dictionary(d, cfg.shifts, signal_len);
    return d;
  }
  Dictionary d;
  d.mode = cfg.shifts.mode();
  d.sample_rate = sample_rate;
  const int atom_len = cfg.shifts.atom_length(signal_len);
  d.atoms.resize(atom_len, cfg.atom_count);
  for (int k = 0; k < cfg.atom_count; ++k)
    d.atoms.col(k) = random_unit_atom(rng, atom_len);
  return d;
}

}  // namespace detail

// Seeded dictionary initialization: i.i.d. standard normal entries per atom,
// normalized. Draws the head of the stream seeded by cfg.seed, so learn()
// with the same seed starts from the same dictionary. A provided dictionary
// is validated instead of drawn.
inline Dictionary init_dictionary(const LearnConfig& cfg, int signal_len,
                                  double sample_rate) {
  Rng rng(cfg.seed);
  return detail::initialize_dictionary(cfg, signal_len, sample_rate, rng);
}

// Value of the learning objective for a full model state:
// sum_j 0.5 * ||x_j - reconstruction_j||^2 + lambda * ||a_j||_1.
inline double objective(const std::vector<Signal>& signals,
                        const Dictionary& dict,
                        const std::vector<SparseCode>& codes,
                        const ShiftSet& ss, double lambda) {
  if (signals.size() != codes.size())
    throw DataError("signal and code counts disagree");
  double out = 0.0;
  for (std::size_t j = 0; j < signals.size(); ++j) {
    const Eigen::VectorXd resid =
        signals[j].samples -
        reconstruct(dict, codes[j], ss, signals[j].length());
    out += 0.5 * resid.squaredNorm() + lambda * codes[j].l1();
  }
  return out;
}

// Alternating minimization: constrained sparse coding of every signal against
// the current dictionary, then one block-coordinate dictionary-update sweep,
// until the relative objective change drops below tol or max_iters is
// reached. Deterministic for a fixed seed regardless of the thread count.
inline LearnResult learn(const std::vector<Signal>& signals,
                         const LearnConfig& cfg) {
  validate_learn_config(cfg);
  if (signals.empty()) throw DataError("no signals to learn from");
  const int signal_len = signals.front().length();
  for (const auto& s : signals) {
    validate_signal(s);
    if (s.length() != signal_len)
      throw DataError("signals have inconsistent lengths");
  }
  cfg.shifts.validate_for_signal_length(signal_len);

  const double sample_rate = signals.front().sample_rate;
  const int m = static_cast<int>(signals.size());

  LearnResult result;
  Rng rng(cfg.seed);
  result.dictionary =
      detail::initialize_dictionary(cfg, signal_len, sample_rate, rng);

  result.codes.assign(m, SparseCode{});
  std::vector<Eigen::VectorXd> residuals(m);
  double prev_objective = std::numeric_limits<double>::quiet_NaN();

  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    const CorrelationEngine engine(result.dictionary, cfg.shifts, signal_len,
                                   cfg.fft_threshold);
    const bool have_previous = iter > 1;
    parallel_for(
        m,
        [&](int j) {
          auto solved = jitter_sparse_code(signals[j].samples, engine, cfg.lambda);
          if (have_previous) {
            // Coding is non-convex; a fresh solve can land in a worse local
            // minimum than the previous iterate. Keep the better of the two
            // so the coding step never increases the objective.
            const Eigen::VectorXd prev_residual =
                signals[j].samples -
                reconstruct(result.dictionary, result.codes[j], cfg.shifts,
                            signal_len);
            const double prev_obj = 0.5 * prev_residual.squaredNorm() +
                                    cfg.lambda * result.codes[j].l1();
            const double new_obj = 0.5 * solved.residual.squaredNorm() +
                                   cfg.lambda * solved.code.l1();
            if (prev_obj < new_obj) {
              residuals[j] = prev_residual;
              return;
            }
          }
          result.codes[j] = std::move(solved.code);
          residuals[j] = std::move(solved.residual);
        },
        cfg.threads);

    double l1 = 0.0, quad = 0.0;
    for (int j = 0; j < m; ++j) {
      l1 += result.codes[j].l1();
      quad += 0.5 * residuals[j].squaredNorm();
    }
    const double coding_objective = quad + cfg.lambda * l1;
    result.coding_objective_history.push_back(coding_objective);
    result.quadratic_before_update.push_back(quad);

    const auto reinit = detail::dictionary_update_sweep(
        result.dictionary, result.codes, residuals, cfg.shifts, rng);
    for (int k : reinit) result.reinitialized_atoms.emplace_back(iter, k);

    double quad_after = 0.0;
    for (int j = 0; j < m; ++j) quad_after += 0.5 * residuals[j].squaredNorm();
    result.quadratic_after_update.push_back(quad_after);
    const double obj = quad_after + cfg.lambda * l1;
    result.objective_history.push_back(obj);
    result.iterations_run = iter;

    if (!std::isfinite(obj))
      throw NumericalError("non-finite objective at iteration " +
                           std::to_string(iter));
    if (iter > 1) {
      const double denom = std::max(std::abs(prev_objective),
                                    std::numeric_limits<double>::min());
      if (std::abs(obj - prev_objective) / denom < cfg.tol) break;
    }
    prev_objective = obj;
  }
  return result;
}

}  // namespace jadl

#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

#include "jadl/correlate.hpp"
#include "jadl/signal.hpp"

namespace jadl {

// min_a 0.5 * ||target - design * a||^2 + lambda * ||a||_1
struct LassoProblem {
  Eigen::MatrixXd design;  // columns = candidate atoms
  Eigen::VectorXd target;
  double lambda = 0.0;
};

enum class SolverEventKind { activate, deactivate, rank_drop };

inline const char* to_string(SolverEventKind k) {
  switch (k) {
    case SolverEventKind::activate: return "activate";
    case SolverEventKind::deactivate: return "deactivate";
    default: return "rank_drop";
  }
}

struct SolverEvent {
  int step = 0;
  SolverEventKind kind = SolverEventKind::activate;
  int column = 0;
  double lambda = 0.0;         // breakpoint at which the event fired
  double residual_norm = 0.0;  // ||target - design * a|| at the breakpoint
};

struct SolverTrace {
  std::vector<SolverEvent> events;
  double final_residual_norm = 0.0;
  int activations = 0;
  int deactivations = 0;
  bool truncated = false;  // safety cap on events was hit
};

struct LarsOptions {
  int max_activations = -1;   // < 0: unbounded (requires lambda > 0)
  int max_events = -1;        // < 0: automatic safety cap
  double gamma_tol = 1e-12;   // relative minimum advance counted as an event
  double gram_jitter = 1e-10; // diagonal jitter when the Cholesky fails
};

namespace detail {

// Column oracle over a dense matrix; every column is its own group.
struct DenseColumnOracle {
  const Eigen::MatrixXd* a = nullptr;

  int cols() const { return static_cast<int>(a->cols()); }
  int rows() const { return static_cast<int>(a->rows()); }
  int group_count() const { return cols(); }
  int group(int j) const { return j; }
  void correlations(const Eigen::Ref<const Eigen::VectorXd>& v,
                    Eigen::VectorXd& out) const {
    out.noalias() = a->transpose() * v;
  }
  void step_correlations(const Eigen::Ref<const Eigen::VectorXd>& v,
                         Eigen::VectorXd& out) const {
    correlations(v, out);
  }
  void column(int j, Eigen::Ref<Eigen::VectorXd> out) const { out = a->col(j); }
};

// Column oracle over the implicit unrolled dictionary. Groups are atoms, so
// the blocking rule keeps at most one shift of each atom active. Initial
// correlations may use the engine's FFT path; the per-step direction
// correlations use direct dot products (cost O(K*S*N) per step).
struct UnrolledColumnOracle {
  const CorrelationEngine* engine = nullptr;

  int cols() const { return engine->column_count(); }
  int rows() const { return engine->signal_length(); }
  int group_count() const { return engine->atom_count(); }
  int group(int j) const { return j / engine->shift_count(); }
  void correlations(const Eigen::Ref<const Eigen::VectorXd>& v,
                    Eigen::VectorXd& out) const {
    engine->correlations(v, out);
  }
  void step_correlations(const Eigen::Ref<const Eigen::VectorXd>& v,
                         Eigen::VectorXd& out) const {
    engine->correlations_direct(v, out);
  }
  void column(int j, Eigen::Ref<Eigen::VectorXd> out) const {
    engine->column(j, out);
  }
};

// LARS homotopy for the Lasso path with deactivations (the Lasso
// modification) plus group blocking: while some column of a group is active,
// the other columns of that group are not candidates; when it deactivates the
// whole group becomes eligible again. With singleton groups this is plain
// LARS-Lasso. The path is followed from lambda_max down to opt_lambda and the
// coefficients at the target are returned.
template <typename Oracle>
inline void lars_path(const Oracle& oracle, const Eigen::VectorXd& target,
                      double lambda, const LarsOptions& opt,
                      Eigen::VectorXd& coeffs, SolverTrace& trace,
                      Eigen::VectorXd& residual) {
  if (lambda < 0) throw ConfigError("lambda must be >= 0");
  if (lambda == 0 && opt.max_activations < 0)
    throw ConfigError("lambda == 0 requires a max-activations bound");
  const int cols = oracle.cols();
  const int rows = oracle.rows();
  const int max_events =
      opt.max_events > 0 ? opt.max_events : 10 * cols + 64;

  coeffs = Eigen::VectorXd::Zero(cols);
  residual = target;
  Eigen::VectorXd c(cols);
  oracle.correlations(target, c);

  std::vector<int> group_active(oracle.group_count(), -1);
  std::vector<char> is_active(cols, 0), excluded(cols, 0);
  std::vector<int> act;        // active columns in activation order
  std::vector<double> sgn;     // sign of the correlation at activation
  Eigen::MatrixXd acols(rows, 0), gram(0, 0);

  const auto eligible = [&](int j) {
    return !is_active[j] && !excluded[j] && group_active[oracle.group(j)] < 0;
  };
  // Lowest column index wins ties (strict > while scanning ascending).
  const auto best_candidate = [&]() {
    int bj = -1;
    double best = 0.0;
    for (int j = 0; j < cols; ++j)
      if (eligible(j) && std::abs(c[j]) > best) {
        best = std::abs(c[j]);
        bj = j;
      }
    return bj;
  };

  double lam_cur = 0.0;
  int step = 0;

  const auto record = [&](SolverEventKind kind, int column) {
    trace.events.push_back(
        {step, kind, column, lam_cur, residual.norm()});
  };
  const auto activate = [&](int j) {
    const int m = static_cast<int>(act.size());
    acols.conservativeResize(Eigen::NoChange, m + 1);
    acols.col(m).setZero();
    oracle.column(j, acols.col(m));
    gram.conservativeResize(m + 1, m + 1);
    if (m > 0) {
      gram.block(0, m, m, 1).noalias() =
          acols.leftCols(m).transpose() * acols.col(m);
      gram.block(m, 0, 1, m) = gram.block(0, m, m, 1).transpose();
    }
    gram(m, m) = acols.col(m).squaredNorm();
    act.push_back(j);
    sgn.push_back(c[j] >= 0 ? 1.0 : -1.0);
    is_active[j] = 1;
    group_active[oracle.group(j)] = j;
    ++trace.activations;
    record(SolverEventKind::activate, j);
  };
  const auto remove_active = [&](int pos) {
    const int m = static_cast<int>(act.size());
    const int j = act[pos];
    for (int q = pos; q + 1 < m; ++q) {
      acols.col(q) = acols.col(q + 1);
      act[q] = act[q + 1];
      sgn[q] = sgn[q + 1];
    }
    acols.conservativeResize(Eigen::NoChange, m - 1);
    act.pop_back();
    sgn.pop_back();
    // rebuild the Gram rows/cols without position pos
    Eigen::MatrixXd g(m - 1, m - 1);
    for (int r = 0, rr = 0; r < m; ++r) {
      if (r == pos) continue;
      for (int col2 = 0, cc = 0; col2 < m; ++col2) {
        if (col2 == pos) continue;
        g(rr, cc++) = gram(r, col2);
      }
      ++rr;
    }
    gram = std::move(g);
    is_active[j] = 0;
    group_active[oracle.group(j)] = -1;
  };

  // first activation
  {
    const int j0 = best_candidate();
    const double lam0 = j0 >= 0 ? std::abs(c[j0]) : 0.0;
    if (j0 < 0 || lam0 <= lambda) {
      trace.final_residual_norm = residual.norm();
      return;
    }
    lam_cur = lam0;
    activate(j0);
  }

  Eigen::VectorXd w, v(rows), u(cols);
  while (true) {
    if (++step > max_events) {
      trace.truncated = true;
      break;
    }
    const int m = static_cast<int>(act.size());
    const Eigen::Map<const Eigen::VectorXd> s(sgn.data(), m);

    // Direction solve with the rank guard: jittered retry, then drop the
    // newest column if the system is still inconsistent.
    bool degenerate = false;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) {
      Eigen::MatrixXd jittered = gram;
      jittered.diagonal().array() += opt.gram_jitter;
      llt.compute(jittered);
      degenerate = llt.info() != Eigen::Success;
    }
    if (!degenerate) {
      w = llt.solve(s);
      const double resid_inf = (gram * w - s).lpNorm<Eigen::Infinity>();
      degenerate = !(resid_inf <= 1e-6 * std::max(1.0, s.lpNorm<Eigen::Infinity>()));
    }
    if (degenerate) {
      const int victim = act.back();
      record(SolverEventKind::rank_drop, victim);
      remove_active(static_cast<int>(act.size()) - 1);
      excluded[victim] = 1;
      if (act.empty()) {
        const int jn = best_candidate();
        if (jn < 0 || std::abs(c[jn]) <= lambda) break;
        lam_cur = std::abs(c[jn]);
        activate(jn);
      }
      continue;
    }

    v.noalias() = acols * w;
    oracle.step_correlations(v, u);

    // For active columns u == sign by construction, so every |c| of the
    // active set decreases at unit rate and lambda(gamma) = lam_cur - gamma.
    const double gamma_target = lam_cur - lambda;
    const double gamma_min = opt.gamma_tol * std::max(1.0, lam_cur);
    double gamma = gamma_target;
    int kind = 0;  // 0 = reach target, 1 = activate, 2 = deactivate
    int who = -1, who_pos = -1;

    const bool may_activate =
        opt.max_activations < 0 || trace.activations < opt.max_activations;
    if (may_activate) {
      for (int j = 0; j < cols; ++j) {
        if (!eligible(j)) continue;
        const double d1 = 1.0 - u[j];
        if (d1 > 1e-12) {
          const double g = (lam_cur - c[j]) / d1;
          if (g > gamma_min && g < gamma) {
            gamma = g;
            kind = 1;
            who = j;
          }
        }
        const double d2 = 1.0 + u[j];
        if (d2 > 1e-12) {
          const double g = (lam_cur + c[j]) / d2;
          if (g > gamma_min && g < gamma) {
            gamma = g;
            kind = 1;
            who = j;
          }
        }
      }
    }
    // Zero crossings of active coefficients; on a tie the drop wins.
    for (int p = 0; p < m; ++p) {
      const double a = coeffs[act[p]];
      const double wp = w[p];
      if (a * wp < 0.0) {
        const double g = -a / wp;
        if (g > 0.0 && g <= gamma) {
          gamma = g;
          kind = 2;
          who = act[p];
          who_pos = p;
        }
      }
    }

    for (int p = 0; p < m; ++p) coeffs[act[p]] += gamma * w[p];
    residual.noalias() -= gamma * v;
    c.noalias() -= gamma * u;
    lam_cur -= gamma;

    if (kind == 0) break;
    if (kind == 2) {
      coeffs[who] = 0.0;
      ++trace.deactivations;
      record(SolverEventKind::deactivate, who);
      remove_active(who_pos);
      if (act.empty()) {
        // Everything is back at zero; the path restarts at the next-largest
        // correlation.
        const int jn = best_candidate();
        if (jn < 0 || std::abs(c[jn]) <= lambda) break;
        lam_cur = std::min(lam_cur, std::abs(c[jn]));
        activate(jn);
      }
      continue;
    }
    activate(who);
  }
  trace.final_residual_norm = residual.norm();
}

}  // namespace detail

struct LarsResult {
  Eigen::VectorXd coefficients;
  SolverTrace trace;
  Eigen::VectorXd residual;
};

// Lasso via the LARS homotopy. Stationarity at the returned point: active
// columns have <col, residual> == lambda * sign(coef); inactive columns have
// |<col, residual>| <= lambda (to solver slack).
inline LarsResult lars_lasso(const LassoProblem& problem,
                             const LarsOptions& opt = {}) {
  if (problem.design.rows() != problem.target.size())
    throw DataError("design and target dimensions disagree");
  if (!problem.design.allFinite() || !problem.target.allFinite())
    throw DataError("lasso problem has non-finite entries");
  detail::DenseColumnOracle oracle{&problem.design};
  LarsResult r;
  detail::lars_path(oracle, problem.target, problem.lambda, opt,
                    r.coefficients, r.trace, r.residual);
  return r;
}

struct JitterCodeResult {
  SparseCode code;
  SolverTrace trace;
  Eigen::VectorXd residual;
};

// Constrained sparse coding over all shifts of all atoms: Lasso over the
// unrolled dictionary subject to at most one active shift per atom, solved by
// LARS with the group blocking rule. When a shift of an atom activates, the
// atom's other shifts become ineligible; they are unblocked if it
// deactivates. With the identity shift set this reduces to the plain Lasso
// over the dictionary.
inline JitterCodeResult jitter_sparse_code(const Eigen::Ref<const Eigen::VectorXd>& signal,
                                           const CorrelationEngine& engine,
                                           double lambda,
                                           LarsOptions opt = {}) {
  if (signal.size() != engine.signal_length())
    throw DataError("signal length does not match the engine");
  if (lambda == 0 && opt.max_activations < 0)
    opt.max_activations = engine.atom_count();
  detail::UnrolledColumnOracle oracle{&engine};
  JitterCodeResult r;
  Eigen::VectorXd coeffs;
  detail::lars_path(oracle, signal, lambda, opt, coeffs, r.trace, r.residual);
  const int s_count = engine.shift_count();
  for (int j = 0; j < coeffs.size(); ++j)
    if (coeffs[j] != 0.0)
      r.code.entries.push_back(
          {static_cast<int>(j) / s_count, engine.column_shift(j), coeffs[j]});
  std::sort(r.code.entries.begin(), r.code.entries.end(),
            [](const CodeEntry& a, const CodeEntry& b) { return a.atom < b.atom; });
  return r;
}

inline JitterCodeResult jitter_sparse_code(const Signal& signal,
                                           const Dictionary& dict,
                                           const ShiftSet& shifts, double lambda,
                                           const LarsOptions& opt = {}) {
  validate_signal(signal);
  CorrelationEngine engine(dict, shifts, signal.length());
  return jitter_sparse_code(signal.samples, engine, lambda, opt);
}

}  // namespace jadl

#include <catch2/catch.hpp>

#include "jadl/learn.hpp"
#include "jadl/metrics.hpp"
#include "jadl/synth.hpp"
#include "support/test_util.hpp"

using namespace jadl;

namespace {

SynthConfig small_noiseless() {
  SynthConfig cfg;
  cfg.signal_len = 256;
  cfg.sample_rate = 64.0;
  cfg.signal_count = 40;
  cfg.shift_stddev_s = 0.1;
  cfg.shift_bound_s = 0.2;
  cfg.max_spurious_events = 0;
  cfg.target_snr = std::numeric_limits<double>::infinity();
  cfg.spike_center_s = 2.0;
  cfg.osc_freq1_hz = 5.0;
  cfg.osc_freq2_hz = 9.0;
  cfg.osc_center1_s = 1.2;
  cfg.osc_center2_s = 2.8;
  cfg.seed = 17;
  return cfg;
}

bool identical(const LearnResult& a, const LearnResult& b) {
  if (a.dictionary.atoms != b.dictionary.atoms) return false;
  if (a.objective_history != b.objective_history) return false;
  if (a.codes.size() != b.codes.size()) return false;
  for (std::size_t j = 0; j < a.codes.size(); ++j) {
    if (a.codes[j].entries.size() != b.codes[j].entries.size()) return false;
    for (std::size_t e = 0; e < a.codes[j].entries.size(); ++e) {
      const auto& x = a.codes[j].entries[e];
      const auto& y = b.codes[j].entries[e];
      if (x.atom != y.atom || x.shift != y.shift || x.coeff != y.coeff)
        return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("learning is deterministic for a fixed seed and thread count",
          "[learn]") {
  const auto cfg = small_noiseless();
  const auto gt = generate(cfg);
  LearnConfig lc;
  lc.atom_count = 3;
  lc.lambda = 0.01;
  lc.shifts = ShiftSet::from_seconds(0.2, cfg.sample_rate, ShiftMode::circular);
  lc.max_iters = 8;
  lc.seed = 5;

  lc.threads = 1;
  const auto serial = learn(gt.noisy, lc);
  const auto serial2 = learn(gt.noisy, lc);
  REQUIRE(identical(serial, serial2));

  lc.threads = 4;
  const auto threaded = learn(gt.noisy, lc);
  REQUIRE(identical(serial, threaded));
}

TEST_CASE("init_dictionary is seeded and validates provided atoms", "[learn]") {
  LearnConfig lc;
  lc.atom_count = 4;
  lc.shifts = ShiftSet::symmetric(3, ShiftMode::circular);
  lc.seed = 9;
  const auto d1 = init_dictionary(lc, 32, 100.0);
  const auto d2 = init_dictionary(lc, 32, 100.0);
  REQUIRE(d1.atoms == d2.atoms);
  for (int k = 0; k < 4; ++k)
    REQUIRE(d1.atoms.col(k).norm() == Approx(1.0).epsilon(1e-12));
  // random atoms are pairwise strictly incoherent
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b)
      REQUIRE(std::abs(d1.atoms.col(a).dot(d1.atoms.col(b))) < 1.0 - 1e-6);

  Rng rng(1);
  lc.init = DictInit::provided;
  lc.initial_dictionary = testing::random_dictionary(rng, 32, 3, ShiftMode::circular);
  REQUIRE_THROWS_AS(init_dictionary(lc, 32, 100.0), ConfigError);  // wrong K
  lc.initial_dictionary = testing::random_dictionary(rng, 32, 4, ShiftMode::circular);
  lc.initial_dictionary.atoms.col(0) *= 2.0;
  REQUIRE_THROWS_AS(init_dictionary(lc, 32, 100.0), ConfigError);  // not unit
  lc.initial_dictionary.atoms.col(0) /= 2.0;
  REQUIRE_NOTHROW(init_dictionary(lc, 32, 100.0));
}

TEST_CASE("noiseless signals from a known dictionary are identified", "[learn]") {
  SynthConfig cfg;  // benchmark-default atoms and window
  cfg.signal_count = 60;
  cfg.max_spurious_events = 0;
  cfg.target_snr = std::numeric_limits<double>::infinity();
  cfg.seed = 3;
  const auto gt = generate(cfg);
  LearnConfig lc;
  lc.atom_count = 3;
  lc.lambda = 0.001;
  lc.shifts = ShiftSet::from_seconds(cfg.shift_bound_s, cfg.sample_rate,
                                     ShiftMode::circular);
  lc.max_iters = 120;
  lc.tol = 1e-8;
  lc.seed = 11;
  const auto res = learn(gt.noisy, lc);
  const auto sim = similarity(res.dictionary, gt.true_dictionary, 0.6);
  REQUIRE(sim.rho_bar > 0.99);
}

TEST_CASE("objective history is finite, recorded per iteration, and matches "
          "the objective helper",
          "[learn]") {
  auto cfg = small_noiseless();
  cfg.target_snr = 0.79;
  cfg.max_spurious_events = 3;
  const auto gt = generate(cfg);
  LearnConfig lc;
  lc.atom_count = 3;
  lc.lambda = 0.02;
  lc.shifts = ShiftSet::from_seconds(0.2, cfg.sample_rate, ShiftMode::circular);
  lc.max_iters = 12;
  lc.seed = 3;
  const auto res = learn(gt.noisy, lc);
  REQUIRE(res.iterations_run == static_cast<int>(res.objective_history.size()));
  for (double v : res.objective_history) REQUIRE(std::isfinite(v));
  const double recomputed =
      objective(gt.noisy, res.dictionary, res.codes, lc.shifts, lc.lambda);
  REQUIRE(res.objective_history.back() ==
          Approx(recomputed).epsilon(1e-8));
}

TEST_CASE("both alternation steps descend their own subproblem", "[learn]") {
  auto cfg = small_noiseless();
  cfg.target_snr = 0.79;
  cfg.max_spurious_events = 3;
  cfg.seed = 21;
  const auto gt = generate(cfg);
  LearnConfig lc;
  lc.atom_count = 3;
  lc.lambda = 0.01;
  lc.shifts = ShiftSet::from_seconds(0.2, cfg.sample_rate, ShiftMode::circular);
  lc.max_iters = 25;
  lc.seed = 4;
  const auto res = learn(gt.noisy, lc);
  for (int t = 0; t < res.iterations_run; ++t) {
    const double slack =
        1e-8 * std::max(1.0, std::abs(res.objective_history[t]));
    // dictionary sweep: quadratic term cannot increase for fixed codes
    REQUIRE(res.quadratic_after_update[t] <=
            res.quadratic_before_update[t] + slack);
    // coding step: new codes cannot be worse than the previous iterate
    if (t > 0)
      REQUIRE(res.coding_objective_history[t] <=
              res.objective_history[t - 1] + slack);
  }
}

TEST_CASE("shifting all inputs by a constant leaves the learning path "
          "unchanged",
          "[learn]") {
  // Equivariance needs the shift set closed under composition with the
  // applied shift; modulo the signal length, the full circle of shifts is.
  const int n = 64;
  const auto ss = ShiftSet::symmetric(n / 2, ShiftMode::circular);
  Rng rng(88);
  std::vector<Signal> signals(10);
  for (auto& s : signals) {
    s.sample_rate = 32.0;
    s.samples = testing::random_vector(rng, n);
  }

  LearnConfig lc;
  lc.atom_count = 2;
  lc.lambda = 0.05;
  lc.shifts = ss;
  lc.max_iters = 6;
  lc.tol = 1e-12;
  lc.seed = 8;

  const auto base = learn(signals, lc);

  const int n0 = 4;
  std::vector<Signal> shifted(signals.size());
  for (std::size_t j = 0; j < signals.size(); ++j) {
    shifted[j].sample_rate = signals[j].sample_rate;
    shifted[j].samples = apply_shift(signals[j].samples, n0, ss, n);
  }
  const auto moved = learn(shifted, lc);

  REQUIRE(moved.objective_history.size() == base.objective_history.size());
  for (std::size_t t = 0; t < base.objective_history.size(); ++t)
    REQUIRE(moved.objective_history[t] ==
            Approx(base.objective_history[t]).epsilon(1e-8));
  REQUIRE((moved.dictionary.atoms - base.dictionary.atoms)
              .lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("learn validates inputs", "[learn]") {
  LearnConfig lc;
  lc.atom_count = 1;
  REQUIRE_THROWS_AS(learn({}, lc), DataError);

  std::vector<Signal> bad(1);
  bad[0].samples = Eigen::VectorXd::Constant(8, std::nan(""));
  REQUIRE_THROWS_AS(learn(bad, lc), DataError);

  std::vector<Signal> ragged(2);
  ragged[0].samples = Eigen::VectorXd::Zero(8);
  ragged[1].samples = Eigen::VectorXd::Zero(9);
  REQUIRE_THROWS_AS(learn(ragged, lc), DataError);

  LearnConfig bad_cfg;
  bad_cfg.atom_count = 0;
  REQUIRE_THROWS_AS(learn(ragged, bad_cfg), ConfigError);
}

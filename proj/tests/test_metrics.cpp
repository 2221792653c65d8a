#include <catch2/catch.hpp>

#include "jadl/metrics.hpp"
#include "jadl/synth.hpp"
#include "support/test_util.hpp"

using namespace jadl;

TEST_CASE("similarity of a dictionary with itself is one", "[metrics]") {
  const auto truth = make_true_dictionary(SynthConfig{});
  const auto report = similarity(truth, truth, 0.6);
  REQUIRE(report.rho_bar == Approx(1.0).epsilon(1e-12));
  for (int t = 0; t < 3; ++t) {
    REQUIRE(report.rho[t] == Approx(1.0).epsilon(1e-12));
    REQUIRE(report.matched_recovered[t] == t);
    REQUIRE(report.best_shift[t] == 0);
  }
}

TEST_CASE("similarity searches shifts and ignores sign and order", "[metrics]") {
  const SynthConfig cfg;
  const auto truth = make_true_dictionary(cfg);
  const auto ss = ShiftSet::symmetric(64, ShiftMode::circular);

  Dictionary recovered = truth;
  // permute atoms, shift each by 0.3 s, flip one sign
  const int n0 = static_cast<int>(0.3 * cfg.sample_rate);
  recovered.atoms.col(0) = apply_shift(truth.atoms.col(2), n0, ss, cfg.signal_len);
  recovered.atoms.col(1) = -apply_shift(truth.atoms.col(0), -n0, ss, cfg.signal_len);
  recovered.atoms.col(2) = apply_shift(truth.atoms.col(1), n0, ss, cfg.signal_len);

  const auto report = similarity(recovered, truth, 0.6);
  REQUIRE(report.rho_bar == Approx(1.0).epsilon(1e-10));
  REQUIRE(report.matched_recovered == std::vector<int>{1, 2, 0});
  REQUIRE(report.rho_sign[0] == -1.0);
}

TEST_CASE("similarity matches greedily without replacement and handles a "
          "small recovered set",
          "[metrics]") {
  const auto truth = make_true_dictionary(SynthConfig{});
  Dictionary recovered = truth;
  recovered.atoms = truth.atoms.leftCols(2);
  const auto report = similarity(recovered, truth, 0.6);
  int matched = 0;
  for (int t = 0; t < 3; ++t)
    if (report.matched_recovered[t] >= 0) ++matched;
  REQUIRE(matched == 2);
  REQUIRE(report.rho_bar == Approx(1.0).epsilon(1e-10));
}

TEST_CASE("denoise error is zero on clean and one on zero output", "[metrics]") {
  Rng rng(61);
  std::vector<Signal> clean(5), zeros(5);
  for (int j = 0; j < 5; ++j) {
    clean[j].samples = testing::random_vector(rng, 16);
    zeros[j].samples = Eigen::VectorXd::Zero(16);
  }
  REQUIRE(denoise_error(clean, clean).epsilon == 0.0);
  REQUIRE(denoise_error(zeros, clean).epsilon == Approx(1.0));
}

TEST_CASE("zero-norm clean signals are excluded with a count", "[metrics]") {
  Rng rng(62);
  std::vector<Signal> clean(3), den(3);
  clean[0].samples = Eigen::VectorXd::Zero(8);
  clean[1].samples = testing::random_vector(rng, 8);
  clean[2].samples = testing::random_vector(rng, 8);
  for (int j = 0; j < 3; ++j) den[j] = clean[j];
  const auto err = denoise_error(den, clean);
  REQUIRE(err.excluded == 1);
  REQUIRE(err.epsilon == 0.0);

  std::vector<Signal> allzero(1), d(1);
  allzero[0].samples = Eigen::VectorXd::Zero(4);
  d[0].samples = Eigen::VectorXd::Zero(4);
  REQUIRE_THROWS_AS(denoise_error(d, allzero), DataError);
}

TEST_CASE("noisy signals are farther from clean than oracle-denoised ones",
          "[metrics]") {
  SynthConfig cfg;
  cfg.signal_count = 30;
  cfg.seed = 5;
  const auto gt = generate(cfg);
  const auto noisy_err = denoise_error(gt.noisy, gt.clean);
  const auto oracle_err = denoise_error(gt.clean, gt.clean);
  REQUIRE(noisy_err.epsilon > oracle_err.epsilon);
}

TEST_CASE("code statistics aggregate energy and latencies", "[metrics]") {
  std::vector<SparseCode> codes(4);
  codes[0].entries = {{0, -2, 1.0}};
  codes[1].entries = {{0, -2, 1.0}};
  codes[2].entries = {{0, 3, 1.0}};
  codes[3].entries = {{0, -2, 1.0}};
  const auto stats = code_stats(codes, 2);

  REQUIRE(stats.energy[0] == Approx(1.0));  // all coefficients one
  REQUIRE(stats.energy[1] == 0.0);          // unused atom
  REQUIRE(stats.latency_hist[0].at(-2) == 3);
  REQUIRE(stats.latency_hist[0].at(3) == 1);
  REQUIRE(stats.latency_hist[1].empty());
}

TEST_CASE("recovered energy matches the second moment of the coefficient "
          "distribution",
          "[metrics]") {
  // coefficients ~ N(1, 0.3^2): E[a^2] = 1.09
  SynthConfig cfg;
  cfg.signal_count = 4000;
  cfg.seed = 8;
  const auto gt = generate(cfg);
  std::vector<SparseCode> codes(cfg.signal_count);
  for (int j = 0; j < cfg.signal_count; ++j) codes[j] = gt.code_for(j);
  const auto stats = code_stats(codes, 3);
  for (int k = 0; k < 3; ++k)
    REQUIRE(stats.energy[k] == Approx(1.09).margin(0.05));
}

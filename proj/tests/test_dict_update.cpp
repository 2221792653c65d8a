#include <catch2/catch.hpp>

#include "jadl/dict_update.hpp"
#include "jadl/lars.hpp"
#include "support/test_util.hpp"

using namespace jadl;

TEST_CASE("single signal with identity shift gives the normalized signal", "[learn]") {
  Rng rng(41);
  const auto ss = ShiftSet::identity();
  auto dict = testing::random_dictionary(rng, 16, 1, ShiftMode::circular);
  std::vector<Signal> signals(1);
  signals[0].samples = testing::random_vector(rng, 16);
  std::vector<SparseCode> codes(1);
  codes[0].entries = {{0, 0, 1.0}};
  Rng update_rng(1);
  const auto out = update_dictionary(signals, codes, dict, ss, update_rng);
  const Eigen::VectorXd expect = signals[0].samples / signals[0].samples.norm();
  REQUIRE((out.dictionary.atoms.col(0) - expect).lpNorm<Eigen::Infinity>() < 1e-12);
  REQUIRE(out.reinitialized.empty());
}

TEST_CASE("two identity-coded signals average before normalization", "[learn]") {
  Rng rng(42);
  const auto ss = ShiftSet::identity();
  auto dict = testing::random_dictionary(rng, 12, 1, ShiftMode::circular);
  std::vector<Signal> signals(2);
  signals[0].samples = testing::random_vector(rng, 12);
  signals[1].samples = testing::random_vector(rng, 12);
  std::vector<SparseCode> codes(2);
  codes[0].entries = {{0, 0, 1.0}};
  codes[1].entries = {{0, 0, 1.0}};
  Rng update_rng(1);
  const auto out = update_dictionary(signals, codes, dict, ss, update_rng);
  Eigen::VectorXd expect = signals[0].samples + signals[1].samples;
  expect /= expect.norm();
  REQUIRE((out.dictionary.atoms.col(0) - expect).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("extended update zeroes atom samples with no window coverage", "[learn]") {
  // One signal using shift +1: its window covers atom samples 2..5, so
  // samples 0..1 have zero coverage weight and must stay zero.
  Rng rng(43);
  const auto ss = ShiftSet::symmetric(1, ShiftMode::extended);
  auto dict = testing::random_dictionary(rng, 6, 1, ShiftMode::extended);
  std::vector<Signal> signals(1);
  signals[0].samples = testing::random_vector(rng, 4);
  std::vector<SparseCode> codes(1);
  codes[0].entries = {{0, 1, 2.0}};
  Rng update_rng(1);
  const auto out = update_dictionary(signals, codes, dict, ss, update_rng);
  const auto& atom = out.dictionary.atoms.col(0);
  REQUIRE(atom[0] == 0.0);
  REQUIRE(atom[1] == 0.0);
  // covered part: psi rescales by 1/a^2, normalization leaves x/||x||
  Eigen::VectorXd expect = signals[0].samples / signals[0].samples.norm();
  REQUIRE((atom.segment(2, 4) - expect).lpNorm<Eigen::Infinity>() < 1e-12);
  REQUIRE(atom.norm() == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("unused atoms are reinitialized and flagged", "[learn]") {
  Rng rng(44);
  const auto ss = ShiftSet::symmetric(2, ShiftMode::circular);
  auto dict = testing::random_dictionary(rng, 10, 2, ShiftMode::circular);
  std::vector<Signal> signals(1);
  signals[0].samples = testing::random_vector(rng, 10);
  std::vector<SparseCode> codes(1);
  codes[0].entries = {{0, 1, 0.5}};  // atom 1 never used
  Rng update_rng(123);
  const auto out = update_dictionary(signals, codes, dict, ss, update_rng);
  REQUIRE(out.reinitialized == std::vector<int>{1});
  REQUIRE(out.dictionary.atoms.col(1).norm() == Approx(1.0).epsilon(1e-12));
  // reinitialized from the stream: a fresh draw, not the old atom
  REQUIRE((out.dictionary.atoms.col(1) - dict.atoms.col(1)).norm() > 1e-3);
}

TEST_CASE("update sweep preserves unit norms and never raises the fit error",
          "[learn]") {
  Rng rng(45);
  for (const auto mode : {ShiftMode::circular, ShiftMode::extended}) {
    const auto ss = ShiftSet::symmetric(4, mode);
    const int n = 32;
    auto dict = testing::random_dictionary(rng, ss.atom_length(n), 3, mode);
    std::vector<Signal> signals(12);
    std::vector<SparseCode> codes(12);
    const CorrelationEngine engine(dict, ss, n);
    for (int j = 0; j < 12; ++j) {
      signals[j].samples = testing::random_vector(rng, n);
      codes[j] = jitter_sparse_code(signals[j].samples, engine, 0.05).code;
    }
    auto quad = [&](const Dictionary& d) {
      double q = 0;
      for (int j = 0; j < 12; ++j)
        q += 0.5 * (signals[j].samples - reconstruct(d, codes[j], ss, n)).squaredNorm();
      return q;
    };
    const double before = quad(dict);
    Rng update_rng(7);
    const auto out = update_dictionary(signals, codes, dict, ss, update_rng);
    for (int k = 0; k < 3; ++k)
      REQUIRE(out.dictionary.atoms.col(k).norm() == Approx(1.0).epsilon(1e-10));
    REQUIRE(quad(out.dictionary) <= before + 1e-8 * std::max(1.0, before));
  }
}

TEST_CASE("update validates inputs", "[learn]") {
  Rng rng(46);
  auto dict = testing::random_dictionary(rng, 8, 1, ShiftMode::circular);
  std::vector<Signal> signals(2);
  signals[0].samples = testing::random_vector(rng, 8);
  signals[1].samples = testing::random_vector(rng, 8);
  std::vector<SparseCode> codes(1);
  Rng update_rng(1);
  REQUIRE_THROWS_AS(
      update_dictionary(signals, codes, dict, ShiftSet::identity(), update_rng),
      DataError);
}

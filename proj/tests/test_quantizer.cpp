#include <doctest.h>

#include <cmath>
#include <random>

#include "fixquant/mc.hpp"
#include "fixquant/quantizer.hpp"

using namespace fixquant;

TEST_CASE("optimal step sizes match the published table") {
  CHECK(optimal_step_size(Distribution::Gaussian, 2) == doctest::Approx(0.996));
  CHECK(optimal_step_size(Distribution::Uniform, 1) == doctest::Approx(1.0));
  CHECK(optimal_step_size(Distribution::Laplacian, 3) == doctest::Approx(0.731));
  CHECK(optimal_step_size(Distribution::Gamma, 4) == doctest::Approx(0.540));

  SUBCASE("monotonically decreasing in bitwidth") {
    for (Distribution dist : {Distribution::Uniform, Distribution::Gaussian,
                              Distribution::Laplacian, Distribution::Gamma}) {
      for (int b = 2; b <= kMaxTableBits; ++b) {
        CHECK(optimal_step_size(dist, b) < optimal_step_size(dist, b - 1));
      }
    }
  }

  SUBCASE("range errors") {
    CHECK_THROWS_WITH_AS(optimal_step_size(Distribution::Gaussian, 0),
                         doctest::Contains("outside [1, 16]"), Error);
    CHECK_THROWS_AS(optimal_step_size(Distribution::Gaussian, 17), Error);
  }
}

TEST_CASE("extended table entries agree with a fresh Monte Carlo scan") {
  // The frozen beta=6 Gaussian entry against an independent 1e6-sample scan.
  const auto samples = mc::sample(Distribution::Gaussian, 1'000'000, 77);
  const double table = optimal_step_size(Distribution::Gaussian, 6);
  const auto scan = mc::scan_optimal_step(samples, 6, table / 3.0, table * 3.0);
  CHECK(scan.step == doctest::Approx(table).epsilon(0.02));
}

TEST_CASE("derive_qformat computes fractional bits from the step size") {
  TensorStats unit{1000, 0.0, 1.0, 4.0};

  SUBCASE("sigma=1, beta=2, gaussian, mult=1: s=0.996 -> n=0") {
    const QFormat fmt = derive_qformat(unit, 2, Distribution::Gaussian, 1.0);
    CHECK(fmt.bitwidth == 2);
    CHECK(fmt.frac_bits == 0);
    CHECK(fmt.is_signed);
  }
  SUBCASE("sigma=1, beta=4, gaussian, mult=3: s=1.005 -> n=-1") {
    const QFormat fmt = derive_qformat(unit, 4, Distribution::Gaussian, 3.0);
    CHECK(fmt.frac_bits == -1);
  }
  SUBCASE("sigma=0.5, beta=1, gaussian, mult=1: s=0.798 -> n=0") {
    TensorStats half{1000, 0.0, 0.5, 2.0};
    const QFormat fmt = derive_qformat(half, 1, Distribution::Gaussian, 1.0);
    CHECK(fmt.frac_bits == 0);
  }
  SUBCASE("uniform family scales by max_abs, not sigma") {
    TensorStats stats{1000, 0.0, 0.25, 2.0};
    const QFormat fmt = derive_qformat(stats, 3, Distribution::Uniform, 3.0);
    // s = 2.0 * 0.25 = 0.5 -> n = 1
    CHECK(fmt.frac_bits == 1);
  }
  SUBCASE("degenerate statistics are an error, not a silent format") {
    TensorStats constant{10, 3.0, 0.0, 3.0};
    CHECK_THROWS_AS(derive_qformat(constant, 8, Distribution::Gaussian, 3.0),
                    Error);
    TensorStats zeros{10, 0.0, 0.0, 0.0};
    CHECK_THROWS_AS(derive_qformat(zeros, 8, Distribution::Uniform, 3.0), Error);
    try {
      derive_qformat(constant, 8, Distribution::Gaussian, 3.0);
    } catch (const Error& e) {
      CHECK(e.code() == errc::degenerate_stats);
    }
  }
}

TEST_CASE("quantize rounds to the grid and saturates") {
  SUBCASE("zero stays zero for bitwidth >= 2") {
    for (int b : {2, 4, 8, 16, 32}) {
      const QFormat fmt{b, 5, true};
      CHECK(quantize_value(0.0, fmt) == 0.0);
    }
  }
  SUBCASE("nearest multiple of the resolution") {
    const QFormat fmt{8, 2, true};
    const auto out = quantize(std::vector<double>{0.3, -0.3}, fmt);
    CHECK(out[0] == 0.25);
    CHECK(out[1] == -0.25);
  }
  SUBCASE("saturation to the representable range") {
    const QFormat fmt{4, 0, true};
    CHECK(quantize_value(100.0, fmt) == 7.0);
    CHECK(quantize_value(-100.0, fmt) == -8.0);
    CHECK(fmt.max_value() == 7.0);
    CHECK(fmt.min_value() == -8.0);
  }
  SUBCASE("rounding rule, exhaustive around the grid") {
    const QFormat fmt{8, 3, true};
    const double res = fmt.resolution();
    for (int k = -40; k <= 40; ++k) {
      for (double frac : {0.0, 0.2, 0.49, 0.51, 0.8}) {
        const double x = (k + frac) * res;
        const double q = quantize_value(x, fmt);
        const double expect = (frac < 0.5 ? k : k + (k < 0 ? -1 : 1) * 0 + 1) * res;
        if (frac < 0.5) {
          CHECK(q == doctest::Approx(k * res));
        } else {
          CHECK(q == doctest::Approx((k + 1) * res));
        }
        CHECK(std::abs(x - q) <= res / 2 + 1e-15);
        (void)expect;
      }
    }
  }
  SUBCASE("ties round away from zero") {
    const QFormat fmt{8, 1, true};
    CHECK(quantize_value(0.25, fmt) == 0.5);
    CHECK(quantize_value(-0.25, fmt) == -0.5);
    CHECK(quantize_value(0.75, fmt) == 1.0);
  }
  SUBCASE("1-bit formats hold the symmetric pair") {
    const QFormat fmt{1, 0, true};
    CHECK(quantize_value(0.3, fmt) == 0.5);
    CHECK(quantize_value(-0.3, fmt) == -0.5);
    CHECK(quantize_value(0.0, fmt) == 0.5);  // documented exception
    CHECK(quantize_value(100.0, fmt) == 0.5);
  }
  SUBCASE("non-finite input is an error") {
    const QFormat fmt{8, 0, true};
    CHECK_THROWS_AS(quantize_value(std::nan(""), fmt), Error);
    CHECK_THROWS_AS(
        quantize(std::vector<double>{1.0, INFINITY}, fmt), Error);
  }
}

TEST_CASE("quantize is idempotent and has bounded error") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> value(0.0, 4.0);
  std::uniform_int_distribution<int> bits(1, 24);
  std::uniform_int_distribution<int> frac(-8, 12);
  for (int i = 0; i < 20000; ++i) {
    const QFormat fmt{bits(rng), frac(rng), true};
    const double x = value(rng);
    const double q1 = quantize_value(x, fmt);
    const double q2 = quantize_value(q1, fmt);
    CHECK(q1 == q2);  // exact
    if (fmt.bitwidth >= 2 && x > fmt.min_value() && x < fmt.max_value()) {
      CHECK(std::abs(x - q1) <= fmt.resolution() / 2.0 + 1e-15);
    }
  }
}

TEST_CASE("measure_sqnr") {
  SUBCASE("zero noise gives the +infinity sentinel") {
    const std::vector<double> x{1, 1, 1, 1};
    const SqnrDb s = measure_sqnr(x, x);
    CHECK(!s.is_finite());
    CHECK(s.db > 0);
  }
  SUBCASE("direct arithmetic: 10*log10(2/0.02) = 20 dB") {
    const std::vector<double> x{1, 0, -1, 0};
    const std::vector<double> y{0.9, 0, -0.9, 0};
    CHECK(measure_sqnr(x, y).db == doctest::Approx(20.0).epsilon(1e-9));
  }
  SUBCASE("zero signal energy is undefined") {
    const std::vector<double> zeros{0, 0};
    try {
      measure_sqnr(zeros, zeros);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == errc::undefined_sqnr);
    }
  }
  SUBCASE("length mismatch") {
    CHECK_THROWS_AS(
        measure_sqnr(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}),
        Error);
  }
  SUBCASE("table step is within 0.5 dB of the scanned optimum at beta=4") {
    const auto samples = mc::sample(Distribution::Gaussian, 1'000'000, 4242);
    const double table_step = optimal_step_size(Distribution::Gaussian, 4);
    const SqnrDb at_table = mc::midrise_sqnr(samples, table_step, 4);
    const auto scan = mc::scan_optimal_step(samples, 4, 0.1, 1.0);
    const SqnrDb at_opt = mc::midrise_sqnr(samples, scan.step, 4);
    CHECK(at_table.db == doctest::Approx(at_opt.db).epsilon(0.03));
    CHECK(std::abs(at_table.db - at_opt.db) < 0.5);
  }
}

TEST_CASE("SQNR grows with bitwidth under derived formats") {
  const auto samples = mc::sample(Distribution::Gaussian, 100'000, 8);
  TensorStats stats{static_cast<std::int64_t>(samples.size()), 0.0, 1.0, 6.0};
  double prev = -1.0;
  for (int b = 2; b <= 10; ++b) {
    const QFormat fmt = derive_qformat(stats, b, Distribution::Gaussian, 3.0);
    const auto q = quantize(samples, fmt);
    const double db = measure_sqnr(samples, q).db;
    CHECK(db >= prev);
    prev = db;
  }
}

TEST_CASE("predict_sqnr_db is kappa times beta") {
  CHECK(predict_sqnr_db(10, 3.0).db == doctest::Approx(30.0));
  CHECK(predict_sqnr_db(1, 6.02).db == doctest::Approx(6.02));
  CHECK(predict_sqnr_db(4, 5.0).db == doctest::Approx(20.0));
  CHECK_THROWS_AS(predict_sqnr_db(0, 3.0), Error);
  CHECK_THROWS_AS(predict_sqnr_db(4, 0.0), Error);
}

TEST_CASE("QFormat text form round-trips") {
  CHECK(QFormat{8, 4, true}.to_string() == "Q8.4");
  CHECK(QFormat{8, -2, true}.to_string() == "Q8.-2");
  CHECK(QFormat::parse("Q8.4") == QFormat{8, 4, true});
  CHECK(QFormat::parse("Q12.-3") == QFormat{12, -3, true});
  CHECK_THROWS_AS(QFormat::parse("8.4"), Error);
  CHECK_THROWS_AS(QFormat::parse("Q8"), Error);
  CHECK_THROWS_AS(QFormat::parse("Q0.4"), Error);
  CHECK_THROWS_AS(QFormat::parse("Q8.x"), Error);
}

TEST_CASE("normalized samplers have the right scale") {
  for (Distribution dist : {Distribution::Gaussian, Distribution::Laplacian,
                            Distribution::Gamma}) {
    const auto xs = mc::sample(dist, 400'000, 5);
    double var = 0.0;
    for (double x : xs) var += x * x;
    var /= static_cast<double>(xs.size());
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
  }
  const auto xs = mc::sample(Distribution::Uniform, 400'000, 5);
  double var = 0.0;
  for (double x : xs) var += x * x;
  var /= static_cast<double>(xs.size());
  CHECK(var == doctest::Approx(1.0 / 3.0).epsilon(0.02));
}

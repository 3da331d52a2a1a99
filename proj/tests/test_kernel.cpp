#include <doctest.h>

#include "error.hpp"
#include "kernel.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace sbk;

namespace {

struct Sample {
  std::vector<double> u, x, y;
};

Sample curved_sample(std::size_t n, std::uint64_t seed, double noise) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  Sample s;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = uni(rng), x = z(rng);
    s.u.push_back(u);
    s.x.push_back(x);
    s.y.push_back(std::sin(2.0 * u) * x + noise * z(rng));
  }
  return s;
}

// Lags iid N(0,1), delay uniform on [-1, 1], response from the given coefficient family.
LaggedDesign family_design(int rows, int p, std::uint64_t seed, const CoefficientFamily& m,
                           double noise) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  LaggedDesign d;
  d.p = p;
  d.d = p + 1;
  d.t0 = p + 2;
  d.response.resize(rows);
  d.lags.resize(rows, p);
  d.delay.resize(rows);
  for (int i = 0; i < rows; ++i) {
    d.delay(i) = uni(rng);
    double y = 0.0;
    for (int a = 0; a < p; ++a) {
      d.lags(i, a) = z(rng);
      y += m(a + 1, d.delay(i)) * d.lags(i, a);
    }
    d.response(i) = y + noise * z(rng);
    d.times.push_back(d.t0 + i);
  }
  d.a = d.delay.minCoeff();
  d.b = d.delay.maxCoeff();
  return d;
}

// Weighted LS of y on (x, x (u - u0)) by an explicit 2x2 inverse.
double local_linear_oracle(double u0, const Sample& s, double h) {
  double s11 = 0, s12 = 0, s22 = 0, r1 = 0, r2 = 0;
  for (std::size_t t = 0; t < s.u.size(); ++t) {
    const double z = (s.u[t] - u0) / h;
    if (std::abs(z) > 1.0) continue;
    const double w = (15.0 / 16.0) * (1 - z * z) * (1 - z * z) / h;
    const double v1 = s.x[t], v2 = s.x[t] * (s.u[t] - u0);
    s11 += w * v1 * v1;
    s12 += w * v1 * v2;
    s22 += w * v2 * v2;
    r1 += w * v1 * s.y[t];
    r2 += w * v2 * s.y[t];
  }
  const double det = s11 * s22 - s12 * s12;
  return (s22 * r1 - s12 * r2) / det;
}

double simpson(auto&& f, double lo, double hi, int intervals) {
  const double step = (hi - lo) / intervals;
  double acc = f(lo) + f(hi);
  for (int i = 1; i < intervals; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(lo + i * step);
  return acc * step / 3.0;
}

// Quartic pilot by normal equations (Gaussian elimination), then the plug-in formula.
double bandwidth_oracle(const Sample& s) {
  const double a = *std::min_element(s.u.begin(), s.u.end());
  const double b = *std::max_element(s.u.begin(), s.u.end());
  const double c = (a + b) / 2, half = (b - a) / 2;
  double m[5][6] = {};
  for (std::size_t t = 0; t < s.u.size(); ++t) {
    const double z = (s.u[t] - c) / half;
    double v[5];
    for (int k = 0; k < 5; ++k) v[k] = s.x[t] * std::pow(z, k);
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) m[i][j] += v[i] * v[j];
      m[i][5] += v[i] * s.y[t];
    }
  }
  for (int col = 0; col < 5; ++col) {
    int piv = col;
    for (int r = col + 1; r < 5; ++r) if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    for (int k = 0; k < 6; ++k) std::swap(m[col][k], m[piv][k]);
    for (int r = col + 1; r < 5; ++r) {
      const double f = m[r][col] / m[col][col];
      for (int k = col; k < 6; ++k) m[r][k] -= f * m[col][k];
    }
  }
  double beta[5];
  for (int i = 4; i >= 0; --i) {
    double acc = m[i][5];
    for (int k = i + 1; k < 5; ++k) acc -= m[i][k] * beta[k];
    beta[i] = acc / m[i][i];
  }
  double rss = 0, curv = 0;
  for (std::size_t t = 0; t < s.u.size(); ++t) {
    const double z = (s.u[t] - c) / half;
    double fit = 0;
    for (int k = 0; k < 5; ++k) fit += beta[k] * std::pow(z, k) * s.x[t];
    rss += (s.y[t] - fit) * (s.y[t] - fit);
    const double m2 = (2 * beta[2] + 6 * beta[3] * z + 12 * beta[4] * z * z) / (half * half);
    curv += m2 * m2 * s.x[t] * s.x[t];
  }
  const double sigma2 = rss / static_cast<double>(s.u.size() - 5);
  const double h = 2.0362 * std::pow(sigma2 * (b - a) / curv, 0.2);
  return std::clamp(h, (b - a) / 20, b - a);
}

} // namespace

TEST_CASE("quartic kernel values and support") {
  CHECK(quartic_kernel(0.0, 1.0) == 0.9375);
  CHECK(quartic_kernel(0.5, 1.0) == 0.52734375);
  for (double h : {0.1, 1.0, 2.5, 10.0}) {
    CHECK(quartic_kernel(h, h) == 0.0);
    CHECK(quartic_kernel(-h, h) == 0.0);
    CHECK(quartic_kernel(1.0001 * h, h) == 0.0);
    CHECK(quartic_kernel(0.0, h) == doctest::Approx(0.9375 / h).epsilon(1e-15));
  }
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> uni(-3, 3);
  for (int i = 0; i < 200; ++i) {
    const double u = uni(rng);
    CHECK(quartic_kernel(u, 2.0) == quartic_kernel(-u, 2.0));
    CHECK(quartic_kernel(u, 2.0) >= 0.0);
  }
}

TEST_CASE("quartic kernel integrates to one") {
  for (double h : {0.1, 1.0, 10.0}) {
    const double mass = simpson([h](double u) { return quartic_kernel(u, h); }, -h, h, 2000);
    CHECK(std::abs(mass - 1.0) <= 1e-6);
  }
}

TEST_CASE("rule-of-thumb bandwidth matches an independent plug-in computation") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = curved_sample(300, seed, 0.4);
    const double h = rule_of_thumb_bandwidth(s.u, s.x, s.y);
    CHECK(h == doctest::Approx(bandwidth_oracle(s)).epsilon(1e-8));
  }
}

TEST_CASE("rule-of-thumb bandwidth is invariant to rescaling y") {
  auto s = curved_sample(400, 3, 0.3);
  const double h = rule_of_thumb_bandwidth(s.u, s.x, s.y);
  for (double k : {2.0, -3.0, 1e-3}) {
    auto scaled = s;
    for (auto& y : scaled.y) y *= k;
    CHECK(rule_of_thumb_bandwidth(scaled.u, scaled.x, scaled.y) == doctest::Approx(h).epsilon(1e-10));
  }
}

TEST_CASE("noiseless quadratic pilot clamps to the lower bound") {
  Sample s;
  for (int i = 0; i < 50; ++i) {
    const double u = -1.0 + 2.0 * i / 49.0;
    s.u.push_back(u);
    s.x.push_back(1.0);
    s.y.push_back(u * u);
  }
  CHECK(rule_of_thumb_bandwidth(s.u, s.x, s.y) == doctest::Approx(2.0 / 20.0).epsilon(1e-15));
}

TEST_CASE("zero curvature returns the upper bound") {
  Sample s;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z;
  for (int i = 0; i < 60; ++i) {
    s.u.push_back(i / 59.0);
    s.x.push_back(z(rng));
    s.y.push_back(0.0);
  }
  CHECK(rule_of_thumb_bandwidth(s.u, s.x, s.y) == 1.0);
}

TEST_CASE("bandwidth always lies inside the clamp") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto s = curved_sample(30 + seed * 10, seed, 0.01 * static_cast<double>(seed * seed));
    const double a = *std::min_element(s.u.begin(), s.u.end());
    const double b = *std::max_element(s.u.begin(), s.u.end());
    const double h = rule_of_thumb_bandwidth(s.u, s.x, s.y);
    CHECK(h >= (b - a) / 20.0);
    CHECK(h <= b - a);
  }
}

TEST_CASE("bandwidth input errors") {
  const auto s = curved_sample(9, 1, 0.1);
  CHECK_THROWS_AS(rule_of_thumb_bandwidth(s.u, s.x, s.y), Error);
  Sample flat = curved_sample(40, 1, 0.1);
  for (auto& u : flat.u) u = 0.25;
  try {
    rule_of_thumb_bandwidth(flat.u, flat.x, flat.y);
    FAIL("expected DegeneratePilot");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegeneratePilot);
  }
  // Only three distinct delay values: the quartic pilot is rank deficient.
  Sample few = curved_sample(40, 2, 0.1);
  for (std::size_t i = 0; i < few.u.size(); ++i) few.u[i] = static_cast<double>(i % 3);
  try {
    rule_of_thumb_bandwidth(few.u, few.x, few.y);
    FAIL("expected DegeneratePilot");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegeneratePilot);
  }
}

TEST_CASE("pseudo-responses") {
  const auto one = family_design(50, 1, 1, [](int, double u) { return u; }, 0.1);
  const auto y1 = pseudo_responses(one, Eigen::MatrixXd::Random(50, 1), 1);
  for (Eigen::Index i = 0; i < 50; ++i) CHECK(y1[i] == one.response(i));

  const auto two = family_design(50, 2, 2, [](int a, double u) { return a * u; }, 0.1);
  Eigen::MatrixXd m(50, 2);
  m.col(0).setRandom();
  m.col(1).setZero();
  const auto y2 = pseudo_responses(two, m, 1);
  for (Eigen::Index i = 0; i < 50; ++i) CHECK(y2[i] == two.response(i));

  const auto four = family_design(80, 4, 3, [](int a, double u) { return std::cos(a + u); }, 0.2);
  const Eigen::MatrixXd c = Eigen::MatrixXd::Random(80, 4);
  for (int gamma = 1; gamma <= 4; ++gamma) {
    const auto y = pseudo_responses(four, c, gamma);
    for (Eigen::Index i = 0; i < 80; ++i) {
      double expect = four.response(i);
      for (int a = 1; a <= 4; ++a) {
        if (a != gamma) expect -= c(i, a - 1) * four.lags(i, a - 1);
      }
      CHECK(y[i] == doctest::Approx(expect).epsilon(1e-14));
    }
  }
  CHECK_THROWS_AS(pseudo_responses(four, c, 0), Error);
  CHECK_THROWS_AS(pseudo_responses(four, c, 5), Error);
  CHECK_THROWS_AS(pseudo_responses(four, Eigen::MatrixXd::Zero(80, 3), 1), Error);
}

TEST_CASE("local linear fit reproduces constant and linear coefficients") {
  auto s = curved_sample(200, 5, 0.0);
  for (double c : {0.5, -2.0, 13.0}) {
    for (std::size_t t = 0; t < s.u.size(); ++t) s.y[t] = c * s.x[t];
    for (double u0 : {-1.5, 0.0, 0.7}) {
      CHECK(local_linear_vc(u0, s.u, s.x, s.y, 0.6) == doctest::Approx(c).epsilon(1e-12));
    }
  }
  for (double u0 : {-1.2, 0.1, 1.6}) {
    for (std::size_t t = 0; t < s.u.size(); ++t) s.y[t] = (0.8 - 1.7 * (s.u[t] - u0)) * s.x[t];
    for (double h : {0.3, 1.0, 4.0}) {
      CHECK(local_linear_vc(u0, s.u, s.x, s.y, h) == doctest::Approx(0.8).epsilon(1e-9));
    }
  }
}

TEST_CASE("local linear fit matches an explicit 2x2 inverse") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = curved_sample(150, seed + 10, 0.5);
    for (double u0 : {-1.0, -0.2, 0.5, 1.3}) {
      for (double h : {0.4, 0.9}) {
        CHECK(local_linear_vc(u0, s.u, s.x, s.y, h) ==
              doctest::Approx(local_linear_oracle(u0, s, h)).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("local linear failures") {
  Sample s{{0.0, 0.1, 5.0}, {1.0, 2.0, 1.0}, {1.0, 2.0, 3.0}};
  try {
    local_linear_vc(5.0, s.u, s.x, s.y, 1.0);
    FAIL("expected InsufficientLocalData");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientLocalData);
  }
  // Two points at the same u: second regressor is collinear with the first.
  Sample twin{{1.0, 1.0, 3.0}, {1.0, 2.0, 1.0}, {1.0, 2.0, 3.0}};
  try {
    local_linear_vc(1.2, twin.u, twin.x, twin.y, 0.5);
    FAIL("expected SingularLocalFit");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularLocalFit);
  }
  CHECK_THROWS_AS(local_linear_vc(0.0, s.u, s.x, s.y, 0.0), Error);
}

TEST_CASE("SBK and oracle coincide at p = 1") {
  const CoefficientFamily m = [](int, double u) { return std::sin(3 * u); };
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto d = family_design(200, 1, seed, m, 0.2);
    const auto grid = central_grid(d.a, d.b, 41, 0.9);
    const auto sbk = sbk_estimate(d, Eigen::MatrixXd::Random(200, 1), 1, grid);
    const auto oracle = oracle_estimate(d, m, 1, grid, sbk.bandwidth);
    CHECK(sbk.values == oracle.values);
    CHECK(sbk.pseudo_responses == oracle.pseudo_responses);
  }
}

TEST_CASE("truth as pre-estimates gives the oracle exactly") {
  const CoefficientFamily m = [](int a, double u) { return (a % 2 ? 0.5 : -0.5) * std::sin(2 * u); };
  const auto d = family_design(300, 3, 4, m, 0.1);
  const auto grid = central_grid(d.a, d.b, 31);
  for (int gamma = 1; gamma <= 3; ++gamma) {
    const auto sbk = sbk_estimate(d, evaluate_family(d, m), gamma, grid);
    const auto oracle = oracle_estimate(d, m, gamma, grid, sbk.bandwidth);
    CHECK(sbk.values == oracle.values);
    CHECK(sbk.bandwidth == oracle.bandwidth);
  }
}

TEST_CASE("noiseless constant model is recovered on the grid") {
  const auto d = family_design(200, 1, 7, [](int, double) { return 0.5; }, 0.0);
  const auto grid = central_grid(d.a, d.b, 101, 1.0);
  const auto est = sbk_estimate(d, Eigen::MatrixXd::Zero(200, 1), 1, grid, 0.3);
  for (double v : est.values) CHECK(std::abs(v - 0.5) <= 1e-12);
  CHECK(est.missing_count() == 0);
}

TEST_CASE("scaling responses scales the estimate and keeps the bandwidth") {
  const CoefficientFamily m = [](int a, double u) { return a * std::cos(u); };
  auto d = family_design(250, 2, 8, m, 0.3);
  const auto grid = central_grid(d.a, d.b, 21, 0.9);
  const Eigen::MatrixXd pre = evaluate_family(d, m);
  const auto base = sbk_estimate(d, pre, 1, grid);
  auto scaled = d;
  scaled.response *= 3.0;
  const auto est = sbk_estimate(scaled, Eigen::MatrixXd(pre * 3.0), 1, grid);
  CHECK(est.bandwidth == doctest::Approx(base.bandwidth).epsilon(1e-10));
  const auto fixed = sbk_estimate(scaled, Eigen::MatrixXd(pre * 3.0), 1, grid, base.bandwidth);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    CHECK(fixed.values[g] == doctest::Approx(3.0 * base.values[g]).epsilon(1e-12));
  }
}

TEST_CASE("estimates are pointwise: other grid points do not matter") {
  const CoefficientFamily m = [](int, double u) { return u * u; };
  const auto d = family_design(200, 2, 9, m, 0.2);
  const Eigen::MatrixXd pre = evaluate_family(d, m);
  const auto coarse = central_grid(d.a, d.b, 11, 0.8);
  const auto fine = central_grid(d.a, d.b, 101, 0.8);
  const auto a = sbk_estimate(d, pre, 2, coarse, 0.5);
  const auto b = sbk_estimate(d, pre, 2, fine, 0.5);
  for (std::size_t g = 0; g < coarse.size(); ++g) {
    CHECK(a.values[g] == b.values[g * 10]);
  }
  std::vector<double> reversed(coarse.rbegin(), coarse.rend());
  const auto r = sbk_estimate(d, pre, 2, reversed, 0.5);
  for (std::size_t g = 0; g < coarse.size(); ++g) CHECK(r.values[coarse.size() - 1 - g] == a.values[g]);
}

TEST_CASE("widening policy and missing points") {
  // Delays cluster at the two ends of [0, 10]; the middle has no data.
  LaggedDesign d;
  d.p = 1;
  d.d = 1;
  d.t0 = 2;
  const int rows = 40;
  d.response.resize(rows);
  d.lags.resize(rows, 1);
  d.delay.resize(rows);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  for (int i = 0; i < rows; ++i) {
    d.delay(i) = i < 20 ? 0.05 * i : 10.0 - 0.05 * (i - 20);
    d.lags(i, 0) = z(rng);
    d.response(i) = 0.5 * d.lags(i, 0);
    d.times.push_back(i + 2);
  }
  d.a = 0.0;
  d.b = 10.0;
  const std::vector<double> grid{0.5, 3.0, 5.0};
  const auto est = sbk_estimate(d, Eigen::MatrixXd::Zero(rows, 1), 1, grid, 1.0);
  CHECK(est.status[0] == PointStatus::Ok);
  CHECK(est.values[0] == doctest::Approx(0.5).epsilon(1e-12));
  // 3.0: window must grow to 2.25 to reach 0.95 and beyond.
  CHECK(est.status[1] == PointStatus::Widened);
  CHECK(est.values[1] == doctest::Approx(0.5).epsilon(1e-12));
  // 5.0: even 3.375 does not reach any data.
  CHECK(est.status[2] == PointStatus::Missing);
  CHECK(std::isnan(est.values[2]));
  CHECK(est.missing_count() == 1);
  CHECK_THROWS_AS(sbk_estimate(d, Eigen::MatrixXd::Zero(rows, 1), 1, std::vector<double>{11.0}, 1.0),
                  Error);
}

TEST_CASE("central grid") {
  const auto g = central_grid(-2.0, 2.0, 101, 0.9);
  REQUIRE(g.size() == 101);
  CHECK(g.front() == doctest::Approx(-1.8).epsilon(1e-15));
  CHECK(g.back() == doctest::Approx(1.8).epsilon(1e-15));
  CHECK(g[50] == doctest::Approx(0.0).epsilon(1e-15));
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
  CHECK(central_grid(0.0, 1.0, 1, 0.5) == std::vector<double>{0.5});
  CHECK_THROWS_AS(central_grid(0.0, 1.0, 0), Error);
  CHECK_THROWS_AS(central_grid(0.0, 1.0, 5, 0.0), Error);
}

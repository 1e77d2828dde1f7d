#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "chartlab/evaluation.hpp"
#include "helpers.hpp"

using namespace chartlab;

namespace {

// 1-based rank of i among the neighbors of l, ties to the lower index.
Index naive_rank(const Eigen::MatrixXd& d, Index l, Index i) {
  Index r = 1;
  for (Index j = 0; j < d.rows(); ++j)
    if (j != l && j != i && (d(l, j) < d(l, i) || (d(l, j) == d(l, i) && j < i))) ++r;
  return r;
}

// Double sums of the CT and TW definitions, evaluated literally.
std::pair<double, double> naive_ct_tw(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& rep, Index K) {
  const Index L = truth.rows();
  double c = 0, t = 0;
  for (Index l = 0; l < L; ++l)
    for (Index i = 0; i < L; ++i) {
      if (i == l) continue;
      const Index r = naive_rank(truth, l, i), rh = naive_rank(rep, l, i);
      if (r <= K) c += std::max<Index>(0, rh - K);
      if (rh <= K) t += std::max<Index>(0, r - K);
    }
  const double norm = 2.0 / (double(L) * double(K) * (2.0 * double(L) - 3.0 * double(K) - 1));
  return {1 - norm * c, 1 - norm * t};
}

Points2 affine(const Points2& z, const Eigen::Matrix2d& M, Eigen::RowVector2d v) {
  return (z * M.transpose()).rowwise() + v;
}

Points2 permute(const Points2& x, const std::vector<Index>& p) {
  Points2 y(x.rows(), 2);
  for (Index i = 0; i < x.rows(); ++i) y.row(i) = x.row(p[std::size_t(i)]);
  return y;
}

}  // namespace

TEST_CASE("identical and similar representations score perfectly") {
  const Points2 x = test::random_points(80, 60, 10);
  Eigen::Matrix2d R;
  R << std::cos(1.1), -std::sin(1.1), std::sin(1.1), std::cos(1.1);
  for (const Points2& z : {x, affine(x, 3 * R, {5, -7})}) {
    const NeighborhoodScores s = continuity_trustworthiness(x, z, 4);
    CHECK(s.ct == doctest::Approx(1).epsilon(1e-12));
    CHECK(s.tw == doctest::Approx(1).epsilon(1e-12));
    CHECK(kruskal_stress(x, z) < 1e-9);
    CHECK(optimal_affine_mae(z, x).mae < 1e-9);
  }
  CHECK(rajski_distance(x, x).rd == doctest::Approx(0).epsilon(1e-12));
  const NeighborhoodScores m = continuity_trustworthiness(x, test::euclidean(x), 4);
  CHECK(m.ct == doctest::Approx(1));
  CHECK(m.tw == doctest::Approx(1));
}

TEST_CASE("CT and TW match the literal double sum") {
  // six points on a line, then the two nearest neighbors of point 0 swapped
  Points2 x(6, 2);
  x << 0, 0, 1, 0, 2, 0, 3, 0, 4, 0, 5, 0;
  Points2 z = x;
  z.row(1).swap(z.row(3));
  const NeighborhoodScores s = continuity_trustworthiness(x, z, 1);
  const auto [c, t] = naive_ct_tw(test::euclidean(x).values, test::euclidean(z).values, 1);
  CHECK(s.ct == doctest::Approx(c).epsilon(1e-12));
  CHECK(s.tw == doctest::Approx(t).epsilon(1e-12));
  CHECK(s.ct < 1);

  for (int trial = 0; trial < 10; ++trial) {
    const Index L = 20 + 8 * trial;
    const Points2 truth = test::random_points(L, 61 + trial, 10), rep = test::random_points(L, 71 + trial, 3);
    const Index K = 1 + trial % 5;
    const NeighborhoodScores a = continuity_trustworthiness(truth, rep, K);
    const auto [nc, nt] = naive_ct_tw(test::euclidean(truth).values, test::euclidean(rep).values, K);
    CHECK(std::abs(a.ct - nc) < 1e-12);
    CHECK(std::abs(a.tw - nt) < 1e-12);
    CHECK(a.ct >= 0);
    CHECK(a.tw >= 0);
  }
}

TEST_CASE("CT and TW rank ties by index") {
  // duplicated chart points produce exact ties in the representation
  const Points2 x = test::random_points(30, 62, 10);
  Points2 z = x;
  for (Index i = 0; i < 30; i += 3) z.row(i + 1) = z.row(i);
  const NeighborhoodScores s = continuity_trustworthiness(x, z, 2);
  const auto [c, t] = naive_ct_tw(test::euclidean(x).values, test::euclidean(z).values, 2);
  CHECK(std::abs(s.ct - c) < 1e-12);
  CHECK(std::abs(s.tw - t) < 1e-12);
}

TEST_CASE("matrix scores are invariant to monotone transforms") {
  const Points2 x = test::random_points(50, 63, 10);
  DissimilarityMatrix D = test::euclidean(test::random_points(50, 64, 10));
  D.values = (D.values + 0.3 * test::euclidean(x).values).eval();
  DissimilarityMatrix E = D;
  E.values = D.values.array().square().exp() - 1;
  const NeighborhoodScores a = continuity_trustworthiness(x, D, 3), b = continuity_trustworthiness(x, E, 3);
  CHECK(a.ct == b.ct);
  CHECK(a.tw == b.tw);
}

TEST_CASE("scores are invariant to relabeling") {
  const Points2 x = test::random_points(60, 65, 10), z = test::random_points(60, 66, 10);
  std::vector<Index> p(60);
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), std::mt19937_64(67));
  const Points2 xp = permute(x, p), zp = permute(z, p);
  // ties do not occur, so the index tie-break cannot matter
  const NeighborhoodScores a = continuity_trustworthiness(x, z, 3), b = continuity_trustworthiness(xp, zp, 3);
  CHECK(a.ct == doctest::Approx(b.ct).epsilon(1e-12));
  CHECK(a.tw == doctest::Approx(b.tw).epsilon(1e-12));
  CHECK(kruskal_stress(x, z) == doctest::Approx(kruskal_stress(xp, zp)).epsilon(1e-12));
  CHECK(rajski_distance(x, z).rd == doctest::Approx(rajski_distance(xp, zp).rd).epsilon(1e-12));
}

TEST_CASE("Kruskal's stress matches a two-pass reference") {
  const Points2 x = test::random_points(30, 68, 10), z = test::random_points(30, 69, 2);
  double xz = 0, zz = 0, xx = 0;
  for (Index i = 0; i < 30; ++i)
    for (Index j = i + 1; j < 30; ++j) {
      const double a = (x.row(i) - x.row(j)).norm(), b = (z.row(i) - z.row(j)).norm();
      xz += a * b;
      zz += b * b;
      xx += a * a;
    }
  double num = 0;
  for (Index i = 0; i < 30; ++i)
    for (Index j = i + 1; j < 30; ++j) {
      const double r = (x.row(i) - x.row(j)).norm() - xz / zz * (z.row(i) - z.row(j)).norm();
      num += r * r;
    }
  const double ks = kruskal_stress(x, z);
  CHECK(std::abs(ks - std::sqrt(num / xx)) < 1e-12);
  CHECK(ks > 0);
  CHECK(ks <= 1);
  CHECK(kruskal_stress(x, test::euclidean(z)) == doctest::Approx(ks).epsilon(1e-12));

  CHECK(kruskal_stress(x, Points2(Points2::Zero(30, 2))) == 1);
  CHECK_THROWS_AS(kruskal_stress(Points2(Points2::Zero(30, 2)), z), DataError);
}

TEST_CASE("Rajski's distance") {
  // joint over 2 x 2 bins: (0,0) 1/4, (0,1) 1/4, (1,1) 1/2
  const RajskiResult toy = rajski_distance(std::vector<double>{0, 0, 1, 1}, std::vector<double>{0, 1, 1, 1}, 2);
  const double H = -(0.25 * std::log2(0.25) * 2 + 0.5 * std::log2(0.5));
  const double I = 0.25 * std::log2(0.25 / (0.5 * 0.25)) + 0.25 * std::log2(0.25 / (0.5 * 0.75)) +
                   0.5 * std::log2(0.5 / (0.5 * 0.75));
  CHECK(toy.rd == doctest::Approx(1 - I / H).epsilon(1e-12));
  CHECK_FALSE(toy.degenerate);

  const RajskiResult flat = rajski_distance(std::vector<double>(10, 2.0), std::vector<double>(10, 0.0));
  CHECK(flat.rd == 0);
  CHECK(flat.degenerate);

  // independent pair values give a distance near 1
  const Points2 x = test::random_points(200, 70, 10);
  std::vector<double> v, q;
  for (Index i = 0; i < 200; ++i)
    for (Index j = i + 1; j < 200; ++j) v.push_back((x.row(i) - x.row(j)).norm());
  q = v;
  std::shuffle(q.begin(), q.end(), std::mt19937_64(71));
  const RajskiResult indep = rajski_distance(v, q);
  CHECK(indep.rd > 0.9);
  CHECK(indep.rd <= 1);
  CHECK(rajski_distance(v, v).rd == doctest::Approx(0).epsilon(1e-12));
  CHECK_THROWS_AS(rajski_distance(v, std::vector<double>{}), DataError);
}

TEST_CASE("affine-optimal MAE") {
  const Points2 x = test::random_points(50, 72, 10);
  Points2 shifted = x;
  shifted.rowwise() += Eigen::RowVector2d(2, -3);
  const AffineFit f = optimal_affine_mae(shifted, x);
  CHECK((f.A - Eigen::Matrix2d::Identity()).norm() < 1e-9);
  CHECK((f.b - Eigen::Vector2d(-2, 3)).norm() < 1e-9);
  CHECK(f.mae < 1e-9);

  // residuals are orthogonal to the homogeneous chart coordinates
  const Points2 z = test::random_points(50, 73, 4);
  const AffineFit g = optimal_affine_mae(z, x);
  Eigen::MatrixXd Zh(50, 3);
  Zh << z, Eigen::VectorXd::Ones(50);
  const Eigen::MatrixXd residual = (z * g.A.transpose()).rowwise() + g.b.transpose() - x;
  CHECK((Zh.transpose() * residual).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(std::abs(g.errors.mean() - g.mae) < 1e-12);
  CHECK(std::abs(residual.rowwise().norm().mean() - g.mae) < 1e-12);

  std::mt19937_64 rng(74);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::Matrix2d M;
    M << n(rng), n(rng), n(rng), n(rng);
    if (std::abs(M.determinant()) < 0.1) continue;
    const Points2 w = affine(z, M, {n(rng), n(rng)});
    CHECK(optimal_affine_mae(w, x).mae == doctest::Approx(g.mae).epsilon(1e-9));
  }

  Points2 line(5, 2);
  line << 0, 0, 1, 1, 2, 2, 3, 3, 4, 4;
  try {
    optimal_affine_mae(line, x.topRows(5));
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("collinear") != std::string::npos);
  }
}

TEST_CASE("error CDF") {
  Eigen::VectorXd e(3);
  e << 3, 1, 2;
  const auto cdf = error_cdf(e);
  REQUIRE(cdf.size() == 3);
  CHECK(cdf[0] == std::pair<double, double>{1, 1.0 / 3});
  CHECK(cdf[1] == std::pair<double, double>{2, 2.0 / 3});
  CHECK(cdf[2] == std::pair<double, double>{3, 1.0});

  const auto flat = error_cdf(Eigen::VectorXd::Constant(4, 0.5));
  REQUIRE(flat.size() == 1);
  CHECK(flat[0].second == 1);

  Eigen::VectorXd r = Eigen::VectorXd::LinSpaced(101, 0, 1);
  std::shuffle(r.data(), r.data() + r.size(), std::mt19937_64(75));
  const auto c = error_cdf(r);
  for (std::size_t i = 1; i < c.size(); ++i) {
    CHECK(c[i].first > c[i - 1].first);
    CHECK(c[i].second > c[i - 1].second);
  }
  const auto median = std::find_if(c.begin(), c.end(), [](const auto& p) { return p.second >= 0.5; });
  CHECK(median->first == doctest::Approx(0.5));
  CHECK_THROWS_AS(error_cdf(Eigen::VectorXd()), std::invalid_argument);
}

TEST_CASE("neighborhood size") {
  CHECK(default_neighborhood(2000) == 100);
  CHECK(default_neighborhood(10) == 1);
  CHECK(default_neighborhood(30) == 2);
  CHECK_NOTHROW(validate_neighborhood(100, 66));
  CHECK_THROWS_AS(validate_neighborhood(100, 67), std::invalid_argument);
  CHECK_THROWS_AS(validate_neighborhood(100, 0), std::invalid_argument);
  const Points2 x = test::random_points(10, 76);
  CHECK_THROWS_AS(continuity_trustworthiness(x, x, 7), std::invalid_argument);
  CHECK_THROWS_AS(continuity_trustworthiness(x, Points2(x.topRows(9)), 1), DataError);
}

TEST_CASE("reports") {
  const Points2 x = test::random_points(40, 77, 10);
  ChannelChart chart;
  chart.z = x * 2;
  chart.method = "mds";
  chart.metric_tag = "G-ADP";
  const EvalReport r = evaluate_chart(x, chart);
  CHECK(r.K == 2);
  REQUIRE(r.mae.has_value());
  CHECK(*r.mae < 1e-9);
  CHECK(r.ct == doctest::Approx(1));
  const nlohmann::json j = r.to_json();
  CHECK(j["method"] == "mds");
  CHECK(j["metric"] == "G-ADP");
  CHECK(j["error_cdf"].size() >= 1);

  DissimilarityMatrix D = test::euclidean(x);
  D.tag = {Metric::Adp, true};
  const EvalReport m = evaluate_matrix(x, D, 3);
  CHECK(m.K == 3);
  CHECK_FALSE(m.mae.has_value());
  CHECK(m.metric_tag == "G-ADP");
  CHECK(m.to_json()["mae"].is_null());
  CHECK(m.ks < 1e-9);
}

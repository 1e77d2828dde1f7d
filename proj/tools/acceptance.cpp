// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "chartlab/dataset.hpp"
#include "chartlab/dissimilarity.hpp"
#include "chartlab/evaluation.hpp"
#include "chartlab/geodesic.hpp"
#include "chartlab/manifold.hpp"
#include "chartlab/neural.hpp"
#include "chartlab/parallel.hpp"
#include "chartlab/synth.hpp"
#include "helpers.hpp"

using namespace chartlab;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / std::max(1e-300, b.norm()); }
double rel(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return (a - b).norm() / std::max(1e-300, b.norm());
}

template <class M>
bool bit_equal(const M& a, const M& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(typename M::Scalar) * static_cast<std::size_t>(a.size())) == 0;
}

// ---- oracles ----

CsiTensor literal_time_domain(const CsiTensor& H) {
  const Index N = H.subcarriers();
  CsiTensor out(H.arrays(), H.antennas(), N);
  for (Index b = 0; b < H.arrays(); ++b)
    for (Index m = 0; m < H.antennas(); ++m)
      for (Index tau = 1; tau <= N; ++tau) {
        Complex acc = 0;
        for (Index n = 1; n <= N; ++n)
          acc += std::polar(1.0, 2 * std::numbers::pi * double(n - 1) * (double(tau) - double(N) / 2 - 1) / double(N)) *
                 H(b, m, n - 1);
        out(b, m, tau - 1) = acc / std::sqrt(double(N));
      }
  return out;
}

double naive_cosine_sum(const CsiTensor& a, const CsiTensor& b, Index n0, Index n1) {
  double total = 0;
  for (Index bb = 0; bb < a.arrays(); ++bb)
    for (Index n = n0; n <= n1; ++n) {
      double re = 0, im = 0, na = 0, nb = 0;
      for (Index m = 0; m < a.antennas(); ++m) {
        const Complex x = a(bb, m, n), y = b(bb, m, n);
        re += x.real() * y.real() + x.imag() * y.imag();
        im += x.real() * y.imag() - x.imag() * y.real();
        na += x.real() * x.real() + x.imag() * x.imag();
        nb += y.real() * y.real() + y.imag() * y.imag();
      }
      total += 1 - (re * re + im * im) / (na * nb);
    }
  return total;
}

double naive_cira(const CsiTensor& a, const CsiTensor& b, Index n0, Index n1) {
  double total = 0;
  for (Index bb = 0; bb < a.arrays(); ++bb)
    for (Index m = 0; m < a.antennas(); ++m)
      for (Index n = n0; n <= n1; ++n) total += std::abs(std::abs(a(bb, m, n)) - std::abs(b(bb, m, n)));
  return total;
}

Eigen::MatrixXd floyd_warshall(const KnnGraph& g) {
  const Index L = g.size();
  Eigen::MatrixXd d = Eigen::MatrixXd::Constant(L, L, std::numeric_limits<double>::infinity());
  for (Index i = 0; i < L; ++i) {
    d(i, i) = 0;
    for (const auto& e : g.adjacency[std::size_t(i)]) d(i, e.to) = std::min(d(i, e.to), e.weight);
  }
  for (Index k = 0; k < L; ++k)
    for (Index i = 0; i < L; ++i)
      for (Index j = 0; j < L; ++j) d(i, j) = std::min(d(i, j), d(i, k) + d(k, j));
  return d;
}

Index naive_rank(const Eigen::MatrixXd& d, Index l, Index i) {
  Index r = 1;
  for (Index j = 0; j < d.rows(); ++j)
    if (j != l && j != i && (d(l, j) < d(l, i) || (d(l, j) == d(l, i) && j < i))) ++r;
  return r;
}

std::pair<double, double> naive_ct_tw(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& rep, Index K) {
  const Index L = truth.rows();
  double c = 0, t = 0;
  for (Index l = 0; l < L; ++l)
    for (Index i = 0; i < L; ++i) {
      if (i == l) continue;
      const Index r = naive_rank(truth, l, i), rh = naive_rank(rep, l, i);
      if (r <= K) c += double(std::max<Index>(0, rh - K));
      if (rh <= K) t += double(std::max<Index>(0, r - K));
    }
  const double norm = 2.0 / (double(L) * double(K) * (2.0 * double(L) - 3.0 * double(K) - 1));
  return {1 - norm * c, 1 - norm * t};
}

Eigen::MatrixXd random_matrix(Index r, Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

Eigen::MatrixXd central_difference(const std::function<double(const Eigen::MatrixXd&)>& f, const Eigen::MatrixXd& x) {
  const double h = 1e-6;
  Eigen::MatrixXd g(x.rows(), x.cols());
  for (Index i = 0; i < x.size(); ++i) {
    Eigen::MatrixXd a = x, b = x;
    a.data()[i] += h;
    b.data()[i] -= h;
    g.data()[i] = (f(a) - f(b)) / (2 * h);
  }
  return g;
}

// ---- criteria ----

Outcome transform_oracle() {
  std::mt19937_64 rng(1);
  double worst = 0, parseval = 0;
  for (Index N : {2, 4, 8, 16, 32, 64}) {
    const CsiTensor H = test::random_tensor(4, 8, N, rng);
    const CsiTensor T = to_time_domain(H);
    worst = std::max(worst, rel(T.matrix(), literal_time_domain(H).matrix()));
    for (Index r = 0; r < H.matrix().rows(); ++r) {
      const double e0 = H.matrix().row(r).squaredNorm();
      parseval = std::max(parseval, std::abs(e0 - T.matrix().row(r).squaredNorm()) / e0);
    }
  }
  return {worst < 1e-12 && parseval < 1e-9, fmt("max rel err %.2e, Parseval %.2e", worst, parseval)};
}

Outcome metric_oracles() {
  const CsiDataset ds = test::random_dataset(201, 2, 4, 32, 2);
  const TimeDomainCache taps(ds);
  const TapWindow w{9, 24};
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<Index> pick(0, ds.size() - 1);
  double worst = 0;
  for (int p = 0; p < 100; ++p) {
    const Index i = pick(rng), j = pick(rng);
    auto err = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
    worst = std::max(worst, err(d_cs(ds, i, j), naive_cosine_sum(ds[i].H, ds[j].H, 0, 31)));
    worst = std::max(worst, err(d_adp(taps, i, j, w), naive_cosine_sum(taps[i], taps[j], 8, 23)));
    worst = std::max(worst, err(d_cira(taps, i, j, w), naive_cira(taps[i], taps[j], 8, 23)));
  }

  // invariances: per-vector complex scaling for CS/ADP, per-entry phase for CIRA
  double drift = 0;
  std::uniform_real_distribution<double> mag(0.1, 5), ph(-std::numbers::pi, std::numbers::pi);
  for (int trial = 0; trial < 20; ++trial) {
    const CsiTensor a = test::random_tensor(2, 4, 32, rng), b = test::random_tensor(2, 4, 32, rng);
    CsiTensor fa = a, ta = to_time_domain(a), pa = ta;
    for (Index bb = 0; bb < 2; ++bb)
      for (Index n = 0; n < 32; ++n) {
        const Complex c = std::polar(mag(rng), ph(rng)), d = std::polar(mag(rng), ph(rng));
        for (Index m = 0; m < 4; ++m) {
          fa(bb, m, n) *= c;
          ta(bb, m, n) *= d;
          pa(bb, m, n) *= std::polar(1.0, ph(rng));
        }
      }
    const CsiDataset f({{a, {0.0, 0.0}, 0}, {b, {1.0, 0.0}, 1}, {fa, {0.0, 0.0}, 2}});
    const CsiDataset t({{a, {0.0, 0.0}, 0}, {b, {1.0, 0.0}, 1}, {to_frequency_domain(ta), {0.0, 0.0}, 2},
                        {to_frequency_domain(pa), {0.0, 0.0}, 3}});
    const TimeDomainCache tc(t);
    const TapWindow all{1, 32};
    drift = std::max(drift, std::abs(d_cs(f, 2, 1) - d_cs(f, 0, 1)));
    drift = std::max(drift, std::abs(d_adp(tc, 2, 1, all) - d_adp(tc, 0, 1, all)));
    drift = std::max(drift, std::abs(d_cira(tc, 3, 1, all) - d_cira(tc, 0, 1, all)));
  }
  return {worst < 1e-12 && drift < 1e-9, fmt("max rel err %.2e, invariance drift %.2e", worst, drift)};
}

Outcome geodesic_oracle() {
  std::mt19937_64 rng(4);
  int graphs = 0;
  bool equal = true, triangle = true;
  for (int attempt = 0; graphs < 20 && attempt < 200; ++attempt) {
    const Index L = std::uniform_int_distribution<Index>(10, 200)(rng);
    const Index k = std::uniform_int_distribution<Index>(3, 12)(rng);
    DissimilarityMatrix D;
    D.values = Eigen::MatrixXd::Zero(L, L);
    std::uniform_int_distribution<int> wgt(1, 1000);
    for (Index i = 0; i < L; ++i)
      for (Index j = i + 1; j < L; ++j) D.values(i, j) = D.values(j, i) = wgt(rng);
    const KnnGraph g = build_knn_graph(D, k);
    if (component_sizes(g).size() > 1) continue;
    ++graphs;
    const DissimilarityMatrix G = geodesic_matrix(g);
    equal = equal && G.values == floyd_warshall(g);
    for (Index i = 0; i < L && triangle; ++i)
      for (Index j = 0; j < L && triangle; ++j)
        for (Index m = 0; m < L; ++m)
          if (G(i, j) > G(i, m) + G(m, j)) {
            triangle = false;
            break;
          }
  }
  return {graphs == 20 && equal && triangle,
          fmt("%d graphs, exact equality %s, triangle inequality %s", graphs, equal ? "yes" : "no",
              triangle ? "yes" : "no")};
}

Outcome embedder_recovery() {
  const Points2 x = test::random_points(100, 5, 10);
  const double ks_mds = kruskal_stress(x, mds(test::euclidean(x)).z);
  const Points2 grid = test::grid(20);
  const ChannelChart iso = isomap(test::euclidean(grid), 8);
  const double ks_iso = kruskal_stress(grid, iso.z);
  const double diameter = 19 * std::sqrt(2.0);
  const double mae = optimal_affine_mae(iso.z, grid).mae;
  return {ks_mds < 1e-3 && ks_iso < 0.02 && mae < 0.02 * diameter,
          fmt("MDS KS %.2e; Isomap grid KS %.4f, MAE %.3f%% of diameter", ks_mds, ks_iso, 100 * mae / diameter)};
}

Outcome gradient_suite() {
  double worst = 0;
  const DissimilarityMatrix D = test::euclidean(test::random_points(25, 6, 4));
  const Eigen::MatrixXd P = tsne_affinities(D, 5).P;
  for (int trial = 0; trial < 20; ++trial) {
    const Points2 z = test::random_points(25, 100 + trial, 3);
    Points2 g;
    auto as_points = [](const Eigen::MatrixXd& m) { return Points2(m); };
    mds_stress(D, z, &g);
    worst = std::max(worst, rel(g, central_difference([&](const Eigen::MatrixXd& y) { return mds_stress(D, as_points(y)); }, z)));
    sammon_stress(D, z, &g);
    worst = std::max(
        worst, rel(g, central_difference([&](const Eigen::MatrixXd& y) { return sammon_stress(D, as_points(y)); }, z)));
    tsne_kl(P, z, &g);
    worst = std::max(worst, rel(g, central_difference([&](const Eigen::MatrixXd& y) { return tsne_kl(P, as_points(y)); }, z)));

    const Eigen::MatrixXd zi = random_matrix(2, 9, 200 + trial), zj = random_matrix(2, 9, 300 + trial),
                          zk = random_matrix(2, 9, 400 + trial);
    const Eigen::VectorXd d = random_matrix(9, 1, 500 + trial).cwiseAbs();
    Eigen::MatrixXd gi, gj, gk;
    siamese_loss(zi, zj, d, &gi, &gj);
    worst = std::max(worst, rel(gi, central_difference([&](const Eigen::MatrixXd& y) { return siamese_loss(y, zj, d); }, zi)));
    worst = std::max(worst, rel(gj, central_difference([&](const Eigen::MatrixXd& y) { return siamese_loss(zi, y, d); }, zj)));

    bool near_hinge = false;
    for (Index t = 0; t < 9; ++t)
      near_hinge = near_hinge || std::abs((zi.col(t) - zj.col(t)).norm() - (zi.col(t) - zk.col(t)).norm() + 0.5) < 1e-4;
    if (!near_hinge) {
      triplet_loss(zi, zj, zk, 0.5, &gi, &gj, &gk);
      worst = std::max(worst, rel(gi, central_difference([&](const Eigen::MatrixXd& y) { return triplet_loss(y, zj, zk, 0.5); }, zi)));
      worst = std::max(worst, rel(gj, central_difference([&](const Eigen::MatrixXd& y) { return triplet_loss(zi, y, zk, 0.5); }, zj)));
      worst = std::max(worst, rel(gk, central_difference([&](const Eigen::MatrixXd& y) { return triplet_loss(zi, zj, y, 0.5); }, zk)));
    }

    const Eigen::RowVectorXd pred = random_matrix(1, 11, 600 + trial);
    const Eigen::VectorXd dt = random_matrix(11, 1, 700 + trial).cwiseAbs() * 10;
    Eigen::RowVectorXd gd;
    dissimilarity_loss(pred, dt, 1.0, &gd);
    worst = std::max(worst, rel(gd, central_difference(
                                        [&](const Eigen::MatrixXd& y) { return dissimilarity_loss(Eigen::RowVectorXd(y), dt, 1.0); },
                                        pred)));

    // network backward pass, with batch norm
    Mlp net({5, 7, 6, 2}, true, 800 + trial);
    Eigen::VectorXd p0 = net.parameters();
    p0 += 0.1 * random_matrix(p0.size(), 1, 900 + trial);
    net.set_parameters(p0);
    const Eigen::MatrixXd in = random_matrix(5, 9, 1000 + trial), wout = random_matrix(2, 9, 1100 + trial);
    const Eigen::VectorXd gp = backward(net, forward_train(net, in), wout);
    worst = std::max(worst, rel(gp, central_difference(
                                        [&](const Eigen::MatrixXd& p) {
                                          Mlp m = net;
                                          m.set_parameters(p);
                                          return (forward_train(m, in).output.array() * wout.array()).sum();
                                        },
                                        p0)));
  }
  return {worst < 1e-4, fmt("max rel err %.2e over MDS, Sammon, t-SNE, siamese, triplet, dissimilarity, network", worst)};
}

Outcome tsne_contract() {
  double perp_err = 0, sum_err = 0;
  bool decreased = true;
  for (const auto& D : test::corpus()) {
    const double perp = std::min(10.0, double(D.size()) / 3.0 - 1);
    const TsneAffinities a = tsne_affinities(D, perp);
    perp_err = std::max(perp_err, ((a.perplexity.array() - perp).abs() / perp).maxCoeff());
    sum_err = std::max(sum_err, std::abs(a.P.sum() - 1));
    EmbedConfig cfg = default_embed_config("tsne");
    cfg.perplexity = perp;
    cfg.iterations = 500;
    const ChannelChart c = tsne(D, cfg);
    decreased = decreased && c.objective_trace.back() < c.objective_trace.front();
  }
  return {perp_err < 1e-3 && sum_err < 1e-12 && decreased,
          fmt("perplexity rel err %.2e, |sum P - 1| %.2e, KL decreased on all corpus matrices: %s", perp_err, sum_err,
              decreased ? "yes" : "no")};
}

Outcome evaluation_identities() {
  const Points2 x = test::random_points(100, 7, 10);
  Eigen::Matrix2d R;
  R << std::cos(0.8), -std::sin(0.8), std::sin(0.8), std::cos(0.8);
  Eigen::Matrix2d A;
  A << 2.0, 0.7, -0.3, 1.4;
  const Points2 similar = ((x * (2.5 * R).transpose()).rowwise() + Eigen::RowVector2d(4, -1));
  const Points2 affine = ((x * A.transpose()).rowwise() + Eigen::RowVector2d(-3, 2));
  double worst = 0;
  for (const Points2* z : {&x, &similar}) {
    const auto s = continuity_trustworthiness(x, *z, 5);
    worst = std::max({worst, 1 - s.ct, 1 - s.tw, kruskal_stress(x, *z), rajski_distance(x, *z).rd});
  }
  const double mae = std::max(optimal_affine_mae(affine, x).mae, optimal_affine_mae(similar, x).mae);

  double oracle = 0;
  for (int trial = 0; trial < 5; ++trial) {
    const Index L = 40 + 15 * trial;
    const Points2 t = test::random_points(L, 20 + trial, 10), r = test::random_points(L, 30 + trial, 3);
    const auto s = continuity_trustworthiness(t, r, 1 + trial);
    const auto [c, w] = naive_ct_tw(test::euclidean(t).values, test::euclidean(r).values, 1 + trial);
    oracle = std::max({oracle, std::abs(s.ct - c), std::abs(s.tw - w)});
  }
  return {worst < 1e-9 && mae < 1e-9 && oracle < 1e-12,
          fmt("identity deviation %.2e, affine MAE %.2e, CT/TW oracle diff %.2e", worst, mae, oracle)};
}

// Desk scene shared by the end-to-end criteria.
struct Desk {
  SceneSpec scene = SceneSpec::desk();
  CsiDataset ds;
  TapWindow window;
  PairwiseParams params;
  DissimilarityMatrix adp, time;

  Desk() {
    ds = synthesize_csi(scene, generate_trajectory(TrajectorySpec::desk()));
    window = default_tap_window(scene);
    params.window = window;
    adp = pairwise_matrix(ds, Metric::Adp, params);
    time = pairwise_matrix(ds, Metric::Time, params);
  }
};

struct ChartScore {
  EvalReport report;
  double gamma = 0;
};

ChartScore isomap_score(const Points2& truth, const DissimilarityMatrix& D) {
  // Isomap: k-NN geodesic lifting with component repair, then classical MDS
  const ChannelChart c = mds(geodesic(D, {20, true}));
  return {evaluate_chart(truth, c), 0};
}

ChartScore fused_score(const CsiDataset& ds, const DissimilarityMatrix& adp, const DissimilarityMatrix& time) {
  const GammaCalibration cal = calibrate_gamma(ds, adp, 2.0);
  ChartScore s = isomap_score(ds.positions(), fuse_matrices(adp, time, {cal.gamma, 2.0}));
  s.gamma = cal.gamma;
  return s;
}

Outcome synthetic_end_to_end(const Desk& d, ChartScore& adp_out) {
  const double diameter = d.scene.diameter();
  adp_out = isomap_score(d.ds.positions(), d.adp);
  const ChartScore fuse = fused_score(d.ds, d.adp, d.time);
  const auto& a = adp_out.report;
  const bool pass = d.ds.size() == 2000 && *a.mae < 0.1 * diameter && a.ct >= 0.9 && a.tw >= 0.9 &&
                    *fuse.report.mae <= *a.mae;
  return {pass, fmt("L=%lld; G-ADP MAE %.3f m (%.2f%% of %.2f m), CT %.4f, TW %.4f; G-fuse (gamma %.2f) MAE %.3f m "
                    "(%.2f%%), needs <= G-ADP",
                    static_cast<long long>(d.ds.size()), *a.mae, 100 * *a.mae / diameter, diameter, a.ct, a.tw,
                    fuse.gamma, *fuse.report.mae, 100 * *fuse.report.mae / diameter)};
}

Outcome nlos_ablation(const Desk& d, const ChartScore& los_adp) {
  const double diameter = d.scene.diameter();
  // array index 1 is the one the container hides from the upper arm
  const CsiDataset nlos = drop_arrays(d.ds, {1});
  const DissimilarityMatrix adp = pairwise_matrix(nlos, Metric::Adp, d.params);
  const Points2 x = d.ds.positions();
  const double ks_los = evaluate_matrix(x, geodesic(d.adp, {20, true})).ks;
  const double ks_nlos = evaluate_matrix(x, geodesic(adp, {20, true})).ks;
  const ChartScore a = isomap_score(x, adp);
  const ChartScore f = fused_score(nlos, adp, d.time);
  const bool pass = ks_nlos > ks_los && *f.report.mae < 0.2 * diameter;
  return {pass, fmt("G-ADP matrix KS %.4f -> %.4f (chart KS %.4f -> %.4f); NLoS G-fuse (gamma %.2f) MAE %.3f m "
                    "(%.2f%% of diameter)",
                    ks_los, ks_nlos, los_adp.report.ks, a.report.ks, f.gamma, *f.report.mae,
                    100 * *f.report.mae / diameter)};
}

Outcome triplet_validity(const Desk& d) {
  std::vector<Index> train, held_out;
  for (Index l = 0; l < d.ds.size(); ++l) (l % 2 ? held_out : train).push_back(l);
  const CsiDataset tr = select_points(d.ds, train), te = select_points(d.ds, held_out);
  const DissimilarityMatrix G = geodesic(pairwise_matrix(tr, Metric::Adp, d.params), {20, true});
  const Points2 x = tr.positions();

  ChartTrainConfig cfg;
  cfg.window = d.window;
  cfg.epochs = 10;
  cfg.triplets_per_point = 8;
  Index valid = 0, total = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const TripletSet set = select_triplets(G, scheduled_q(cfg, epoch), 2000, 50 + std::uint64_t(epoch));
    for (const auto& [i, j, k] : set.triplets) valid += (x.row(i) - x.row(j)).norm() < (x.row(i) - x.row(k)).norm();
    total += Index(set.size());
  }
  const double fraction = double(valid) / double(total);

  const TrainResult r = train_triplet(tr, G, cfg);
  const EvalReport ev = evaluate_chart(te.positions(), predict_chart(r.model, te));
  return {fraction >= 0.9 && ev.ct >= 0.85 && ev.tw >= 0.85,
          fmt("%.2f%% of triplets valid (q %.2f..%.2f); held-out CT %.4f, TW %.4f", 100 * fraction, cfg.q_start,
              cfg.q_end, ev.ct, ev.tw)};
}

Outcome determinism(const Desk& d) {
  std::vector<Index> subset;
  for (Index l = 0; l < d.ds.size(); l += 5) subset.push_back(l);
  const CsiDataset small = select_points(d.ds, subset);
  std::vector<std::string> differ;
  auto run = [&](int threads) {
    set_thread_count(threads);
    std::vector<Eigen::MatrixXd> out;
    const DissimilarityMatrix adp = pairwise_matrix(small, Metric::Adp, d.params);
    out.push_back(adp.values);
    const KnnGraph g = build_knn_graph(adp, 20);
    out.push_back(geodesic_matrix(g).values);
    for (const std::string method : {"mds", "isomap", "sammon", "tsne"}) {
      EmbedConfig cfg = default_embed_config(method);
      cfg.iterations = 300;
      cfg.perplexity = 30;
      cfg.seed = 3;
      out.push_back(embed(method, adp, cfg, 20).z);
    }
    return out;
  };
  const auto serial = run(1), parallel = run(8);
  set_thread_count(1);
  const char* names[] = {"pairwise_matrix", "geodesic_matrix", "mds", "isomap", "sammon", "tsne"};
  for (std::size_t i = 0; i < serial.size(); ++i)
    if (!bit_equal(serial[i], parallel[i])) differ.push_back(names[i]);
  std::string detail = fmt("L=%lld, 1 vs 8 threads over pairwise_matrix, geodesic_matrix, mds, isomap, sammon, tsne",
                           static_cast<long long>(small.size()));
  for (const auto& n : differ) detail += "; differs: " + n;
  return {differ.empty(), detail};
}

}  // namespace

int main() {
  set_thread_count(1);
  int failures = 0;
  auto report = [&](int id, const char* name, double budget_s, const std::function<Outcome()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string timing = fmt("%.1f s", secs);
    if (budget_s > 0) {
      timing += fmt(" of %.0f s", budget_s);
      if (secs > budget_s) {
        o.pass = false;
        timing += ", over budget";
      }
    }
    if (!o.pass) ++failures;
    std::printf("criterion %2d %s  %s: %s (%s)\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str(),
                timing.c_str());
    std::fflush(stdout);
  };

  report(1, "transform oracle", 1, transform_oracle);
  report(2, "metric oracles", 10, metric_oracles);
  report(3, "geodesic oracle", 30, geodesic_oracle);
  report(4, "embedder recovery", 120, embedder_recovery);
  report(5, "gradient suite", 60, gradient_suite);
  report(6, "t-SNE contract", 0, tsne_contract);
  report(7, "evaluation identities", 0, evaluation_identities);

  const auto t0 = std::chrono::steady_clock::now();
  std::unique_ptr<Desk> desk;
  std::string setup_error;
  try {
    desk = std::make_unique<Desk>();
  } catch (const std::exception& e) {
    setup_error = e.what();
  }
  const double setup = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  auto needs_desk = [&](auto f) {
    return [&, f]() -> Outcome {
      if (!desk) return {false, "desk scene setup failed: " + setup_error};
      return f();
    };
  };
  ChartScore los_adp;
  // synthesis and the pairwise matrices count against the end-to-end budget
  report(8, "synthetic end-to-end", 600 - setup,
         needs_desk([&] { return synthetic_end_to_end(*desk, los_adp); }));
  report(9, "NLoS ablation", 0, needs_desk([&] {
           if (!los_adp.report.mae) los_adp = isomap_score(desk->ds.positions(), desk->adp);
           return nlos_ablation(*desk, los_adp);
         }));
  report(10, "triplet validity", 0, needs_desk([&] { return triplet_validity(*desk); }));
  report(11, "determinism", 0, needs_desk([&] { return determinism(*desk); }));

  std::printf("%d of 11 criteria passed\n", 11 - failures);
  return failures == 0 ? 0 : 1;
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "sgasmix/em.hpp"
#include "sgasmix/errors.hpp"
#include "sgasmix/metrics.hpp"
#include "sgasmix/rng.hpp"

using namespace sgasmix;

namespace {

SgasComponent make_comp(double alpha, Eigen::Vector2d mu, Eigen::Matrix2d sigma,
                        double w) {
  SgasComponent c;
  c.alpha = alpha;
  c.mu = mu;
  c.sigma = sigma;
  c.w = w;
  return c;
}

MixtureModel two_blob_truth(double sep, double alpha) {
  MixtureModel m;
  m.d = 2;
  m.components = {
      make_comp(alpha, {0.0, 0.0}, Eigen::Matrix2d::Identity(), 0.5),
      make_comp(alpha, {sep, 0.0}, Eigen::Matrix2d::Identity(), 0.5)};
  return m;
}

// snap to a dyadic grid so that adding a dyadic constant stays exact
Eigen::MatrixXd snap(Eigen::MatrixXd m) {
  for (long i = 0; i < m.rows(); ++i)
    for (long j = 0; j < m.cols(); ++j)
      m(i, j) = std::round(m(i, j) * 1024.0) / 1024.0;
  return m;
}

}  // namespace

TEST_CASE("m_step_weights matches hand values and column means") {
  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(10, 2);
  for (int i = 0; i < 3; ++i) onehot(i, 0) = 1.0;
  for (int i = 3; i < 10; ++i) onehot(i, 1) = 1.0;
  Eigen::VectorXd w = m_step_weights(onehot);
  CHECK(w[0] == 0.3);
  CHECK(w[1] == 0.7);

  Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(6, 4, 0.25);
  Eigen::VectorXd wu = m_step_weights(uniform);
  for (int j = 0; j < 4; ++j) CHECK(wu[j] == 0.25);

  Rng rng(5);
  Eigen::MatrixXd soft(100, 3);
  for (int i = 0; i < 100; ++i) {
    double a = rng.uniform(), b = rng.uniform(), c = rng.uniform();
    double s = a + b + c;
    soft.row(i) << a / s, b / s, c / s;
  }
  Eigen::VectorXd ws = m_step_weights(soft);
  for (int j = 0; j < 3; ++j) {
    double acc = 0.0;
    for (int i = 0; i < 100; ++i) acc += soft(i, j);
    CHECK(ws[j] == doctest::Approx(acc / 100).epsilon(1e-14));
  }
  CHECK(ws.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("m_step_locations with unit e2 and one-hot e1 gives group means") {
  Rng rng(11);
  Eigen::MatrixXd data(8, 2);
  for (int i = 0; i < 8; ++i) data.row(i) << rng.normal(), rng.normal();
  Responsibilities resp;
  resp.e1 = Eigen::MatrixXd::Zero(8, 2);
  for (int i = 0; i < 8; ++i) resp.e1(i, i < 3 ? 0 : 1) = 1.0;
  resp.e2 = Eigen::MatrixXd::Ones(8, 2);
  auto mu = m_step_locations(data, resp);
  CHECK((mu[0] - data.topRows(3).colwise().mean().transpose()).norm() < 1e-14);
  CHECK((mu[1] - data.bottomRows(5).colwise().mean().transpose()).norm() < 1e-14);

  // a single observation per group is returned verbatim
  Responsibilities single;
  single.e1 = Eigen::MatrixXd::Identity(2, 2);
  single.e2 = Eigen::MatrixXd::Ones(2, 2);
  auto mu1 = m_step_locations(data.topRows(2), single);
  CHECK((mu1[0] - data.row(0).transpose()).norm() == 0.0);
  CHECK((mu1[1] - data.row(1).transpose()).norm() == 0.0);
}

TEST_CASE("an outlier is pulled in less than the plain mean would be") {
  Rng rng(21);
  Eigen::MatrixXd data(21, 2);
  for (int i = 0; i < 20; ++i) data.row(i) << 0.3 * rng.normal(), 0.3 * rng.normal();
  data.row(20) << 10.0, 0.0;

  MixtureModel m;
  m.d = 2;
  m.components = {make_comp(1.3, {0.0, 0.0}, Eigen::Matrix2d::Identity(), 1.0)};
  Responsibilities resp = e_step(data, m);
  // heavier Mahalanobis distance must mean smaller conditional 1/P
  CHECK(resp.e2(20, 0) < resp.e2.col(0).head(20).minCoeff());

  auto mu = m_step_locations(data, resp);
  Eigen::Vector2d inlier = data.topRows(20).colwise().mean().transpose();
  Eigen::Vector2d plain = data.colwise().mean().transpose();
  CHECK((mu[0] - inlier).norm() < (plain - inlier).norm());
}

TEST_CASE("e_step basics: K=1 column of ones, symmetric split, separation") {
  Rng rng(31);
  Eigen::MatrixXd data(40, 2);
  for (int i = 0; i < 40; ++i) data.row(i) << rng.normal(), rng.normal();
  MixtureModel one;
  one.d = 2;
  one.components = {make_comp(1.5, {0.0, 0.0}, Eigen::Matrix2d::Identity(), 1.0)};
  Responsibilities r1 = e_step(data, one);
  for (int i = 0; i < 40; ++i) CHECK(r1.e1(i, 0) == 1.0);
  for (int i = 0; i < 40; ++i) CHECK(r1.e2(i, 0) > 0.0);

  // mirrored components, equidistant point: exact half/half by symmetry
  MixtureModel mirror = two_blob_truth(4.0, 1.4);
  mirror.components[0].mu << -2.0, 0.0;
  mirror.components[1].mu << 2.0, 0.0;
  Eigen::MatrixXd pts(2, 2);
  pts << 0.0, 0.7, 0.0, -3.1;
  Responsibilities r2 = e_step(pts, mirror);
  CHECK(r2.e1(0, 0) == 0.5);
  CHECK(r2.e1(0, 1) == 0.5);
  CHECK(r2.e1(1, 0) == 0.5);

  // point sitting at one location of a well-separated pair; the direct
  // density ratio is the oracle for epsilon
  MixtureModel sep;
  sep.d = 2;
  sep.components = {
      make_comp(1.7, {0.0, 3.0},
                (Eigen::Matrix2d() << 2.0, 0.5, 0.5, 0.5).finished(), 0.5),
      make_comp(1.7, {7.0, -2.0}, Eigen::Matrix2d::Identity(), 0.5)};
  Eigen::MatrixXd at_mu(1, 2);
  at_mu << 0.0, 3.0;
  Responsibilities r3 = e_step(at_mu, sep);
  double f1 = sgas_pdf(sep.components[0], at_mu.row(0).transpose());
  double f2 = sgas_pdf(sep.components[1], at_mu.row(0).transpose());
  double eps = 0.5 * f2 / (0.5 * f1 + 0.5 * f2);
  CHECK(eps < 1e-3);
  CHECK(r3.e1(0, 1) == doctest::Approx(eps).epsilon(1e-8));
  CHECK(r3.e1(0, 0) > 1.0 - 1e-3);

  // rows sum to one
  for (int i = 0; i < 2; ++i)
    CHECK(r2.e1.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("hard assignment at the generating model separates two blobs") {
  MixtureModel truth = two_blob_truth(8.0, 1.7);
  Rng rng(77);
  std::vector<int> lab;
  Eigen::MatrixXd data = sample_mixture(truth, 200, rng, &lab);
  Responsibilities resp = e_step(data, truth);
  std::vector<int> hard = assign_groups(resp.e1);
  CHECK(ari(hard, lab) > 0.9);
}

TEST_CASE("initialize: K=1 gives global medians and trimmed scatter") {
  Rng rng(41);
  Eigen::MatrixXd data(30, 2);
  for (int i = 0; i < 30; ++i) data.row(i) << rng.normal() + 1.0, 2.0 * rng.normal();
  MixtureModel m = initialize(data, 1, 9);
  CHECK(m.k() == 1);
  CHECK(m.components[0].w == 1.0);

  for (int c = 0; c < 2; ++c) {
    std::vector<double> col(30);
    for (int i = 0; i < 30; ++i) col[i] = data(i, c);
    std::sort(col.begin(), col.end());
    CHECK(m.components[0].mu[c] == 0.5 * (col[14] + col[15]));
  }

  // independent recomputation of the 80% trimmed scatter
  Eigen::Vector2d mu = m.components[0].mu;
  std::vector<std::pair<double, int>> order;
  for (int i = 0; i < 30; ++i)
    order.push_back({(data.row(i).transpose() - mu).squaredNorm(), i});
  std::sort(order.begin(), order.end());
  int keep = static_cast<int>(std::ceil(0.8 * 30));
  Eigen::Matrix2d s = Eigen::Matrix2d::Zero();
  for (int i = 0; i < keep; ++i) {
    Eigen::Vector2d diff = data.row(order[i].second).transpose() - mu;
    s += diff * diff.transpose();
  }
  s /= keep;
  CHECK((m.components[0].sigma - s).norm() < 1e-12);
}

TEST_CASE("initialize: two separated blobs recover the blob partition") {
  Rng rng(43);
  Eigen::MatrixXd data(100, 2);
  for (int i = 0; i < 40; ++i) data.row(i) << 0.5 * rng.normal(), 0.5 * rng.normal();
  for (int i = 40; i < 100; ++i)
    data.row(i) << 9.0 + 0.5 * rng.normal(), 0.5 * rng.normal();
  MixtureModel m = initialize(data, 2, 3);
  double w_small = std::min(m.components[0].w, m.components[1].w);
  CHECK(w_small == doctest::Approx(0.4).epsilon(1e-12));
  int near_origin = (m.components[0].mu.norm() < m.components[1].mu.norm()) ? 0 : 1;
  CHECK(m.components[near_origin].mu.norm() < 1.0);
  CHECK((m.components[1 - near_origin].mu - Eigen::Vector2d(9, 0)).norm() < 1.0);
}

TEST_CASE("initialize survives duplicate-heavy data") {
  Eigen::MatrixXd data(9, 2);
  for (int i = 0; i < 7; ++i) data.row(i) << 1.0, 1.0;
  data.row(7) << 4.0, 4.0;
  data.row(8) << -2.0, 0.5;
  MixtureModel m = initialize(data, 3, 1);
  CHECK(m.k() == 3);
  double wsum = 0.0;
  for (const auto& c : m.components) {
    wsum += c.w;
    CHECK(c.sigma.determinant() > 0.0);
  }
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(initialize(data, 10, 1), input_error);
}

TEST_CASE("single-component fit recovers the generator") {
  SgasComponent truth = make_comp(
      1.6, {1.0, -2.0}, (Eigen::Matrix2d() << 1.0, 0.3, 0.3, 0.8).finished(), 1.0);
  MixtureModel gen;
  gen.d = 2;
  gen.components = {truth};
  Rng rng(101);
  Eigen::MatrixXd data = sample_mixture(gen, 500, rng);

  FitConfig cfg;
  cfg.k = 1;
  cfg.seed = 13;
  FitResult res = fit(data, cfg);
  CHECK(res.model.components[0].w == 1.0);
  CHECK((res.model.components[0].mu - truth.mu).cwiseAbs().maxCoeff() < 0.15);
  CHECK(std::abs(res.model.components[0].alpha - 1.6) < 0.2);
  CHECK((res.model.components[0].sigma - truth.sigma).norm() < 0.35);
  CHECK(static_cast<int>(res.trace.size()) == cfg.iters);
  CHECK(res.labels == std::vector<int>(500, 0));
  CHECK(res.bic == doctest::Approx(model_bic(res.model, res.loglik, 500)));
}

TEST_CASE("burnin = iters-1 returns the single last iterate") {
  MixtureModel truth = two_blob_truth(7.0, 1.5);
  Rng rng(55);
  Eigen::MatrixXd data = sample_mixture(truth, 120, rng);
  FitConfig cfg;
  cfg.k = 2;
  cfg.seed = 4;
  cfg.iters = 3;
  cfg.burnin = 2;
  FitResult res = fit(data, cfg);
  REQUIRE(static_cast<int>(res.trace.size()) == 3);
  const auto& last = res.trace.back().components;
  for (int j = 0; j < 2; ++j) {
    CHECK(std::abs(res.model.components[j].w - last[j].w) < 1e-14);
    CHECK(res.model.components[j].alpha == last[j].alpha);
    CHECK((res.model.components[j].mu - last[j].mu).norm() == 0.0);
    CHECK((res.model.components[j].sigma - last[j].sigma).norm() < 1e-14);
  }
}

TEST_CASE("permuting a warm start permutes the fit identically") {
  MixtureModel truth = two_blob_truth(8.0, 1.6);
  Rng rng(66);
  Eigen::MatrixXd data = sample_mixture(truth, 150, rng);

  MixtureModel init = initialize(data, 2, 17);
  MixtureModel swapped = init;
  std::swap(swapped.components[0], swapped.components[1]);

  FitConfig cfg;
  cfg.k = 2;
  cfg.seed = 99;
  cfg.iters = 5;
  cfg.burnin = 2;
  cfg.init = init;
  FitResult a = fit(data, cfg);
  cfg.init = swapped;
  FitResult b = fit(data, cfg);

  CHECK(a.loglik == b.loglik);
  for (int j = 0; j < 2; ++j) {
    CHECK((a.model.components[j].mu - b.model.components[1 - j].mu).norm() == 0.0);
    CHECK((a.model.components[j].sigma - b.model.components[1 - j].sigma).norm() ==
          0.0);
    CHECK(a.model.components[j].alpha == b.model.components[1 - j].alpha);
    CHECK(a.model.components[j].w == b.model.components[1 - j].w);
  }
  for (std::size_t i = 0; i < a.labels.size(); ++i)
    CHECK(a.labels[i] == 1 - b.labels[i]);
}

TEST_CASE("shifting the data shifts locations and nothing else") {
  MixtureModel truth = two_blob_truth(7.0, 1.6);
  Rng rng(88);
  Eigen::MatrixXd data = snap(sample_mixture(truth, 160, rng));
  Eigen::Vector2d c(16.5, -8.25);
  Eigen::MatrixXd shifted = data;
  shifted.rowwise() += c.transpose();

  FitConfig cfg;
  cfg.k = 2;
  cfg.seed = 7;
  cfg.iters = 6;
  cfg.burnin = 3;
  FitResult a = fit(data, cfg);
  FitResult b = fit(shifted, cfg);

  for (int j = 0; j < 2; ++j) {
    CHECK((b.model.components[j].mu - a.model.components[j].mu - c).norm() < 1e-6);
    CHECK((b.model.components[j].sigma - a.model.components[j].sigma).norm() < 1e-6);
    CHECK(std::abs(b.model.components[j].alpha - a.model.components[j].alpha) <
          1e-6);
    CHECK(std::abs(b.model.components[j].w - a.model.components[j].w) < 1e-6);
  }
  CHECK(a.labels == b.labels);
}

TEST_CASE("near-Gaussian tail index reproduces a Gaussian EM iteration") {
  // antipodal pairs around two centres so the scale reweighting cancels
  const double sep = 8.0;
  Rng rng(123);
  Eigen::MatrixXd data(100, 2);
  int row = 0;
  for (int blob = 0; blob < 2; ++blob) {
    double cx = blob * sep;
    for (int pair = 0; pair < 25; ++pair) {
      double theta = 2.0 * M_PI * rng.uniform();
      double r = 0.3 + 1.5 * rng.uniform();
      data.row(row++) << cx + r * std::cos(theta), r * std::sin(theta);
      data.row(row++) << cx - r * std::cos(theta), -r * std::sin(theta);
    }
  }

  MixtureModel model = two_blob_truth(sep, 1.98);
  Responsibilities resp = e_step(data, model);
  Eigen::VectorXd w = m_step_weights(resp.e1);
  auto mu = m_step_locations(data, resp);

  // textbook Gaussian mixture E + M on the same configuration
  Eigen::MatrixXd gamma(100, 2);
  for (int i = 0; i < 100; ++i) {
    double num[2];
    for (int j = 0; j < 2; ++j) {
      Eigen::Vector2d diff = data.row(i).transpose() - model.components[j].mu;
      num[j] = model.components[j].w * std::exp(-0.5 * diff.squaredNorm());
    }
    gamma(i, 0) = num[0] / (num[0] + num[1]);
    gamma(i, 1) = num[1] / (num[0] + num[1]);
  }
  Eigen::Vector2d wg = gamma.colwise().mean().transpose();
  for (int j = 0; j < 2; ++j) {
    CHECK(std::abs(w[j] - wg[j]) < 1e-3);
    Eigen::Vector2d mg = Eigen::Vector2d::Zero();
    double den = 0.0;
    for (int i = 0; i < 100; ++i) {
      mg += gamma(i, j) * data.row(i).transpose();
      den += gamma(i, j);
    }
    mg /= den;
    CHECK((mu[j] - mg).cwiseAbs().maxCoeff() < 1e-3);
  }
}

TEST_CASE("select_k skips undersized settings and keeps the best") {
  Rng rng(31);
  Eigen::MatrixXd data(5, 2);
  for (int i = 0; i < 5; ++i) data.row(i) << rng.normal(), rng.normal();
  FitConfig cfg;
  cfg.seed = 3;
  cfg.iters = 2;
  cfg.burnin = 1;
  SelectKResult res = select_k(data, 1, 2, cfg);
  REQUIRE(res.table.size() == 2);
  CHECK(res.table[0].ok);
  CHECK_FALSE(res.table[1].ok);
  CHECK(res.table[1].note.find("skip") != std::string::npos);
  CHECK(res.best.model.k() == 1);
}

TEST_CASE("config and data validation errors") {
  Eigen::MatrixXd data(10, 2);
  data.setZero();
  data(3, 1) = std::nan("");
  FitConfig cfg;
  cfg.k = 1;
  CHECK_THROWS_AS(fit(data, cfg), input_error);

  FitConfig bad;
  bad.k = 0;
  CHECK_THROWS_AS(bad.validate(), input_error);
  bad.k = 1;
  bad.burnin = 70;
  CHECK_THROWS_AS(bad.validate(), input_error);
  bad.burnin = 40;
  bad.alpha_pin = 2.5;
  CHECK_THROWS_AS(bad.validate(), input_error);

  Eigen::MatrixXd tiny(3, 2);
  tiny.setRandom();
  FitConfig c2;
  c2.k = 2;
  CHECK_THROWS_AS(fit(tiny, c2), input_error);
}

#include "sgasmix/em.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <memory>
#include <mutex>
#include <numeric>
#include <thread>

#include "sgasmix/errors.hpp"
#include "sgasmix/metrics.hpp"

namespace sgasmix {

namespace {

constexpr double kEigFloor = 1e-8;

// chunked parallel map; results must not depend on the chunking
template <typename Fn>
void parallel_for(long n, int threads, Fn&& fn) {
  if (threads <= 0) {
    unsigned hw = std::thread::hardware_concurrency();
    threads = hw == 0 ? 1 : static_cast<int>(hw);
  }
  threads = static_cast<int>(std::min<long>(threads, n));
  if (threads <= 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  long chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    long lo = t * chunk;
    long hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn, &first_error, &error_mutex] {
      try {
        for (long i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::uint64_t stream_tag(int restart, int iter, int phase) {
  return (static_cast<std::uint64_t>(restart) << 32) |
         static_cast<std::uint64_t>(3 * iter + phase);
}

constexpr std::uint64_t kInitPhase = 2;  // shares the iter=0 slot

struct ComponentWork {
  ComponentKernel kernel;
  PositiveStableLaw law;
  ComponentWork(const SgasComponent& c)
      : kernel(c.sigma), law(c.alpha) {}
};

// greedy matching of new components onto the previous ordering by location
std::vector<int> greedy_mu_match(const std::vector<SgasComponent>& prev,
                                 const std::vector<SgasComponent>& cur) {
  int k = static_cast<int>(prev.size());
  Eigen::MatrixXd dist(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b)
      dist(a, b) = (prev[a].mu - cur[b].mu).norm();
  std::vector<int> match(k, -1);
  std::vector<bool> row_used(k, false), col_used(k, false);
  for (int step = 0; step < k; ++step) {
    double best = std::numeric_limits<double>::infinity();
    int ba = -1, bb = -1;
    for (int a = 0; a < k; ++a) {
      if (row_used[a]) continue;
      for (int b = 0; b < k; ++b) {
        if (col_used[b]) continue;
        if (dist(a, b) < best) {
          best = dist(a, b);
          ba = a;
          bb = b;
        }
      }
    }
    match[ba] = bb;
    row_used[ba] = true;
    col_used[bb] = true;
  }
  return match;  // match[prev slot] = index into cur
}

Eigen::MatrixXd floor_eigenvalues(const Eigen::MatrixXd& sym, bool* floored) {
  Eigen::LLT<Eigen::MatrixXd> llt(sym);
  if (llt.info() == Eigen::Success &&
      llt.matrixLLT().diagonal().minCoeff() > 1e-154) {
    *floored = false;
    return sym;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(kEigFloor);
  *floored = true;
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

void MixtureModel::validate() const {
  if (components.empty()) throw input_error("mixture needs at least one component");
  if (d <= 0) throw input_error("mixture dimension must be positive");
  double wsum = 0.0;
  for (const auto& c : components) {
    if (c.dim() != d) throw input_error("component dimension mismatch");
    c.validate();
    wsum += c.w;
  }
  if (std::abs(wsum - 1.0) > 1e-10)
    throw input_error("mixture weights must sum to one");
}

void FitConfig::validate() const {
  if (k < 1) throw input_error("component count must be at least 1");
  if (iters < 1) throw input_error("iteration count must be at least 1");
  if (burnin < 0 || burnin >= iters)
    throw input_error("burn-in must satisfy 0 <= burnin < iters");
  if (!(alpha_init > 0.02 && alpha_init < 1.98))
    throw input_error("alpha_init must lie in (0.02, 1.98)");
  if (alpha_pin && !(*alpha_pin > 0.02 && *alpha_pin <= 1.98))
    throw input_error("pinned alpha must lie in (0.02, 1.98]");
  if (max_restarts < 0) throw input_error("max_restarts must be non-negative");
}

Responsibilities e_step(const Eigen::MatrixXd& data, const MixtureModel& model,
                        double* loglik, int threads) {
  model.validate();
  const long n = data.rows();
  const int d = model.d;
  const int k = model.k();
  if (data.cols() != d) throw input_error("data dimension does not match model");
  if (n == 0) throw input_error("e_step needs at least one row");

  Eigen::MatrixXd delta(n, k);
  std::vector<ComponentKernel> kernels;
  kernels.reserve(k);
  for (int j = 0; j < k; ++j) kernels.emplace_back(model.components[j].sigma);
  for (long i = 0; i < n; ++i) {
    Eigen::VectorXd y = data.row(i).transpose();
    for (int j = 0; j < k; ++j)
      delta(i, j) = kernels[j].mahalanobis(y - model.components[j].mu);
  }

  std::vector<std::unique_ptr<ScaleMixtureRule>> rules(k);
  parallel_for(k, std::min(threads, k), [&](long j) {
    PositiveStableLaw law(model.components[j].alpha);
    rules[j] =
        std::make_unique<ScaleMixtureRule>(law, d, delta.col(j).maxCoeff());
  });

  Responsibilities resp;
  resp.e1.resize(n, k);
  resp.e2.resize(n, k);
  Eigen::VectorXd row_ll(n);
  const double base = -0.5 * d * std::log(2.0 * M_PI);
  parallel_for(n, threads, [&](long i) {
    Eigen::ArrayXd lf(k);
    for (int j = 0; j < k; ++j) {
      double iv, jv;
      rules[j]->eval(delta(i, j), &iv, &jv);
      if (!(iv > 0.0))
        throw numerical_error("density underflowed at observation " +
                              std::to_string(i) + ", component " +
                              std::to_string(j));
      lf[j] = std::log(model.components[j].w) + base - kernels[j].log_det() / 2 +
              std::log(iv);
      resp.e2(i, j) = jv / iv;
    }
    double m = lf.maxCoeff();
    Eigen::ArrayXd num = (lf - m).exp();
    double s = num.sum();
    resp.e1.row(i) = (num / s).transpose();
    row_ll[i] = m + std::log(s);
  });
  if (loglik) *loglik = row_ll.sum();
  return resp;
}

Eigen::VectorXd m_step_weights(const Eigen::MatrixXd& e1) {
  if (e1.rows() == 0) throw input_error("weight update needs rows");
  return e1.colwise().mean().transpose();
}

std::vector<Eigen::VectorXd> m_step_locations(const Eigen::MatrixXd& data,
                                              const Responsibilities& resp) {
  const long n = data.rows();
  const int k = static_cast<int>(resp.e1.cols());
  if (resp.e1.rows() != n || resp.e2.rows() != n || resp.e2.cols() != k)
    throw input_error("responsibility shapes do not match data");
  std::vector<Eigen::VectorXd> mu(k);
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd num = Eigen::VectorXd::Zero(data.cols());
    double den = 0.0;
    for (long i = 0; i < n; ++i) {
      double wgt = resp.e1(i, j) * resp.e2(i, j);
      num += wgt * data.row(i).transpose();
      den += wgt;
    }
    if (!(den > 0.0))
      throw numerical_error("location update hit a zero-mass component");
    mu[j] = num / den;
  }
  return mu;
}

namespace {

// coordinatewise median of the selected rows
Eigen::VectorXd coordinate_median(const Eigen::MatrixXd& data,
                                  const std::vector<int>& rows) {
  Eigen::VectorXd med(data.cols());
  std::vector<double> buf(rows.size());
  for (int c = 0; c < data.cols(); ++c) {
    for (std::size_t i = 0; i < rows.size(); ++i) buf[i] = data(rows[i], c);
    std::sort(buf.begin(), buf.end());
    std::size_t m = buf.size() / 2;
    med[c] = buf.size() % 2 ? buf[m] : 0.5 * (buf[m - 1] + buf[m]);
  }
  return med;
}

// scatter of the 80% of rows nearest the centre, with a ridge fallback
Eigen::MatrixXd trimmed_scatter(const Eigen::MatrixXd& data,
                                const std::vector<int>& rows,
                                const Eigen::VectorXd& mu) {
  const int d = static_cast<int>(data.cols());
  std::vector<std::pair<double, int>> order;
  order.reserve(rows.size());
  for (int r : rows) {
    Eigen::VectorXd diff = data.row(r).transpose() - mu;
    order.push_back({diff.squaredNorm(), r});
  }
  std::sort(order.begin(), order.end());
  std::size_t keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(0.8 * order.size())));
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < keep; ++i) {
    Eigen::VectorXd diff = data.row(order[i].second).transpose() - mu;
    s += diff * diff.transpose();
  }
  s /= static_cast<double>(keep);
  s = ((s + s.transpose()) / 2).eval();
  double scale = std::max(1.0, s.trace() / d);
  double ridge = 0.0;
  for (int tries = 0; tries < 60; ++tries) {
    Eigen::MatrixXd cand = s + ridge * Eigen::MatrixXd::Identity(d, d);
    Eigen::LLT<Eigen::MatrixXd> llt(cand);
    if (llt.info() == Eigen::Success &&
        llt.matrixLLT().diagonal().minCoeff() > 1e-12)
      return cand;
    ridge = ridge == 0.0 ? 1e-8 * scale : 2 * ridge;
  }
  throw numerical_error("initial scatter could not be regularized");
}

}  // namespace

MixtureModel initialize(const Eigen::MatrixXd& data, int k, std::uint64_t seed,
                        double alpha_init) {
  const long n = data.rows();
  const int d = static_cast<int>(data.cols());
  if (k < 1) throw input_error("component count must be at least 1");
  if (n < k) throw input_error("fewer rows than components");
  if (d < 1) throw input_error("data must have at least one column");

  // unsquared distances keep heavy-tail outliers from dominating the cost
  auto dist = [&](long a, long b) { return (data.row(a) - data.row(b)).norm(); };

  Rng rng = Rng::stream(seed, kInitPhase, 0);

  // anchor: the row nearest the coordinate-wise median of everything
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  Eigen::VectorXd center = coordinate_median(data, all);
  long anchor = 0;
  double best_dc = std::numeric_limits<double>::infinity();
  for (long i = 0; i < n; ++i) {
    double dc = (data.row(i).transpose() - center).norm();
    if (dc < best_dc) {
      best_dc = dc;
      anchor = i;
    }
  }

  std::vector<long> medoids{anchor};
  std::vector<double> d1(n), d2(n, std::numeric_limits<double>::infinity());
  std::vector<int> near(n, 0);
  for (long i = 0; i < n; ++i) d1[i] = dist(i, anchor);

  // every medoid owns its row even under exact duplicates
  auto claim_own_rows = [&] {
    for (int s = 0; s < static_cast<int>(medoids.size()); ++s) {
      long m = medoids[s];
      if (near[m] != s) {
        d2[m] = d1[m];
        near[m] = s;
      }
      d1[m] = 0.0;
    }
  };

  // complete the seed set from a mid-quantile band of the min-distance
  // profile: spread out, but never an extreme outlier
  while (static_cast<int>(medoids.size()) < k) {
    std::vector<long> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](long a, long b) {
      return d1[a] != d1[b] ? d1[a] < d1[b] : a < b;
    });
    long lo = static_cast<long>(0.70 * (n - 1));
    long hi = static_cast<long>(0.95 * (n - 1));
    long pick = -1;
    for (int tries = 0; tries < 64 && pick < 0; ++tries) {
      long cand = order[lo + static_cast<long>(rng.next_u64() %
                                               static_cast<std::uint64_t>(hi - lo + 1))];
      if (d1[cand] > 0.0) pick = cand;
    }
    if (pick < 0) {
      // duplicates galore: take any index not already a medoid
      for (long i = n - 1; i >= 0 && pick < 0; --i) {
        long cand = order[i];
        if (std::find(medoids.begin(), medoids.end(), cand) == medoids.end())
          pick = cand;
      }
      if (pick < 0) throw input_error("cannot place distinct medoids");
    }
    medoids.push_back(pick);
    int slot = static_cast<int>(medoids.size()) - 1;
    for (long i = 0; i < n; ++i) {
      double dn = dist(i, pick);
      if (dn < d1[i]) {
        d2[i] = d1[i];
        d1[i] = dn;
        near[i] = slot;
      } else if (dn < d2[i]) {
        d2[i] = dn;
      }
    }
    claim_own_rows();
  }

  // steepest-descent swap passes (PAM-style, bounded)
  for (int pass = 0; pass < 6 && k > 1; ++pass) {
    double cur_cost = std::accumulate(d1.begin(), d1.end(), 0.0);
    double best_cost = cur_cost;
    int best_slot = -1;
    long best_point = -1;
    for (long p = 0; p < n; ++p) {
      if (std::find(medoids.begin(), medoids.end(), p) != medoids.end())
        continue;
      std::vector<double> gain(k, 0.0);
      for (long i = 0; i < n; ++i) {
        double dp = dist(i, p);
        for (int s = 0; s < k; ++s) {
          double base = near[i] == s ? std::min(d2[i], dp) : std::min(d1[i], dp);
          gain[s] += base - d1[i];
        }
      }
      for (int s = 0; s < k; ++s)
        if (cur_cost + gain[s] < best_cost - 1e-12) {
          best_cost = cur_cost + gain[s];
          best_slot = s;
          best_point = p;
        }
    }
    if (best_slot < 0) break;
    medoids[best_slot] = best_point;
    for (long i = 0; i < n; ++i) {
      d1[i] = std::numeric_limits<double>::infinity();
      d2[i] = std::numeric_limits<double>::infinity();
      for (int s = 0; s < k; ++s) {
        double ds = dist(i, medoids[s]);
        if (ds < d1[i]) {
          d2[i] = d1[i];
          d1[i] = ds;
          near[i] = s;
        } else if (ds < d2[i]) {
          d2[i] = ds;
        }
      }
    }
    claim_own_rows();
  }

  std::vector<std::vector<int>> members(k);
  for (long i = 0; i < n; ++i) members[near[i]].push_back(static_cast<int>(i));

  MixtureModel model;
  model.d = d;
  model.components.resize(k);
  for (int j = 0; j < k; ++j) {
    SgasComponent& c = model.components[j];
    c.mu = coordinate_median(data, members[j]);
    // tiny clusters inherit the global scatter: a near-singular spike here
    // would turn the component into a delta function at one row
    c.sigma = static_cast<int>(members[j].size()) >= d + 1
                  ? trimmed_scatter(data, members[j], c.mu)
                  : trimmed_scatter(data, all, center);
    c.alpha = alpha_init;
    c.w = static_cast<double>(members[j].size()) / static_cast<double>(n);
  }
  model.validate();
  return model;
}

namespace {

FitResult run_attempt(const Eigen::MatrixXd& data, const FitConfig& cfg,
                      int restart, Diagnostics* diag) {
  const long n = data.rows();
  const int d = static_cast<int>(data.cols());
  const int k = cfg.k;

  MixtureModel model;
  if (restart == 0 && cfg.init) {
    model = *cfg.init;
    model.validate();
    if (model.k() != k || model.d != d)
      throw input_error("warm start does not match k or data dimension");
  } else {
    std::uint64_t init_seed =
        restart == 0 ? cfg.seed
                     : Rng::stream(cfg.seed, kInitPhase,
                                   static_cast<std::uint64_t>(restart))
                           .next_u64();
    model = initialize(data, k, init_seed, cfg.alpha_init);
  }
  if (cfg.alpha_pin)
    for (auto& c : model.components) c.alpha = *cfg.alpha_pin;

  FitResult out;
  out.trace.reserve(cfg.iters);

  std::vector<SgasComponent> sum_comp;
  int n_avg = 0;

  for (int t = 1; t <= cfg.iters; ++t) {
    double ll = 0.0;
    Responsibilities resp = e_step(data, model, &ll, cfg.threads);

    double low_thresh = 1.5 / k;
    if (k > 1)
      for (long i = 0; i < n; ++i)
        if (resp.e1.row(i).maxCoeff() < low_thresh) ++diag->low_resp_rows;

    Eigen::VectorXd w = m_step_weights(resp.e1);
    std::vector<Eigen::VectorXd> mu = m_step_locations(data, resp);

    std::vector<int> labels = assign_groups(resp.e1);
    std::vector<std::vector<int>> members(k);
    for (long i = 0; i < n; ++i) members[labels[i]].push_back(static_cast<int>(i));
    for (int j = 0; j < k; ++j)
      if (members[j].empty())
        throw numerical_error("stochastic step produced an empty group");

    // conditioning scale draws use fresh exponentials and the NEW locations
    Eigen::MatrixXd caly(n, d);
    parallel_for(n, cfg.threads, [&](long i) {
      Rng r = Rng::stream(cfg.seed, stream_tag(restart, t, 0),
                          static_cast<std::uint64_t>(i));
      double e = r.exponential();
      caly.row(i) =
          ((data.row(i).transpose() - mu[labels[i]]) / std::sqrt(e)).transpose();
    });

    // posterior scale draws use the OLD shape/scatter parameters
    std::vector<ComponentKernel> old_kernels;
    old_kernels.reserve(k);
    for (int j = 0; j < k; ++j) old_kernels.emplace_back(model.components[j].sigma);
    Eigen::VectorXd v(n);
    try {
      parallel_for(n, cfg.threads, [&](long i) {
        Rng r = Rng::stream(cfg.seed, stream_tag(restart, t, 1),
                            static_cast<std::uint64_t>(i));
        int j = labels[i];
        v[i] = sample_v_posterior(caly.row(i).transpose(),
                                  model.components[j].alpha, old_kernels[j], r);
      });
    } catch (const input_error& err) {
      // a location landing exactly on a data row is a collapse, not bad input
      throw numerical_error(std::string("degenerate component: ") + err.what());
    }

    std::vector<SgasComponent> next(k);
    for (int j = 0; j < k; ++j) {
      GroupData group;
      group.members = members[j];
      group.caly.resize(members[j].size(), d);
      std::vector<double> gv(members[j].size());
      for (std::size_t r = 0; r < members[j].size(); ++r) {
        group.caly.row(r) = caly.row(members[j][r]);
        gv[r] = v[members[j][r]];
      }
      next[j].mu = mu[j];
      next[j].w = w[j];
      next[j].sigma = update_sigma(group, gv);
      if (cfg.alpha_pin) {
        next[j].alpha = *cfg.alpha_pin;
      } else {
        try {
          bool clamped = false;
          next[j].alpha = update_alpha(gv, &clamped);
          if (clamped) ++diag->clamp_events;
        } catch (const bracket_error&) {
          next[j].alpha = model.components[j].alpha;
          ++diag->bracket_events;
        }
      }
    }

    // keep component slots stable across iterations before averaging
    std::vector<int> match = greedy_mu_match(model.components, next);
    std::vector<SgasComponent> aligned(k);
    for (int j = 0; j < k; ++j) aligned[j] = next[match[j]];
    model.components = aligned;

    out.trace.push_back({model.components, ll});
    if (t > cfg.burnin) {
      if (sum_comp.empty()) {
        sum_comp = model.components;
      } else {
        for (int j = 0; j < k; ++j) {
          sum_comp[j].w += model.components[j].w;
          sum_comp[j].alpha += model.components[j].alpha;
          sum_comp[j].mu += model.components[j].mu;
          sum_comp[j].sigma += model.components[j].sigma;
        }
      }
      ++n_avg;
    }
  }

  double inv = 1.0 / n_avg;
  double wsum = 0.0;
  for (auto& c : sum_comp) {
    c.w *= inv;
    c.alpha *= inv;
    c.mu *= inv;
    c.sigma = ((c.sigma * inv + (c.sigma * inv).transpose()) / 2).eval();
    bool floored = false;
    c.sigma = floor_eigenvalues(c.sigma, &floored);
    if (floored) ++diag->eig_floor_events;
    wsum += c.w;
  }
  for (auto& c : sum_comp) c.w /= wsum;

  out.model.components = sum_comp;
  out.model.d = d;
  out.model.validate();

  Responsibilities final_resp =
      e_step(data, out.model, &out.loglik, cfg.threads);
  out.e1 = final_resp.e1;
  out.e2 = final_resp.e2;
  out.labels = assign_groups(out.e1);
  out.bic = model_bic(out.model, out.loglik, static_cast<int>(n));
  return out;
}

}  // namespace

FitResult fit(const Eigen::MatrixXd& data, const FitConfig& config) {
  config.validate();
  const long n = data.rows();
  const int d = static_cast<int>(data.cols());
  if (n < config.k * (d + 1))
    throw input_error("not enough rows to fit this many components");
  for (long i = 0; i < n; ++i)
    for (int c = 0; c < d; ++c)
      if (!std::isfinite(data(i, c)))
        throw input_error("data contains a non-finite value");

  Diagnostics diag;
  for (int restart = 0; restart <= config.max_restarts; ++restart) {
    try {
      FitResult out = run_attempt(data, config, restart, &diag);
      diag.restarts = restart;
      out.diagnostics = diag;
      return out;
    } catch (const numerical_error& err) {
      diag.notes.push_back(err.what());
      if (restart == config.max_restarts)
        throw numerical_error("fit failed after exhausting restarts: " +
                              std::string(err.what()));
    }
  }
  throw numerical_error("unreachable restart state");
}

SelectKResult select_k(const Eigen::MatrixXd& data, int k_lo, int k_hi,
                       FitConfig config) {
  if (k_lo < 1 || k_hi < k_lo) throw input_error("invalid component range");
  const long n = data.rows();
  const int d = static_cast<int>(data.cols());

  SelectKResult result;
  bool have_best = false;
  for (int k = k_lo; k <= k_hi; ++k) {
    BicEntry entry;
    entry.k = k;
    if (n < static_cast<long>(k) * (d + 1)) {
      entry.note = "skipped: needs at least k*(d+1) rows";
      result.table.push_back(entry);
      continue;
    }
    config.k = k;
    try {
      FitResult res = fit(data, config);
      entry.bic = res.bic;
      entry.ok = true;
      if (!have_best || entry.bic < result.best.bic) {
        result.best = std::move(res);
        have_best = true;
      }
    } catch (const numerical_error& err) {
      entry.note = err.what();
    }
    result.table.push_back(entry);
  }
  if (!have_best)
    throw numerical_error("no component count could be fitted");
  return result;
}

Eigen::MatrixXd sample_mixture(const MixtureModel& model, int n, Rng& rng,
                               std::vector<int>* labels_out) {
  model.validate();
  if (n < 1) throw input_error("sample size must be positive");
  Eigen::MatrixXd out(n, model.d);
  if (labels_out) labels_out->assign(n, 0);
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform();
    double acc = 0.0;
    int j = model.k() - 1;
    for (int c = 0; c < model.k(); ++c) {
      acc += model.components[c].w;
      if (u < acc) {
        j = c;
        break;
      }
    }
    if (labels_out) (*labels_out)[i] = j;
    out.row(i) = sample_sgas(model.components[j], 1, rng).row(0);
  }
  return out;
}

double model_bic(const MixtureModel& model, double loglik, int n) {
  return bic(loglik, n, param_count(model.k(), model.d));
}

}  // namespace sgasmix

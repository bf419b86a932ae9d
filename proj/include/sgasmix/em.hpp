#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sgasmix/latent.hpp"
#include "sgasmix/sgas.hpp"

namespace sgasmix {

struct MixtureModel {
  std::vector<SgasComponent> components;
  int d = 0;

  int k() const { return static_cast<int>(components.size()); }
  void validate() const;  // weights sum to 1, shared dimension, all invariants
};

struct FitConfig {
  int k = 1;
  int iters = 70;    // N
  int burnin = 40;   // N0
  std::uint64_t seed = 0;
  int threads = 1;   // 0 -> hardware concurrency
  double alpha_init = 1.5;
  std::optional<double> alpha_pin;  // hold every tail index fixed (diagnostic fits)
  std::optional<MixtureModel> init;  // warm start; restarts fall back to fresh inits
  int max_restarts = 3;

  void validate() const;
};

struct Responsibilities {
  Eigen::MatrixXd e1;  // n x K membership probabilities
  Eigen::MatrixXd e2;  // n x K conditional E[1/P | y]
};

struct IterSnapshot {
  std::vector<SgasComponent> components;
  double loglik;  // observed-data log-likelihood at the entering model
};

struct Diagnostics {
  int restarts = 0;
  int bracket_events = 0;
  int clamp_events = 0;
  int eig_floor_events = 0;
  long low_resp_rows = 0;  // rows whose max responsibility fell under 1.5/K
  std::vector<std::string> notes;
};

struct FitResult {
  MixtureModel model;
  std::vector<IterSnapshot> trace;
  double loglik = 0.0;
  double bic = 0.0;
  std::vector<int> labels;
  Eigen::MatrixXd e1, e2;
  Diagnostics diagnostics;
};

struct BicEntry {
  int k = 0;
  double bic = 0.0;
  bool ok = false;
  std::string note;
};

struct SelectKResult {
  FitResult best;
  std::vector<BicEntry> table;
};

// E-step: responsibilities and, optionally, the observed-data log-likelihood
Responsibilities e_step(const Eigen::MatrixXd& data, const MixtureModel& model,
                        double* loglik = nullptr, int threads = 1);

// M-step closed forms
Eigen::VectorXd m_step_weights(const Eigen::MatrixXd& e1);
std::vector<Eigen::VectorXd> m_step_locations(const Eigen::MatrixXd& data,
                                              const Responsibilities& resp);

// k-medoids style pre-clustering with robust per-cluster moments
MixtureModel initialize(const Eigen::MatrixXd& data, int k, std::uint64_t seed,
                        double alpha_init = 1.5);

FitResult fit(const Eigen::MatrixXd& data, const FitConfig& config);

SelectKResult select_k(const Eigen::MatrixXd& data, int k_lo, int k_hi,
                       FitConfig config);

// rows sampled from the mixture; true component index per row in labels_out
Eigen::MatrixXd sample_mixture(const MixtureModel& model, int n, Rng& rng,
                               std::vector<int>* labels_out = nullptr);

double model_bic(const MixtureModel& model, double loglik, int n);

}  // namespace sgasmix

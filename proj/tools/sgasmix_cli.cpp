#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "sgasmix/em.hpp"
#include "sgasmix/errors.hpp"
#include "sgasmix/example1.hpp"
#include "sgasmix/io.hpp"
#include "sgasmix/metrics.hpp"

namespace fs = std::filesystem;
using namespace sgasmix;

namespace {

struct CommonFlags {
  std::uint64_t seed = 0;
  int iters = 70;
  int burnin = 40;
  int threads = 1;
  std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonFlags* flags) {
  cmd->add_option("--seed", flags->seed, "random seed");
  cmd->add_option("--iters", flags->iters, "SEM iterations")->default_val(70);
  cmd->add_option("--burnin", flags->burnin, "burn-in iterations")
      ->default_val(40);
  cmd->add_option("--threads", flags->threads, "worker count (0 = hardware)")
      ->default_val(1);
  cmd->add_option("--out-dir", flags->out_dir, "output directory")
      ->default_val(".");
}

std::string out_path(const CommonFlags& flags, const std::string& name) {
  fs::create_directories(flags.out_dir);
  return (fs::path(flags.out_dir) / name).string();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::pair<int, int> parse_k_range(const std::string& text) {
  std::size_t pos = text.find("..");
  if (pos == std::string::npos)
    throw input_error("k-range must look like a..b");
  int lo = 0, hi = 0;
  try {
    lo = std::stoi(text.substr(0, pos));
    hi = std::stoi(text.substr(pos + 2));
  } catch (const std::exception&) {
    throw input_error("k-range must look like a..b with integers");
  }
  if (lo < 1 || hi < lo) throw input_error("k-range needs 1 <= a <= b");
  return {lo, hi};
}

void write_fit_outputs(const CommonFlags& flags, const FitResult& res,
                       RunManifest* manifest) {
  std::string model_path = out_path(flags, "model.json");
  save_model(model_path, res.model);
  std::string labels_path = out_path(flags, "labels.csv");
  write_labels_csv(labels_path, res.labels);
  std::string resp_path = out_path(flags, "responsibilities.csv");
  std::vector<std::string> header;
  for (int j = 0; j < res.model.k(); ++j)
    header.push_back("e1_" + std::to_string(j));
  write_csv(resp_path, res.e1, header);
  manifest->outputs = {model_path, labels_path, resp_path};

  const Diagnostics& diag = res.diagnostics;
  manifest->events.push_back("restarts=" + std::to_string(diag.restarts));
  manifest->events.push_back("bracket_events=" +
                             std::to_string(diag.bracket_events));
  manifest->events.push_back("clamp_events=" +
                             std::to_string(diag.clamp_events));
  manifest->events.push_back("eig_floor_events=" +
                             std::to_string(diag.eig_floor_events));
  manifest->events.push_back("low_resp_rows=" +
                             std::to_string(diag.low_resp_rows));
  for (const std::string& note : diag.notes)
    manifest->events.push_back("note: " + note);
}

int cmd_fit(const std::string& data_path, int k, const std::string& k_range,
            const CommonFlags& flags) {
  auto t0 = std::chrono::steady_clock::now();
  Eigen::MatrixXd data = read_csv_matrix(data_path);
  double read_secs = seconds_since(t0);

  FitConfig cfg;
  cfg.iters = flags.iters;
  cfg.burnin = flags.burnin;
  cfg.seed = flags.seed;
  cfg.threads = flags.threads;

  RunManifest manifest;
  manifest.seed = flags.seed;
  manifest.config = {{"data", data_path},
                     {"iters", flags.iters},
                     {"burnin", flags.burnin},
                     {"threads", flags.threads},
                     {"out_dir", flags.out_dir}};

  auto t1 = std::chrono::steady_clock::now();
  FitResult res;
  if (!k_range.empty()) {
    auto [lo, hi] = parse_k_range(k_range);
    manifest.command = "fit";
    manifest.config["k_range"] = k_range;
    SelectKResult sel = select_k(data, lo, hi, cfg);
    double fit_secs = seconds_since(t1);

    Eigen::MatrixXd table(sel.table.size(), 3);
    for (std::size_t r = 0; r < sel.table.size(); ++r) {
      table(r, 0) = sel.table[r].k;
      table(r, 1) = sel.table[r].ok ? sel.table[r].bic : std::nan("");
      table(r, 2) = sel.table[r].ok ? 1.0 : 0.0;
      if (!sel.table[r].note.empty())
        manifest.events.push_back("k=" + std::to_string(sel.table[r].k) + ": " +
                                  sel.table[r].note);
    }
    std::string table_path = out_path(flags, "ktable.csv");
    write_csv(table_path, table, {"k", "bic", "ok"});
    res = std::move(sel.best);
    write_fit_outputs(flags, res, &manifest);
    manifest.outputs.push_back(table_path);
    manifest.timings = {{"read", read_secs}, {"fit", fit_secs}};
    save_manifest(out_path(flags, "manifest.json"), manifest);
    std::printf("selected k=%d n=%ld d=%ld loglik=%.6f bic=%.6f\n",
                res.model.k(), static_cast<long>(data.rows()),
                static_cast<long>(data.cols()), res.loglik, res.bic);
    return 0;
  }

  cfg.k = k;
  manifest.command = "fit";
  manifest.config["k"] = k;
  res = fit(data, cfg);
  double fit_secs = seconds_since(t1);
  write_fit_outputs(flags, res, &manifest);
  manifest.timings = {{"read", read_secs}, {"fit", fit_secs}};
  save_manifest(out_path(flags, "manifest.json"), manifest);
  std::printf("k=%d n=%ld d=%ld loglik=%.6f bic=%.6f restarts=%d\n", k,
              static_cast<long>(data.rows()), static_cast<long>(data.cols()),
              res.loglik, res.bic, res.diagnostics.restarts);
  return 0;
}

int cmd_simulate(const std::string& model_path, long n,
                 const CommonFlags& flags) {
  MixtureModel model = load_model(model_path);
  Rng rng(flags.seed);
  std::vector<int> labels;
  Eigen::MatrixXd data(0, model.d);
  if (n > 0) data = sample_mixture(model, static_cast<int>(n), rng, &labels);

  std::vector<std::string> header;
  for (int c = 0; c < model.d; ++c) header.push_back("x" + std::to_string(c + 1));
  header.push_back("label");
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) out += ',';
    out += header[c];
  }
  out += '\n';
  char buf[40];
  for (long i = 0; i < data.rows(); ++i) {
    for (int c = 0; c < model.d; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", data(i, c));
      out += buf;
      out += ',';
    }
    out += std::to_string(labels[i]);
    out += '\n';
  }
  std::string sim_path = out_path(flags, "sim.csv");
  {
    std::FILE* f = std::fopen(sim_path.c_str(), "wb");
    if (!f) throw input_error("cannot write " + sim_path);
    std::fwrite(out.data(), 1, out.size(), f);
    std::fclose(f);
  }

  RunManifest manifest;
  manifest.command = "simulate";
  manifest.seed = flags.seed;
  manifest.config = {{"model", model_path}, {"n", n}, {"out_dir", flags.out_dir}};
  manifest.outputs = {sim_path};
  save_manifest(out_path(flags, "manifest.json"), manifest);
  std::printf("simulated n=%ld d=%d k=%d -> %s\n", n, model.d, model.k(),
              sim_path.c_str());
  return 0;
}

int cmd_eval(const std::string& a_path, const std::string& b_path,
             const CommonFlags& flags) {
  std::vector<int> a = read_csv_labels(a_path);
  std::vector<int> b = read_csv_labels(b_path);
  double score = ari(a, b);
  auto table = confusion_table(a, b);

  std::printf("ari=%.9f\n", score);
  for (const auto& row : table) {
    for (std::size_t c = 0; c < row.size(); ++c)
      std::printf(c + 1 < row.size() ? "%lld," : "%lld\n",
                  static_cast<long long>(row[c]));
  }

  Eigen::MatrixXd ari_out(1, 1);
  ari_out(0, 0) = score;
  write_csv(out_path(flags, "eval.csv"), ari_out, {"ari"});
  Eigen::MatrixXd conf(table.size(), table[0].size());
  for (std::size_t r = 0; r < table.size(); ++r)
    for (std::size_t c = 0; c < table[r].size(); ++c)
      conf(r, c) = static_cast<double>(table[r][c]);
  write_csv(out_path(flags, "confusion.csv"), conf);
  return 0;
}

int cmd_bench_example1(int reps, double alpha_gen, double mu_scale,
                       const CommonFlags& flags) {
  MixtureModel truth = example1_truth(alpha_gen, mu_scale);
  const int n = 600;

  Eigen::MatrixXd table(reps, 4);
  std::vector<double> ok_aris;
  int mu_hits = 0, failures = 0;
  RunManifest manifest;
  manifest.command = "bench-example1";
  manifest.seed = flags.seed;
  manifest.config = {{"reps", reps},
                     {"alpha_gen", alpha_gen},
                     {"mu_scale", mu_scale},
                     {"n", n},
                     {"iters", flags.iters},
                     {"burnin", flags.burnin},
                     {"threads", flags.threads}};

  for (int rep = 0; rep < reps; ++rep) {
    Rng gen = Rng::stream(flags.seed, 0xE1, static_cast<std::uint64_t>(rep));
    std::vector<int> lab;
    Eigen::MatrixXd data = sample_mixture(truth, n, gen, &lab);

    FitConfig cfg;
    cfg.k = 3;
    cfg.iters = flags.iters;
    cfg.burnin = flags.burnin;
    cfg.threads = flags.threads;
    cfg.seed = gen.next_u64();

    table(rep, 0) = rep;
    try {
      FitResult res = fit(data, cfg);
      double score = ari(res.labels, lab);
      double gap = location_match_gap(res.model, truth);
      table(rep, 1) = score;
      table(rep, 2) = gap;
      table(rep, 3) = 1.0;
      ok_aris.push_back(score);
      if (gap <= 0.5 * mu_scale) ++mu_hits;
    } catch (const numerical_error& err) {
      table(rep, 1) = std::nan("");
      table(rep, 2) = std::nan("");
      table(rep, 3) = 0.0;
      ++failures;
      manifest.events.push_back("rep " + std::to_string(rep) + " failed: " +
                                err.what());
    }
  }

  std::string reps_path = out_path(flags, "example1_ari.csv");
  write_csv(reps_path, table, {"rep", "ari", "mu_gap", "ok"});

  if (ok_aris.empty()) throw numerical_error("every replicate failed");
  std::sort(ok_aris.begin(), ok_aris.end());
  auto quantile = [&](double q) {
    double pos = q * (ok_aris.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    std::size_t hi = std::min(lo + 1, ok_aris.size() - 1);
    return ok_aris[lo] + (pos - lo) * (ok_aris[hi] - ok_aris[lo]);
  };
  double med = quantile(0.5), q25 = quantile(0.25), q75 = quantile(0.75);

  Eigen::MatrixXd summary(1, 6);
  summary << med, q25, q75, static_cast<double>(mu_hits),
      static_cast<double>(failures), static_cast<double>(reps);
  std::string summary_path = out_path(flags, "example1_summary.csv");
  write_csv(summary_path, summary,
            {"median_ari", "q25_ari", "q75_ari", "mu_hits", "failures", "reps"});

  manifest.outputs = {reps_path, summary_path};
  save_manifest(out_path(flags, "manifest.json"), manifest);
  std::printf(
      "reps=%d ok=%d median_ari=%.4f q25=%.4f q75=%.4f mu_hits=%d failures=%d\n",
      reps, reps - failures, med, q25, q75, mu_hits, failures);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite mixtures of sub-Gaussian alpha-stable distributions"};
  app.require_subcommand(1);

  CommonFlags fit_flags;
  std::string fit_data, fit_k_range;
  int fit_k = 0;
  CLI::App* fit_cmd = app.add_subcommand("fit", "fit a mixture to CSV data");
  fit_cmd->add_option("--data", fit_data, "input CSV")->required();
  CLI::Option* k_opt = fit_cmd->add_option("--k", fit_k, "component count");
  CLI::Option* range_opt =
      fit_cmd->add_option("--k-range", fit_k_range, "a..b component scan");
  k_opt->excludes(range_opt);
  add_common(fit_cmd, &fit_flags);

  CommonFlags sel_flags;
  std::string sel_data, sel_range;
  CLI::App* sel_cmd =
      app.add_subcommand("select-k", "scan component counts by BIC");
  sel_cmd->add_option("--data", sel_data, "input CSV")->required();
  sel_cmd->add_option("--k-range", sel_range, "a..b component scan")->required();
  add_common(sel_cmd, &sel_flags);

  CommonFlags sim_flags;
  std::string sim_model;
  long sim_n = 0;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "draw rows from a model");
  sim_cmd->add_option("--model", sim_model, "model.json path")->required();
  sim_cmd->add_option("--n", sim_n, "rows to draw")->required();
  add_common(sim_cmd, &sim_flags);

  CommonFlags eval_flags;
  std::string eval_a, eval_b;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "ARI and confusion table for two label files");
  eval_cmd->add_option("labels_a", eval_a, "first label CSV")->required();
  eval_cmd->add_option("labels_b", eval_b, "second label CSV")->required();
  add_common(eval_cmd, &eval_flags);

  CommonFlags bench_flags;
  int bench_reps = 20;
  double bench_alpha = 1.7, bench_scale = 1.0;
  CLI::App* bench_cmd = app.add_subcommand(
      "bench-example1", "three-component benchmark: generate, fit, score");
  bench_cmd->add_option("--reps", bench_reps, "replicate count")
      ->default_val(20);
  bench_cmd->add_option("--alpha-gen", bench_alpha,
                        "tail index for the synthetic generator (see README)")
      ->default_val(1.7);
  bench_cmd->add_option("--mu-scale", bench_scale,
                        "scale factor applied to the true locations")
      ->default_val(1.0);
  add_common(bench_cmd, &bench_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (fit_cmd->parsed()) {
      if (fit_k_range.empty() && fit_k < 1)
        throw input_error("fit needs --k or --k-range");
      return cmd_fit(fit_data, fit_k, fit_k_range, fit_flags);
    }
    if (sel_cmd->parsed()) return cmd_fit(sel_data, 0, sel_range, sel_flags);
    if (sim_cmd->parsed()) {
      if (sim_n < 0) throw input_error("n must be non-negative");
      return cmd_simulate(sim_model, sim_n, sim_flags);
    }
    if (eval_cmd->parsed()) return cmd_eval(eval_a, eval_b, eval_flags);
    if (bench_cmd->parsed()) {
      if (bench_reps < 1) throw input_error("reps must be at least 1");
      return cmd_bench_example1(bench_reps, bench_alpha, bench_scale,
                                bench_flags);
    }
  } catch (const input_error& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const numerical_error& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  }
  return 0;
}

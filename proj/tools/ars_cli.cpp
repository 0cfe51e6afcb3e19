// Command-line front end: certify, predict, train, attack, report, compare, run.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ars/checkpoint.hpp"
#include "ars/harness.hpp"

namespace {

using namespace ars;
using harness::Dataset;

struct SmoothingArgs {
  std::string model;
  std::string noisegen = "none";
  std::string dataset;
  std::string family = "gaussian";
  double sigma = 0.5;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::string out;
};

void add_smoothing_flags(CLI::App* cmd, SmoothingArgs& a) {
  cmd->add_option("--model", a.model, "classifier checkpoint (JSON)")->required();
  cmd->add_option("--noisegen", a.noisegen, "noise generator checkpoint, or 'none' for isotropic noise");
  cmd->add_option("--dataset", a.dataset, "dataset CSV (x_0..x_{d-1},label)")->required();
  cmd->add_option("--family", a.family, "gaussian|laplace")->check(CLI::IsMember({"gaussian", "laplace"}));
  cmd->add_option("--sigma", a.sigma, "isotropic noise level when no generator is given");
  cmd->add_option("--seed", a.seed);
  cmd->add_option("--workers", a.workers)->check(CLI::PositiveNumber);
  cmd->add_option("--out", a.out, "output CSV (stdout when omitted)");
}

// Owns the networks a SmoothedModel points at.
struct LoadedModel {
  net::Mlp classifier;
  std::optional<net::NoiseGenNet> generator;
  harness::SmoothedModel view(const SmoothingArgs& a) const {
    return {&classifier, generator ? &*generator : nullptr, a.sigma, parse_noise_family(a.family)};
  }
};

LoadedModel load_model(const SmoothingArgs& a) {
  LoadedModel m{net::load_mlp(a.model), std::nullopt};
  if (a.noisegen != "none" && !a.noisegen.empty()) m.generator = net::load_noisegen(a.noisegen);
  return m;
}

template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write " + path);
  fn(out);
}

std::pair<double, double> parse_clip(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw Error(ErrorCode::ConfigError, "--clip expects lo,hi");
  try {
    const double lo = std::stod(text.substr(0, comma));
    const double hi = std::stod(text.substr(comma + 1));
    if (!(lo < hi)) throw Error(ErrorCode::ConfigError, "--clip needs lo < hi");
    return {lo, hi};
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::ConfigError, "--clip expects two numbers");
  }
}

void print_curve(const harness::CertificationReport& report) {
  for (const auto& [r, acc] : harness::certified_accuracy(report, harness::default_radius_grid())) {
    std::fprintf(stderr, "  R=%.2f  acc=%.4f\n", r, acc);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anisotropic randomized smoothing: certification, training and evaluation"};
  app.require_subcommand(1);

  SmoothingArgs cert_args;
  CertifyConfig cert_cfg;
  bool no_timing = false;
  auto* cert = app.add_subcommand("certify", "certify every example of a dataset");
  add_smoothing_flags(cert, cert_args);
  cert->add_option("--n0", cert_cfg.n0, "selection samples");
  cert->add_option("--n", cert_cfg.n, "estimation samples");
  cert->add_option("--alpha", cert_cfg.confidence_alpha, "failure probability");
  cert->add_option("--batch-size", cert_cfg.batch_size);
  cert->add_flag("--no-timing", no_timing, "write wall_time_s as 0 for reproducible CSVs");

  SmoothingArgs pred_args;
  std::uint64_t pred_n = 1000;
  double pred_alpha = 0.001;
  auto* pred = app.add_subcommand("predict", "smoothed prediction with abstention");
  add_smoothing_flags(pred, pred_args);
  pred->add_option("--n", pred_n);
  pred->add_option("--alpha", pred_alpha);

  std::string train_config, out_model, out_noisegen, out_trace;
  auto* trn = app.add_subcommand("train", "train a classifier (and generator) from a JSON config");
  trn->add_option("--config", train_config)->required()->check(CLI::ExistingFile);
  trn->add_option("--out-model", out_model)->required();
  trn->add_option("--out-noisegen", out_noisegen, "required for the anisotropic pipeline");
  trn->add_option("--out-trace", out_trace, "per-epoch loss trace CSV");

  std::string atk_model, atk_dataset, atk_out, atk_clip;
  harness::AttackConfig atk_cfg;
  double atk_step = 0.0;
  auto* atk = app.add_subcommand("attack", "PGD pre-perturbation of a dataset");
  atk->add_option("--model", atk_model)->required();
  atk->add_option("--dataset", atk_dataset)->required();
  atk->add_option("--out", atk_out, "perturbed dataset CSV")->required();
  atk->add_option("--eps-inf", atk_cfg.eps_inf);
  atk->add_option("--iters", atk_cfg.iters);
  atk->add_option("--step", atk_step, "defaults to eps-inf / 4");
  atk->add_option("--clip", atk_clip, "lo,hi");

  std::string rep_in, rep_out;
  auto* rep = app.add_subcommand("report", "certified accuracy curve of a report CSV");
  rep->add_option("--report", rep_in)->required();
  rep->add_option("--out", rep_out);

  std::string cmp_base, cmp_cand, cmp_out;
  auto* cmp = app.add_subcommand("compare", "per-radius accuracy deltas between two reports");
  cmp->add_option("--baseline", cmp_base)->required();
  cmp->add_option("--candidate", cmp_cand)->required();
  cmp->add_option("--out", cmp_out);

  std::string run_config, run_out_dir;
  std::size_t run_workers = 0;
  auto* run = app.add_subcommand("run", "train, certify and write all artifacts for one config");
  run->add_option("--config", run_config)->required()->check(CLI::ExistingFile);
  run->add_option("--out-dir", run_out_dir, "overrides out_dir from the config");
  run->add_option("--workers", run_workers, "overrides workers from the config");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cert) {
      cert_cfg.seed = cert_args.seed;
      cert_cfg.workers = cert_args.workers;
      const auto model = load_model(cert_args);
      const auto data = harness::load_dataset(cert_args.dataset, harness::Split::Test);
      const auto report = harness::certify_dataset(model.view(cert_args), data, cert_cfg, !no_timing);
      with_output(cert_args.out, [&](std::ostream& o) { harness::write_report_csv(o, report); });
      print_curve(report);
    } else if (*pred) {
      const auto model = load_model(pred_args);
      const auto data = harness::load_dataset(pred_args.dataset, harness::Split::Test);
      const auto rows =
          harness::predict_dataset(model.view(pred_args), data, pred_n, pred_alpha, pred_args.seed, pred_args.workers);
      with_output(pred_args.out, [&](std::ostream& o) {
        o << "example_id,true_label,prediction,p_value\n";
        for (const auto& r : rows) {
          o << r.example_id << ',' << r.true_label.index << ',';
          if (r.predicted) {
            o << r.predicted->index;
          } else {
            o << "ABSTAIN";
          }
          o << ',' << r.p_value << '\n';
        }
      });
    } else if (*trn) {
      const auto cfg = harness::parse_experiment_config(net::read_json_file(train_config));
      if (cfg.pipeline == harness::Pipeline::Anisotropic && out_noisegen.empty()) {
        throw Error(ErrorCode::ConfigError, "--out-noisegen is required for the anisotropic pipeline");
      }
      const auto data = harness::load_experiment_data(cfg);
      const auto trained = harness::train_pipeline(cfg, data.first);
      net::save_mlp(out_model, trained.classifier, cfg.model_seed);
      if (trained.generator) net::save_noisegen(out_noisegen, *trained.generator, cfg.model_seed + 1);
      if (!out_trace.empty()) {
        with_output(out_trace, [&](std::ostream& o) {
          o << "epoch,total,smoothing,variance,mean\n";
          const auto& t = trained.trace;
          for (std::size_t e = 0; e < t.epoch_total.size(); ++e) {
            o << e << ',' << t.epoch_total[e] << ',' << t.epoch_smoothing[e] << ',' << t.epoch_variance[e] << ','
              << t.epoch_mean[e] << '\n';
          }
        });
      }
      if (!trained.trace.epoch_total.empty()) {
        std::fprintf(stderr, "final epoch loss %.6f\n", trained.trace.epoch_total.back());
      }
    } else if (*atk) {
      if (atk_step > 0.0) atk_cfg.step = atk_step;
      if (!atk_clip.empty()) atk_cfg.clip = parse_clip(atk_clip);
      const auto model = net::load_mlp(atk_model);
      const auto data = harness::load_dataset(atk_dataset, harness::Split::Test);
      harness::save_dataset(atk_out, harness::attack_dataset(model, data, atk_cfg));
    } else if (*rep) {
      const auto report = harness::load_report(rep_in);
      with_output(rep_out, [&](std::ostream& o) {
        harness::write_curve_csv(o, harness::certified_accuracy(report, harness::default_radius_grid()));
      });
    } else if (*cmp) {
      const auto rows =
          harness::compare_reports(harness::load_report(cmp_base), harness::load_report(cmp_cand),
                                   harness::default_radius_grid());
      with_output(cmp_out, [&](std::ostream& o) { harness::write_comparison_csv(o, rows); });
    } else if (*run) {
      auto doc = net::read_json_file(run_config);
      if (!run_out_dir.empty()) doc["out_dir"] = run_out_dir;
      if (run_workers > 0) doc["workers"] = run_workers;
      const auto cfg = harness::parse_experiment_config(doc);
      const auto result = harness::run_experiment(cfg);
      std::fprintf(stderr, "%s: %zu test examples\n", cfg.name.c_str(), result.report.rows.size());
      print_curve(result.report);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}

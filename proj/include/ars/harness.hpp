#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ars/certify.hpp"
#include "ars/core.hpp"
#include "ars/net.hpp"

namespace ars::harness {

enum class Split { Train, Test };

struct Dataset {
  std::string name;
  Split split = Split::Train;
  std::size_t num_classes = 2;
  std::vector<Vector> inputs;
  std::vector<Label> labels;

  std::size_t size() const noexcept { return inputs.size(); }
  std::size_t dim() const { return inputs.at(0).dim(); }
  // Throws InvalidConfig on length/dim/label inconsistencies.
  void validate() const;
  std::vector<net::Example> examples() const;
};

// Gaussian blobs whose class means sit on a regular simplex with pairwise
// distance `class_separation` (first num_classes - 1 coordinates). Points are
// interleaved by class. Train and test splits draw from disjoint streams.
Dataset make_blobs(std::size_t num_classes, std::size_t points_per_class, std::size_t dim, double class_separation,
                   double noise_std, std::uint64_t seed, Split split = Split::Train);
std::vector<std::vector<double>> simplex_means(std::size_t num_classes, std::size_t dim, double class_separation);

// Columns x_0..x_{d-1},label with a header row.
void write_dataset_csv(std::ostream& out, const Dataset& data);
Dataset read_dataset_csv(std::istream& in, std::string name, Split split, std::size_t min_classes = 2);
void save_dataset(const std::string& path, const Dataset& data);
Dataset load_dataset(const std::string& path, Split split = Split::Test);

struct ReportRow {
  std::size_t example_id = 0;
  Label true_label;
  CertifyStatus status = CertifyStatus::Abstain;
  std::optional<Label> certified_label;
  std::optional<double> radius;
  std::optional<double> pa_lower;
  double wall_time_s = 0.0;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct CertificationReport {
  std::vector<ReportRow> rows;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
};

// Header: example_id,true_label,status,certified_label,radius,pa_lower,wall_time_s
void write_report_csv(std::ostream& out, const CertificationReport& report);
CertificationReport read_report_csv(std::istream& in);
void save_report(const std::string& path, const CertificationReport& report);
CertificationReport load_report(const std::string& path);

// 0.0, 0.25, ..., 4.0
std::vector<double> default_radius_grid();

// Fraction of rows certified with the true label and radius >= R.
std::vector<std::pair<double, double>> certified_accuracy(const CertificationReport& report,
                                                          const std::vector<double>& radius_grid);

struct ComparisonRow {
  double radius;
  double baseline;
  double candidate;
  double delta;
};

std::vector<ComparisonRow> compare_reports(const CertificationReport& baseline, const CertificationReport& candidate,
                                           const std::vector<double>& radius_grid);

// Base classifier plus the noise law used to smooth it: per-input noise from a
// generator, or isotropic noise of level `sigma` when there is none.
struct SmoothedModel {
  const net::Mlp* classifier = nullptr;
  const net::NoiseGenNet* generator = nullptr;
  double sigma = 0.5;
  NoiseFamily family = NoiseFamily::Gaussian;

  NoiseSpec noise_for(const Vector& x) const;
};

// Certifies every example. Example i uses RandomStream(cfg.seed, i), and
// examples run on cfg.workers threads; rows keep dataset order.
CertificationReport certify_dataset(const SmoothedModel& model, const Dataset& data, const CertifyConfig& cfg,
                                    bool record_timing = true);

struct PredictionRow {
  std::size_t example_id;
  Label true_label;
  std::optional<Label> predicted;
  double p_value;
};
std::vector<PredictionRow> predict_dataset(const SmoothedModel& model, const Dataset& data, std::uint64_t n,
                                           double alpha, std::uint64_t seed, std::size_t workers);

struct AttackConfig {
  double eps_inf = 0.25;
  std::size_t iters = 10;
  std::optional<double> step;  // defaults to eps_inf / 4
  std::pair<double, double> clip{-1e9, 1e9};
};
Dataset attack_dataset(const net::Mlp& classifier, const Dataset& data, const AttackConfig& cfg);

enum class Pipeline { Isotropic, Anisotropic };

struct ClassifierShape {
  std::vector<std::size_t> hidden{32, 32};
};

struct GeneratorShape {
  std::size_t hidden = 32;
  std::size_t depth = 4;
  double mean_bound = 1.0;
  double scale_lo = 0.05;
  double scale_hi = 4.0;
};

struct DatasetSource {
  std::string kind = "blobs";  // "blobs" or "csv"
  std::size_t num_classes = 2;
  std::size_t train_per_class = 256;
  std::size_t test_per_class = 128;
  std::size_t dim = 16;
  double separation = 4.0;
  double noise_std = 1.0;
  std::uint64_t seed = 0;
  std::string train_path;
  std::string test_path;
};

struct ExperimentConfig {
  std::string name = "experiment";
  DatasetSource dataset;
  Pipeline pipeline = Pipeline::Anisotropic;
  NoiseFamily family = NoiseFamily::Gaussian;
  double sigma = 0.5;
  ClassifierShape classifier;
  GeneratorShape generator;
  std::uint64_t model_seed = 0;
  net::TrainConfig train;
  CertifyConfig certify;
  std::optional<AttackConfig> attack;
  bool record_timing = true;
  std::string out_dir;  // empty: no artifacts written

  // Throws ConfigError.
  void validate() const;
};

inline constexpr int kConfigSchemaVersion = 1;

ExperimentConfig parse_experiment_config(const nlohmann::json& doc);
nlohmann::json to_json(const ExperimentConfig& cfg);

struct ExperimentResult {
  CertificationReport report;
  std::optional<CertificationReport> attacked_report;
  net::TrainTrace trace;
  net::Mlp classifier;
  std::optional<net::NoiseGenNet> generator;
};

std::pair<Dataset, Dataset> load_experiment_data(const ExperimentConfig& cfg);

struct TrainedPipeline {
  net::Mlp classifier;
  std::optional<net::NoiseGenNet> generator;  // absent for the isotropic pipeline
  net::TrainTrace trace;
};

// Builds the networks from cfg and trains them on `train_set`.
TrainedPipeline train_pipeline(const ExperimentConfig& cfg, const Dataset& train_set);

// Trains the pipeline, certifies the test split (and its PGD-perturbed copy
// when an attack is configured) and, with out_dir set, writes report.csv,
// curve.csv, trace.csv, model checkpoints and summary.json.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

void write_curve_csv(std::ostream& out, const std::vector<std::pair<double, double>>& curve);
void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows);

}  // namespace ars::harness

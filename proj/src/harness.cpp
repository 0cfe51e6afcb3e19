#include "ars/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ars/checkpoint.hpp"
#include "ars/noise.hpp"
#include "ars/rng.hpp"

namespace ars::harness {
namespace {

using nlohmann::json;

constexpr const char* kReportHeader = "example_id,true_label,status,certified_label,radius,pa_lower,wall_time_s";

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

double parse_double(const std::string& s, std::size_t line_no) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  return v;
}

std::size_t parse_index(const std::string& s, std::size_t line_no) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || s.front() == '-') {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad index '" + s + "'");
  }
  return static_cast<std::size_t>(v);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  return in;
}

}  // namespace

// ---------------------------------------------------------------- datasets

void Dataset::validate() const {
  if (inputs.size() != labels.size()) throw Error(ErrorCode::InvalidConfig, "inputs and labels differ in length");
  if (inputs.empty()) throw Error(ErrorCode::InvalidConfig, "dataset is empty");
  if (num_classes < 2) throw Error(ErrorCode::InvalidConfig, "num_classes must be >= 2");
  const std::size_t d = inputs.front().dim();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].dim() != d) throw Error(ErrorCode::InvalidConfig, "inconsistent input dims");
    if (labels[i].index >= num_classes) throw Error(ErrorCode::InvalidConfig, "label >= num_classes");
  }
}

std::vector<net::Example> Dataset::examples() const {
  std::vector<net::Example> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back({inputs[i].values(), labels[i]});
  return out;
}

std::vector<std::vector<double>> simplex_means(std::size_t num_classes, std::size_t dim, double class_separation) {
  if (num_classes < 2) throw Error(ErrorCode::InvalidConfig, "need at least two classes");
  if (dim + 1 < num_classes) throw Error(ErrorCode::InvalidConfig, "dim must be >= num_classes - 1");
  // Helmert basis of the sum-zero subspace: coordinate j of vertex k is
  // h_j[k]; vertices e_k - 1/K are sqrt(2) apart, hence the rescale.
  const double scale = class_separation / std::sqrt(2.0);
  std::vector<std::vector<double>> means(num_classes, std::vector<double>(dim, 0.0));
  for (std::size_t j = 1; j < num_classes; ++j) {
    const double norm = std::sqrt(static_cast<double>(j * (j + 1)));
    for (std::size_t k = 0; k < num_classes; ++k) {
      double h = 0.0;
      if (k < j) h = 1.0 / norm;
      if (k == j) h = -static_cast<double>(j) / norm;
      means[k][j - 1] = scale * h;
    }
  }
  return means;
}

Dataset make_blobs(std::size_t num_classes, std::size_t points_per_class, std::size_t dim, double class_separation,
                   double noise_std, std::uint64_t seed, Split split) {
  if (points_per_class == 0 || dim == 0 || !(class_separation > 0.0) || !(noise_std > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "make_blobs parameters must be positive");
  }
  const auto means = simplex_means(num_classes, dim, class_separation);
  Dataset data;
  data.name = "blobs";
  data.split = split;
  data.num_classes = num_classes;
  const RandomStream root(seed, split == Split::Train ? 0x747261696eull : 0x74657374ull);
  std::size_t id = 0;
  for (std::size_t p = 0; p < points_per_class; ++p) {
    for (std::size_t c = 0; c < num_classes; ++c, ++id) {
      RandomStream stream = root.fork(id);
      std::vector<double> x(means[c]);
      for (double& v : x) v += noise_std * standard_draw(NoiseFamily::Gaussian, stream);
      data.inputs.emplace_back(std::move(x));
      data.labels.push_back(Label{c});
    }
  }
  return data;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  data.validate();
  for (std::size_t i = 0; i < data.dim(); ++i) out << "x_" << i << ',';
  out << "label\n";
  for (std::size_t r = 0; r < data.size(); ++r) {
    for (double v : data.inputs[r]) out << format_double(v) << ',';
    out << data.labels[r].index << '\n';
  }
}

Dataset read_dataset_csv(std::istream& in, std::string name, Split split, std::size_t min_classes) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "dataset CSV is empty");
  const auto header = split_fields(strip_cr(line));
  if (header.size() < 2 || header.back() != "label") {
    throw Error(ErrorCode::ParseError, "dataset header must be x_0..x_{d-1},label");
  }
  const std::size_t dim = header.size() - 1;
  for (std::size_t i = 0; i < dim; ++i) {
    if (header[i] != "x_" + std::to_string(i)) throw Error(ErrorCode::ParseError, "unexpected column " + header[i]);
  }
  Dataset data;
  data.name = std::move(name);
  data.split = split;
  std::size_t max_label = 0;
  for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != dim + 1) throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": wrong arity");
    std::vector<double> x(dim);
    for (std::size_t i = 0; i < dim; ++i) x[i] = parse_double(fields[i], line_no);
    data.inputs.emplace_back(std::move(x));
    data.labels.push_back(Label{parse_index(fields.back(), line_no)});
    max_label = std::max(max_label, data.labels.back().index);
  }
  data.num_classes = std::max(min_classes, max_label + 1);
  data.validate();
  return data;
}

void save_dataset(const std::string& path, const Dataset& data) {
  auto out = open_out(path);
  write_dataset_csv(out, data);
}

Dataset load_dataset(const std::string& path, Split split) {
  auto in = open_in(path);
  return read_dataset_csv(in, std::filesystem::path(path).stem().string(), split);
}

// ---------------------------------------------------------------- reports

void write_report_csv(std::ostream& out, const CertificationReport& report) {
  out << kReportHeader << '\n';
  for (const auto& row : report.rows) {
    out << row.example_id << ',' << row.true_label.index << ','
        << (row.status == CertifyStatus::Certified ? "CERTIFIED" : "ABSTAIN") << ',';
    if (row.certified_label) out << row.certified_label->index;
    out << ',';
    if (row.radius) out << format_double(*row.radius);
    out << ',';
    if (row.pa_lower) out << format_double(*row.pa_lower);
    out << ',' << format_double(row.wall_time_s) << '\n';
  }
}

CertificationReport read_report_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != kReportHeader) {
    throw Error(ErrorCode::ParseError, "report CSV must start with the header row");
  }
  CertificationReport report;
  for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 7) throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected 7 fields");
    ReportRow row;
    row.example_id = parse_index(f[0], line_no);
    row.true_label = Label{parse_index(f[1], line_no)};
    if (f[2] == "CERTIFIED") {
      row.status = CertifyStatus::Certified;
    } else if (f[2] == "ABSTAIN") {
      row.status = CertifyStatus::Abstain;
    } else {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad status '" + f[2] + "'");
    }
    if (!f[3].empty()) row.certified_label = Label{parse_index(f[3], line_no)};
    if (!f[4].empty()) row.radius = parse_double(f[4], line_no);
    if (!f[5].empty()) row.pa_lower = parse_double(f[5], line_no);
    row.wall_time_s = parse_double(f[6], line_no);
    const bool certified = row.status == CertifyStatus::Certified;
    if (certified != (row.certified_label && row.radius && row.pa_lower)) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": fields inconsistent with status");
    }
    report.rows.push_back(row);
  }
  return report;
}

void save_report(const std::string& path, const CertificationReport& report) {
  auto out = open_out(path);
  write_report_csv(out, report);
}

CertificationReport load_report(const std::string& path) {
  auto in = open_in(path);
  return read_report_csv(in);
}

std::vector<double> default_radius_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 16; ++i) grid.push_back(0.25 * i);
  return grid;
}

std::vector<std::pair<double, double>> certified_accuracy(const CertificationReport& report,
                                                          const std::vector<double>& radius_grid) {
  if (report.rows.empty()) throw Error(ErrorCode::EmptyReport, "report has no rows");
  const auto n = static_cast<double>(report.rows.size());
  std::vector<std::pair<double, double>> curve;
  curve.reserve(radius_grid.size());
  for (double r : radius_grid) {
    std::size_t hits = 0;
    for (const auto& row : report.rows) {
      if (row.status == CertifyStatus::Certified && row.certified_label == row.true_label && *row.radius >= r) ++hits;
    }
    curve.emplace_back(r, static_cast<double>(hits) / n);
  }
  return curve;
}

std::vector<ComparisonRow> compare_reports(const CertificationReport& baseline, const CertificationReport& candidate,
                                           const std::vector<double>& radius_grid) {
  if (baseline.rows.size() != candidate.rows.size()) {
    throw Error(ErrorCode::MismatchedTestSets, "reports cover different numbers of examples");
  }
  for (std::size_t i = 0; i < baseline.rows.size(); ++i) {
    if (baseline.rows[i].example_id != candidate.rows[i].example_id ||
        baseline.rows[i].true_label != candidate.rows[i].true_label) {
      throw Error(ErrorCode::MismatchedTestSets, "row " + std::to_string(i) + " refers to a different example");
    }
  }
  const auto base = certified_accuracy(baseline, radius_grid);
  const auto cand = certified_accuracy(candidate, radius_grid);
  std::vector<ComparisonRow> out;
  for (std::size_t i = 0; i < radius_grid.size(); ++i) {
    out.push_back({radius_grid[i], base[i].second, cand[i].second, cand[i].second - base[i].second});
  }
  return out;
}

void write_curve_csv(std::ostream& out, const std::vector<std::pair<double, double>>& curve) {
  out << "radius,certified_accuracy\n";
  for (const auto& [r, acc] : curve) out << format_double(r) << ',' << format_double(acc) << '\n';
}

void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows) {
  out << "radius,acc_baseline,acc_candidate,delta\n";
  for (const auto& row : rows) {
    out << format_double(row.radius) << ',' << format_double(row.baseline) << ',' << format_double(row.candidate)
        << ',' << format_double(row.delta) << '\n';
  }
}

// ---------------------------------------------------------------- certification

NoiseSpec SmoothedModel::noise_for(const Vector& x) const {
  if (generator != nullptr) return generator->noise_spec(x, family);
  return NoiseSpec::isotropic(family, x.dim(), sigma);
}

CertificationReport certify_dataset(const SmoothedModel& model, const Dataset& data, const CertifyConfig& cfg,
                                    bool record_timing) {
  data.validate();
  cfg.validate();
  if (model.classifier == nullptr) throw Error(ErrorCode::ConfigError, "model has no classifier");
  const net::MlpClassifier f(*model.classifier);
  CertifyConfig inner = cfg;
  inner.workers = 1;

  CertificationReport report;
  report.seed = cfg.seed;
  report.rows.resize(data.size());
  parallel_for(data.size(), cfg.workers, [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    const auto outcome = certify(f, data.inputs[i], model.noise_for(data.inputs[i]), inner, RandomStream(cfg.seed, i));
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    report.rows[i] = ReportRow{i,
                               data.labels[i],
                               outcome.status,
                               outcome.label,
                               outcome.radius,
                               outcome.pa_lower,
                               record_timing ? elapsed.count() : 0.0};
  });
  return report;
}

std::vector<PredictionRow> predict_dataset(const SmoothedModel& model, const Dataset& data, std::uint64_t n,
                                           double alpha, std::uint64_t seed, std::size_t workers) {
  data.validate();
  if (model.classifier == nullptr) throw Error(ErrorCode::ConfigError, "model has no classifier");
  const net::MlpClassifier f(*model.classifier);
  std::vector<PredictionRow> rows(data.size());
  parallel_for(data.size(), workers, [&](std::size_t i) {
    const auto p = predict(f, data.inputs[i], model.noise_for(data.inputs[i]), n, alpha, RandomStream(seed, i));
    rows[i] = PredictionRow{i, data.labels[i], p.label, p.p_value};
  });
  return rows;
}

Dataset attack_dataset(const net::Mlp& classifier, const Dataset& data, const AttackConfig& cfg) {
  data.validate();
  Dataset out = data;
  out.name = data.name + "_pgd";
  const double step = cfg.step.value_or(cfg.eps_inf / 4.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.inputs[i] = Vector(net::pgd_attack(classifier, data.inputs[i].values(), data.labels[i], cfg.eps_inf, cfg.iters,
                                           step, cfg.clip));
  }
  return out;
}

// ---------------------------------------------------------------- experiments

void ExperimentConfig::validate() const {
  try {
    certify.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  if (!(sigma > 0.0)) throw Error(ErrorCode::ConfigError, "sigma must be > 0");
  if (dataset.kind != "blobs" && dataset.kind != "csv") {
    throw Error(ErrorCode::ConfigError, "dataset.kind must be 'blobs' or 'csv'");
  }
  if (dataset.kind == "csv" && (dataset.train_path.empty() || dataset.test_path.empty())) {
    throw Error(ErrorCode::ConfigError, "csv datasets need train and test paths");
  }
  if (pipeline == Pipeline::Anisotropic) {
    if (!(generator.scale_lo > 0.0 && generator.scale_lo < generator.scale_hi)) {
      throw Error(ErrorCode::ConfigError, "generator needs 0 < scale_lo < scale_hi");
    }
    if (!(train.sigma_target > generator.scale_lo && train.sigma_target < generator.scale_hi)) {
      throw Error(ErrorCode::ConfigError, "sigma_target must lie inside the generator scale range");
    }
  }
  try {
    train.validate(nullptr);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  if (attack && !(attack->eps_inf >= 0.0 && attack->iters >= 1)) {
    throw Error(ErrorCode::ConfigError, "attack needs eps_inf >= 0 and iters >= 1");
  }
}

ExperimentConfig parse_experiment_config(const json& doc) {
  ExperimentConfig cfg;
  try {
    if (!doc.contains("schema_version")) throw Error(ErrorCode::ConfigError, "config lacks schema_version");
    if (doc.at("schema_version").get<int>() != kConfigSchemaVersion) {
      throw Error(ErrorCode::ConfigError, "unsupported config schema_version");
    }
    cfg.name = doc.value("name", cfg.name);
    if (doc.contains("dataset")) {
      const auto& d = doc.at("dataset");
      auto& s = cfg.dataset;
      s.kind = d.value("kind", s.kind);
      s.num_classes = d.value("num_classes", s.num_classes);
      s.train_per_class = d.value("train_per_class", s.train_per_class);
      s.test_per_class = d.value("test_per_class", s.test_per_class);
      s.dim = d.value("dim", s.dim);
      s.separation = d.value("separation", s.separation);
      s.noise_std = d.value("noise_std", s.noise_std);
      s.seed = d.value("seed", s.seed);
      s.train_path = d.value("train", s.train_path);
      s.test_path = d.value("test", s.test_path);
    }
    const std::string pipeline = doc.value("pipeline", std::string("anisotropic"));
    if (pipeline == "isotropic") {
      cfg.pipeline = Pipeline::Isotropic;
    } else if (pipeline == "anisotropic") {
      cfg.pipeline = Pipeline::Anisotropic;
    } else {
      throw Error(ErrorCode::ConfigError, "pipeline must be 'isotropic' or 'anisotropic'");
    }
    cfg.family = parse_noise_family(doc.value("family", std::string("gaussian")));
    cfg.sigma = doc.value("sigma", cfg.sigma);
    cfg.model_seed = doc.value("model_seed", cfg.model_seed);
    if (doc.contains("classifier")) {
      cfg.classifier.hidden = doc.at("classifier").value("hidden", cfg.classifier.hidden);
    }
    if (doc.contains("generator")) {
      const auto& g = doc.at("generator");
      cfg.generator.hidden = g.value("hidden", cfg.generator.hidden);
      cfg.generator.depth = g.value("depth", cfg.generator.depth);
      cfg.generator.mean_bound = g.value("mean_bound", cfg.generator.mean_bound);
      cfg.generator.scale_lo = g.value("scale_lo", cfg.generator.scale_lo);
      cfg.generator.scale_hi = g.value("scale_hi", cfg.generator.scale_hi);
    }
    if (doc.contains("train")) {
      const auto& t = doc.at("train");
      auto& tc = cfg.train;
      if (t.contains("loss_weights")) {
        const auto& w = t.at("loss_weights");
        tc.loss_weights.smoothing = w.value("ws", tc.loss_weights.smoothing);
        tc.loss_weights.variance = w.value("wv", tc.loss_weights.variance);
        tc.loss_weights.mean = w.value("wm", tc.loss_weights.mean);
      }
      tc.sigma_target = t.value("sigma_target", tc.sigma_target);
      tc.samples_per_input = t.value("samples_per_input", tc.samples_per_input);
      tc.learning_rate = t.value("learning_rate", tc.learning_rate);
      tc.epochs = t.value("epochs", tc.epochs);
      tc.batch = t.value("batch", tc.batch);
      tc.seed = t.value("seed", tc.seed);
    }
    cfg.train.fixed_sigma = cfg.sigma;
    if (doc.contains("certify")) {
      const auto& c = doc.at("certify");
      auto& cc = cfg.certify;
      cc.n0 = c.value("n0", cc.n0);
      cc.n = c.value("n", cc.n);
      cc.confidence_alpha = c.value("alpha", cc.confidence_alpha);
      cc.batch_size = c.value("batch_size", cc.batch_size);
      cc.seed = c.value("seed", cc.seed);
    }
    cfg.certify.workers = doc.value("workers", std::size_t{1});
    if (doc.contains("attack") && !doc.at("attack").is_null()) {
      const auto& a = doc.at("attack");
      AttackConfig ac;
      ac.eps_inf = a.value("eps_inf", ac.eps_inf);
      ac.iters = a.value("iters", ac.iters);
      if (a.contains("step")) ac.step = a.at("step").get<double>();
      if (a.contains("clip")) ac.clip = {a.at("clip").at(0).get<double>(), a.at("clip").at(1).get<double>()};
      cfg.attack = ac;
    }
    cfg.record_timing = doc.value("record_timing", cfg.record_timing);
    cfg.out_dir = doc.value("out_dir", cfg.out_dir);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  cfg.validate();
  return cfg;
}

json to_json(const ExperimentConfig& cfg) {
  json doc{{"schema_version", kConfigSchemaVersion},
           {"name", cfg.name},
           {"dataset",
            {{"kind", cfg.dataset.kind},
             {"num_classes", cfg.dataset.num_classes},
             {"train_per_class", cfg.dataset.train_per_class},
             {"test_per_class", cfg.dataset.test_per_class},
             {"dim", cfg.dataset.dim},
             {"separation", cfg.dataset.separation},
             {"noise_std", cfg.dataset.noise_std},
             {"seed", cfg.dataset.seed},
             {"train", cfg.dataset.train_path},
             {"test", cfg.dataset.test_path}}},
           {"pipeline", cfg.pipeline == Pipeline::Isotropic ? "isotropic" : "anisotropic"},
           {"family", to_string(cfg.family)},
           {"sigma", cfg.sigma},
           {"model_seed", cfg.model_seed},
           {"classifier", {{"hidden", cfg.classifier.hidden}}},
           {"generator",
            {{"hidden", cfg.generator.hidden},
             {"depth", cfg.generator.depth},
             {"mean_bound", cfg.generator.mean_bound},
             {"scale_lo", cfg.generator.scale_lo},
             {"scale_hi", cfg.generator.scale_hi}}},
           {"train",
            {{"loss_weights",
              {{"ws", cfg.train.loss_weights.smoothing},
               {"wv", cfg.train.loss_weights.variance},
               {"wm", cfg.train.loss_weights.mean}}},
             {"sigma_target", cfg.train.sigma_target},
             {"samples_per_input", cfg.train.samples_per_input},
             {"learning_rate", cfg.train.learning_rate},
             {"epochs", cfg.train.epochs},
             {"batch", cfg.train.batch},
             {"seed", cfg.train.seed}}},
           {"certify",
            {{"n0", cfg.certify.n0},
             {"n", cfg.certify.n},
             {"alpha", cfg.certify.confidence_alpha},
             {"batch_size", cfg.certify.batch_size},
             {"seed", cfg.certify.seed}}},
           {"workers", cfg.certify.workers},
           {"record_timing", cfg.record_timing},
           {"out_dir", cfg.out_dir}};
  if (cfg.attack) {
    json a{{"eps_inf", cfg.attack->eps_inf},
           {"iters", cfg.attack->iters},
           {"clip", {cfg.attack->clip.first, cfg.attack->clip.second}}};
    if (cfg.attack->step) a["step"] = *cfg.attack->step;
    doc["attack"] = a;
  }
  return doc;
}

std::pair<Dataset, Dataset> load_experiment_data(const ExperimentConfig& cfg) {
  const auto& s = cfg.dataset;
  if (s.kind == "csv") {
    Dataset train = load_dataset(s.train_path, Split::Train);
    Dataset test = load_dataset(s.test_path, Split::Test);
    train.num_classes = test.num_classes = std::max(train.num_classes, test.num_classes);
    return {std::move(train), std::move(test)};
  }
  return {make_blobs(s.num_classes, s.train_per_class, s.dim, s.separation, s.noise_std, s.seed, Split::Train),
          make_blobs(s.num_classes, s.test_per_class, s.dim, s.separation, s.noise_std, s.seed, Split::Test)};
}

TrainedPipeline train_pipeline(const ExperimentConfig& cfg, const Dataset& train_set) {
  cfg.validate();
  train_set.validate();
  const std::size_t dim = train_set.dim();
  std::vector<std::size_t> dims{dim};
  dims.insert(dims.end(), cfg.classifier.hidden.begin(), cfg.classifier.hidden.end());
  dims.push_back(train_set.num_classes);

  TrainedPipeline out{net::Mlp::random(dims, cfg.model_seed), std::nullopt, {}};
  net::TrainConfig train_cfg = cfg.train;
  train_cfg.fixed_sigma = cfg.sigma;
  if (cfg.pipeline == Pipeline::Anisotropic) {
    const auto& gs = cfg.generator;
    out.generator = net::NoiseGenNet::random(dim, gs.hidden, gs.depth, gs.mean_bound, gs.scale_lo, gs.scale_hi,
                                             train_cfg.sigma_target, cfg.model_seed + 1);
  }
  const auto examples = train_set.examples();
  out.trace = net::train(out.classifier, out.generator ? &*out.generator : nullptr, examples, train_cfg);
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto [train_set, test_set] = load_experiment_data(cfg);
  if (train_set.dim() != test_set.dim()) throw Error(ErrorCode::ConfigError, "train and test dims differ");

  auto trained = train_pipeline(cfg, train_set);
  ExperimentResult result{{}, std::nullopt, std::move(trained.trace), std::move(trained.classifier),
                          std::move(trained.generator)};
  const net::NoiseGenNet* gen = result.generator ? &*result.generator : nullptr;
  const SmoothedModel model{&result.classifier, gen, cfg.sigma, cfg.family};
  result.report = certify_dataset(model, test_set, cfg.certify, cfg.record_timing);
  result.report.config = to_json(cfg);
  if (cfg.attack) {
    const Dataset attacked = attack_dataset(result.classifier, test_set, *cfg.attack);
    result.attacked_report = certify_dataset(model, attacked, cfg.certify, cfg.record_timing);
    result.attacked_report->config = result.report.config;
  }

  if (!cfg.out_dir.empty()) {
    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    save_report((dir / "report.csv").string(), result.report);
    const auto grid = default_radius_grid();
    {
      auto out = open_out((dir / "curve.csv").string());
      write_curve_csv(out, certified_accuracy(result.report, grid));
    }
    if (result.attacked_report) {
      save_report((dir / "report_attacked.csv").string(), *result.attacked_report);
      auto out = open_out((dir / "comparison_attacked.csv").string());
      write_comparison_csv(out, compare_reports(result.report, *result.attacked_report, grid));
    }
    {
      auto out = open_out((dir / "trace.csv").string());
      out << "epoch,total,smoothing,variance,mean\n";
      for (std::size_t e = 0; e < result.trace.epoch_total.size(); ++e) {
        out << e << ',' << format_double(result.trace.epoch_total[e]) << ','
            << format_double(result.trace.epoch_smoothing[e]) << ',' << format_double(result.trace.epoch_variance[e])
            << ',' << format_double(result.trace.epoch_mean[e]) << '\n';
      }
    }
    net::save_mlp((dir / "model.json").string(), result.classifier, cfg.model_seed);
    if (result.generator) net::save_noisegen((dir / "noisegen.json").string(), *result.generator, cfg.model_seed + 1);
    net::write_json_file((dir / "summary.json").string(), result.report.config);
  }
  return result;
}

}  // namespace ars::harness

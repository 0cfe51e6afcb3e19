#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "ars/harness.hpp"
#include "ars/oracle.hpp"

using namespace ars;
using namespace ars::harness;

namespace {

ReportRow certified(std::size_t id, std::size_t truth, std::size_t label, double radius) {
  return {id, Label{truth}, CertifyStatus::Certified, Label{label}, radius, 0.9, 0.0};
}
ReportRow abstained(std::size_t id, std::size_t truth) {
  return {id, Label{truth}, CertifyStatus::Abstain, std::nullopt, std::nullopt, std::nullopt, 0.0};
}

double dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("blobs are deterministic and balanced") {
  const auto a = make_blobs(3, 20, 5, 4.0, 1.0, 7);
  const auto b = make_blobs(3, 20, 5, 4.0, 1.0, 7);
  CHECK(a.inputs == b.inputs);
  CHECK(a.labels == b.labels);
  CHECK(a.size() == 60);
  CHECK(a.labels[0].index == 0);
  CHECK(a.labels[4].index == 1);
  const auto test = make_blobs(3, 20, 5, 4.0, 1.0, 7, Split::Test);
  CHECK(test.inputs != a.inputs);
  CHECK_THROWS_AS(make_blobs(2, 0, 5, 4.0, 1.0, 7), Error);
}

TEST_CASE("simplex means are equidistant") {
  for (std::size_t k : {2u, 3u, 5u}) {
    const auto m = simplex_means(k, 8, 4.0);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) CHECK(std::abs(dist(m[i], m[j]) - 4.0) < 1e-9);
    }
  }
  const auto m = simplex_means(3, 2, 1.5);
  CHECK(std::abs(dist(m[0], m[1]) - dist(m[1], m[2])) < 1e-9);
  CHECK(std::abs(dist(m[0], m[2]) - 1.5) < 1e-9);
}

TEST_CASE("well separated blobs are fit exactly by least squares") {
  const auto d = make_blobs(2, 50, 3, 100.0, 0.01, 8);
  // One-vs-rest least squares on [x, 1] via the normal equations.
  const std::size_t p = d.dim() + 1;
  std::vector<std::vector<double>> ata(p, std::vector<double>(p + 1, 0.0));
  for (std::size_t r = 0; r < d.size(); ++r) {
    std::vector<double> row(d.inputs[r].begin(), d.inputs[r].end());
    row.push_back(1.0);
    const double y = d.labels[r].index == 1 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < p; ++j) ata[i][j] += row[i] * row[j];
      ata[i][p] += row[i] * y;
    }
  }
  for (std::size_t i = 0; i < p; ++i) ata[i][i] += 1e-9;
  for (std::size_t c = 0; c < p; ++c) {
    for (std::size_t r = c + 1; r < p; ++r) {
      const double f = ata[r][c] / ata[c][c];
      for (std::size_t k = c; k <= p; ++k) ata[r][k] -= f * ata[c][k];
    }
  }
  std::vector<double> w(p);
  for (std::size_t c = p; c-- > 0;) {
    double s = ata[c][p];
    for (std::size_t k = c + 1; k < p; ++k) s -= ata[c][k] * w[k];
    w[c] = s / ata[c][c];
  }
  std::size_t correct = 0;
  for (std::size_t r = 0; r < d.size(); ++r) {
    double s = w[p - 1];
    for (std::size_t i = 0; i + 1 < p; ++i) s += w[i] * d.inputs[r][i];
    correct += (s > 0) == (d.labels[r].index == 1);
  }
  CHECK(correct == d.size());
}

TEST_CASE("dataset csv round trip") {
  const auto d = make_blobs(3, 5, 4, 2.0, 1.0, 9);
  std::stringstream ss;
  write_dataset_csv(ss, d);
  const auto back = read_dataset_csv(ss, "x", Split::Test);
  CHECK(back.inputs == d.inputs);
  CHECK(back.labels == d.labels);
  CHECK(back.num_classes == 3);

  std::stringstream bad("x_0,x_1,label\n1.0,oops,0\n");
  CHECK_THROWS_AS(read_dataset_csv(bad, "x", Split::Test), Error);
  std::stringstream arity("x_0,x_1,label\n1.0,0\n");
  CHECK_THROWS_AS(read_dataset_csv(arity, "x", Split::Test), Error);
}

TEST_CASE("report csv round trip") {
  CertificationReport r;
  r.rows = {certified(0, 1, 1, 0.123456789012345678), abstained(1, 0), certified(2, 0, 1, 2.5)};
  r.rows[0].pa_lower = 0.7071067811865476;
  r.rows[2].wall_time_s = 1.25e-3;
  std::stringstream ss;
  write_report_csv(ss, r);
  const std::string text = ss.str();
  CHECK(text.rfind("example_id,true_label,status,certified_label,radius,pa_lower,wall_time_s\n", 0) == 0);
  CHECK(text.find("1,0,ABSTAIN,,,,0\n") != std::string::npos);
  const auto back = read_report_csv(ss);
  CHECK(back.rows == r.rows);

  std::stringstream no_header("0,1,CERTIFIED,1,0.5,0.9,0\n");
  CHECK_THROWS_AS(read_report_csv(no_header), Error);
  std::stringstream inconsistent("example_id,true_label,status,certified_label,radius,pa_lower,wall_time_s\n0,1,CERTIFIED,,,,0\n");
  CHECK_THROWS_AS(read_report_csv(inconsistent), Error);
}

TEST_CASE("certified accuracy") {
  CertificationReport abstain_all;
  for (std::size_t i = 0; i < 4; ++i) abstain_all.rows.push_back(abstained(i, 0));
  for (const auto& [r, acc] : certified_accuracy(abstain_all, default_radius_grid())) CHECK(acc == 0.0);

  CertificationReport unit;
  for (std::size_t i = 0; i < 4; ++i) unit.rows.push_back(certified(i, 1, 1, 1.0));
  for (const auto& [r, acc] : certified_accuracy(unit, default_radius_grid())) CHECK(acc == (r <= 1.0 ? 1.0 : 0.0));

  // Ten hand-written rows.
  CertificationReport mixed;
  mixed.rows = {certified(0, 0, 0, 0.3), certified(1, 1, 1, 1.2), certified(2, 1, 0, 3.0), abstained(3, 0),
                certified(4, 0, 0, 0.25), certified(5, 1, 1, 0.0001), abstained(6, 1), certified(7, 0, 0, 2.0),
                certified(8, 1, 0, 0.6), certified(9, 1, 1, 0.75)};
  const auto curve = certified_accuracy(mixed, {0.0, 0.25, 0.5, 1.0, 2.0, 2.5});
  const double want[] = {0.6, 0.5, 0.3, 0.2, 0.1, 0.0};
  for (std::size_t i = 0; i < curve.size(); ++i) CHECK(curve[i].second == doctest::Approx(want[i]).epsilon(1e-15));

  CHECK_THROWS_AS(certified_accuracy(CertificationReport{}, default_radius_grid()), Error);
}

TEST_CASE("compare reports") {
  CertificationReport base;
  base.rows = {certified(0, 0, 0, 0.5), abstained(1, 1), certified(2, 1, 1, 1.0)};
  for (const auto& row : compare_reports(base, base, default_radius_grid())) CHECK(row.delta == 0.0);

  CertificationReport better = base;
  better.rows[1] = certified(1, 1, 1, 2.0);
  better.rows[0].radius = 0.9;
  for (const auto& row : compare_reports(base, better, default_radius_grid())) CHECK(row.delta >= 0.0);

  CertificationReport shorter = base;
  shorter.rows.pop_back();
  CHECK_THROWS_AS(compare_reports(base, shorter, default_radius_grid()), Error);
  CertificationReport relabelled = base;
  relabelled.rows[2].true_label = Label{0};
  CHECK_THROWS_AS(compare_reports(base, relabelled, default_radius_grid()), Error);
}

TEST_CASE("accuracy curves are non-increasing for random reports") {
  RandomStream rng(60, 0);
  for (int t = 0; t < 100; ++t) {
    CertificationReport r;
    for (std::size_t i = 0; i < 30; ++i) {
      if (rng.uniform() < 0.2) {
        r.rows.push_back(abstained(i, i % 2));
      } else {
        r.rows.push_back(certified(i, i % 2, rng.uniform() < 0.8 ? i % 2 : 1 - i % 2, 4.0 * rng.uniform()));
      }
    }
    const auto curve = certified_accuracy(r, default_radius_grid());
    for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].second <= curve[i - 1].second);
  }
}

TEST_CASE("experiment config parsing") {
  nlohmann::json doc{{"schema_version", 1}, {"certify", {{"n0", 500}, {"n", 100}}}};
  try {
    parse_experiment_config(doc);
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
  }
  CHECK_THROWS_AS(parse_experiment_config(nlohmann::json{{"name", "x"}}), Error);
  CHECK_THROWS_AS(parse_experiment_config(nlohmann::json{{"schema_version", 1}, {"pipeline", "bogus"}}), Error);
  CHECK_THROWS_AS(parse_experiment_config(nlohmann::json{{"schema_version", 1}, {"family", "cauchy"}}), Error);
  CHECK_THROWS_AS(parse_experiment_config(nlohmann::json{{"schema_version", 1}, {"sigma", "big"}}), Error);

  ExperimentConfig cfg;
  cfg.name = "roundtrip";
  cfg.pipeline = Pipeline::Isotropic;
  cfg.sigma = 0.25;
  cfg.certify.n = 2000;
  cfg.attack = AttackConfig{};
  cfg.attack->step = 0.01;
  const auto back = parse_experiment_config(to_json(cfg));
  CHECK(to_json(back) == to_json(cfg));
}

TEST_CASE("small experiments run end to end and reproduce byte for byte") {
  ExperimentConfig cfg;
  cfg.dataset.train_per_class = 32;
  cfg.dataset.test_per_class = 8;
  cfg.dataset.dim = 4;
  cfg.classifier.hidden = {8};
  cfg.generator.hidden = 8;
  cfg.generator.depth = 2;
  cfg.train.epochs = 3;
  cfg.certify.n0 = 50;
  cfg.certify.n = 500;
  cfg.record_timing = false;
  cfg.attack = AttackConfig{};

  for (auto pipeline : {Pipeline::Isotropic, Pipeline::Anisotropic}) {
    cfg.pipeline = pipeline;
    const auto dir = std::filesystem::temp_directory_path() / ("ars_harness_" + std::to_string(int(pipeline)));
    std::filesystem::remove_all(dir);
    cfg.out_dir = dir.string();
    cfg.certify.workers = 1;
    const auto a = run_experiment(cfg);
    cfg.certify.workers = 3;
    cfg.out_dir.clear();
    const auto b = run_experiment(cfg);
    CHECK(a.report.rows.size() == 16);
    CHECK(a.generator.has_value() == (pipeline == Pipeline::Anisotropic));
    for (const auto& row : a.report.rows) {
      if (row.status == CertifyStatus::Certified) {
        CHECK(*row.pa_lower > 0.5);
        CHECK(*row.radius >= 0.0);
      }
    }
    std::stringstream sa, sb;
    write_report_csv(sa, a.report);
    write_report_csv(sb, b.report);
    CHECK(sa.str() == sb.str());
    CHECK(a.attacked_report.has_value());
    for (const char* name : {"report.csv", "curve.csv", "trace.csv", "model.json", "summary.json"}) {
      CHECK(std::filesystem::exists(dir / name));
    }
    CHECK(load_report((dir / "report.csv").string()).rows == a.report.rows);
    std::filesystem::remove_all(dir);
  }
}

TEST_CASE("certify_dataset uses one stream per example") {
  const net::Mlp f = net::Mlp::random({3, 4, 2}, 61);
  const auto data = make_blobs(2, 6, 3, 4.0, 1.0, 62, Split::Test);
  const SmoothedModel model{&f, nullptr, 0.5, NoiseFamily::Gaussian};
  CertifyConfig cfg;
  cfg.n0 = 50;
  cfg.n = 400;
  cfg.seed = 63;
  const auto report = certify_dataset(model, data, cfg, false);
  const net::MlpClassifier clf(f);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto out = certify(clf, data.inputs[i], NoiseSpec::isotropic(NoiseFamily::Gaussian, 3, 0.5), cfg,
                             RandomStream(63, i));
    CHECK(report.rows[i].status == out.status);
    CHECK(report.rows[i].radius == out.radius);
    CHECK(report.rows[i].wall_time_s == 0.0);
  }
}

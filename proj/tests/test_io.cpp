#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "out/config.hpp"
#include "out/io.hpp"

#include <filesystem>

using namespace out;

namespace {

const char* kGrid =
    "a,b,c\n"
    "1,2,3\n"
    "4,5,6\n"
    "7,8,9\n"
    "10,11,12\n"
    "13,14,15\n";

std::string error_of(const std::string& text, Orientation o) {
  try {
    parse_csv(text, o, "x.csv");
  } catch (const InvalidArgument& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("a 3 x 5 file read in either orientation") {
  const Dataset cols = parse_csv(kGrid, Orientation::SeriesInColumns);
  CHECK(cols.p() == 3);
  CHECK(cols.T() == 5);
  CHECK(cols.names == std::vector<std::string>{"a", "b", "c"});
  CHECK(cols.values(1, 2) == 8.0);
  const Dataset rows = parse_csv(kGrid, Orientation::SeriesInRows);
  CHECK(rows.p() == 5);
  CHECK(rows.T() == 3);
  CHECK(rows.time_labels == std::vector<std::string>{"a", "b", "c"});
  CHECK(rows.names[0] == "s1");
  CHECK(rows.values(1, 2) == 6.0);
  CHECK(parse_orientation("rows") == Orientation::SeriesInRows);
  CHECK_THROWS_AS(parse_orientation("diagonal"), InvalidArgument);
}

TEST_CASE("strict parsing names the offending cell") {
  const std::string na = error_of("a,b\n1,2\n3,NA\n", Orientation::SeriesInColumns);
  CHECK(contains(na, "line 3"));
  CHECK(contains(na, "column 2"));
  CHECK(contains(na, "'b'"));
  CHECK(contains(na, "NA"));
  CHECK(contains(error_of("a,b\n1,2\n3\n", Orientation::SeriesInColumns), "line 3"));
  CHECK(contains(error_of("a,b\n1,\n", Orientation::SeriesInColumns), "line 2"));
  CHECK(contains(error_of("a,b\n1,inf\n", Orientation::SeriesInColumns), "column 2"));
  CHECK_FALSE(error_of("1,2\n3,4\n", Orientation::SeriesInColumns).empty());  // numeric header: missing
  CHECK_FALSE(error_of("", Orientation::SeriesInColumns).empty());
  CHECK(error_of("a,b\r\n1,2\r\n3,4\r\n", Orientation::SeriesInColumns).empty());
}

TEST_CASE("preprocessing examples") {
  Dataset ds;
  ds.values = Matrix::Constant(2, 10, 3.5);
  ds.names = {"x", "y"};
  for (int t = 0; t < 10; ++t) ds.time_labels.push_back(std::to_string(t));
  const Dataset flat = preprocess(ds, true, 1);
  CHECK(flat.T() == 9);
  CHECK(flat.values.cwiseAbs().maxCoeff() == 0.0);

  // geometric y_t = c r^t: log-differences are log r, which centering removes
  for (int t = 0; t < 10; ++t) {
    ds.values(0, t) = 2.0 * std::pow(1.03, t);
    ds.values(1, t) = 0.5 * std::pow(0.9, t);
  }
  CHECK(preprocess(ds, true, 1).values.cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(preprocess(ds, false, 2).T() == 8);
  CHECK(preprocess(ds, false, 2).time_labels.front() == "2");

  Rng rng(91);
  ds.values = testing::gaussian_matrix(2, 10, rng) + Matrix::Constant(2, 10, 50.0);
  const Dataset c = preprocess(ds, false, 0);
  CHECK(c.values.rowwise().mean().cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((c.values.col(3) - c.values.col(1) - (ds.values.col(3) - ds.values.col(1))).norm() <= 1e-12);

  ds.values(1, 4) = -1.0;
  CHECK_THROWS_AS(preprocess(ds, true, 0), InvalidArgument);
  CHECK_THROWS_AS(preprocess(ds, false, 3), InvalidArgument);
}

TEST_CASE("written CSVs read back to 1e-12") {
  Rng rng(92);
  Dataset ds;
  ds.values = testing::gaussian_matrix(3, 7, rng, 1e3);
  ds.values(0, 0) = 1.0 / 3.0;
  ds.values(1, 1) = -2.5e-300;
  ds.names = {"alpha", "beta", "gamma"};
  for (int t = 0; t < 7; ++t) ds.time_labels.push_back(std::to_string(t + 1));
  const Dataset back = parse_csv(dataset_csv(ds), Orientation::SeriesInColumns);
  CHECK(back.names == ds.names);
  CHECK((back.values - ds.values).cwiseAbs().maxCoeff() == 0.0);

  const Matrix m = testing::gaussian_matrix(4, 3, rng);
  CHECK((parse_matrix_csv(matrix_csv(m, {"a", "b", "c"}), false) - m).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((parse_matrix_csv(matrix_csv(m, {"a", "b", "c"}, {"r1", "r2", "r3", "r4"}), true) - m)
            .cwiseAbs()
            .maxCoeff() <= 1e-12);
}

TEST_CASE("edge exports") {
  EdgeSet e;
  e.p = 3;
  e.edges.push_back({0, 2, -0.25});
  const std::string csv = edges_csv(e, {"x", "y", "z"});
  CHECK(contains(csv, "i,j,name_i,name_j,partial_correlation"));
  CHECK(contains(csv, "1,3,x,z,-0.25"));
  const std::string dot = edges_dot(e, {"x", "y", "z"});
  CHECK(contains(dot, "graph"));
  CHECK(contains(dot, "\"x\" -- \"z\""));
}

TEST_CASE("chain and checkpoint bytes round trip") {
  Rng rng(93);
  ChainOutput c;
  c.p = 3;
  c.K = 4;
  c.seed = 0xDEADBEEFull;
  c.draws.iterations = {10, 20};
  c.draws.L = testing::gaussian_matrix(2, 3, rng);
  c.draws.d = testing::gaussian_matrix(2, 3, rng).cwiseAbs();
  c.draws.A = testing::gaussian_matrix(2, 3, rng);
  c.draws.lambda = Vector::Constant(2, 0.1);
  c.draws.lambda_prime = Vector::Constant(2, 0.2);
  c.draws.theta = Matrix::Constant(2, 12, 0.125);
  c.draws.log_likelihood = Vector::Constant(2, -12.5);
  c.acceptance.push_back({"L", 100, 40, 50, 20});
  c.adaptation_log.push_back({7, "L", "step", 0.5, 0.55});
  const std::string bytes = serialize_chain(c);
  const ChainOutput b = deserialize_chain(bytes);
  CHECK(serialize_chain(b) == bytes);
  CHECK(b.seed == c.seed);
  CHECK(b.draws.L == c.draws.L);
  CHECK(b.adaptation_log[0].after == 0.55);
  CHECK_THROWS(deserialize_chain(bytes.substr(0, bytes.size() - 3)));
  CHECK_THROWS(deserialize_chain("NOTACHAIN"));

  // a checkpoint taken from a live sampler
  ScenarioSpec s;
  s.p = 3;
  s.T = 32;
  SamplerConfig cfg;
  cfg.total_iterations = 300;
  cfg.burn_in = 200;
  cfg.spectral_only_iterations = 20;
  cfg.shrinkage_start = 30;
  cfg.threshold_activation = 40;
  cfg.rank_truncation = 50;
  GibbsSampler g(generate(s).Y, PriorConfig{}, cfg);
  g.run_until(250);
  const std::string cp = serialize_checkpoint(g.checkpoint());
  CHECK(serialize_checkpoint(deserialize_checkpoint(cp)) == cp);
}

TEST_CASE("FNV-1a reference vectors") {
  CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
  CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
  CHECK(hex64(fnv1a64("foobar")) == "85944171f73967e8");
}

TEST_CASE("config files: keys, values and overrides") {
  const RunConfig cfg = parse_run_config(
      "[data]\npath = y.csv\nlog_transform = true\ndiff_order = 1\n"
      "[sampler]\ntotal_iterations = 2000\nrotation_kernel = adaptive_mh\n"
      "[prior]\nsigma_T = 0.2\n"
      "[output]\nedge_threshold = 0.2\n");
  CHECK(cfg.data.path == "y.csv");
  CHECK(cfg.data.log_transform);
  CHECK(cfg.data.diff_order == 1);
  CHECK(cfg.sampler.total_iterations == 2000);
  CHECK(cfg.sampler.rotation_kernel == RotationKernel::AdaptiveMH);
  CHECK(cfg.prior.sigma_T == 0.2);
  CHECK(cfg.prior.lambda_U == doctest::Approx(0.6));  // follows sigma_T unless given
  CHECK(cfg.output.edge_threshold == 0.2);
  CHECK(parse_run_config("[prior]\nsigma_T = 0.2\nlambda_U = 0.5\n").prior.lambda_U == 0.5);

  CHECK_THROWS_AS(parse_run_config("[sampler]\ntotal_iteration = 5\n"), InvalidArgument);
  CHECK_THROWS_AS(parse_run_config("[sampler]\ntotal_iterations = many\n"), InvalidArgument);
  CHECK_THROWS_AS(parse_run_config("[nowhere]\nx = 1\n"), InvalidArgument);
  CHECK_THROWS_AS(parse_run_config("[data]\nlog_transform = perhaps\n"), InvalidArgument);

  RunConfig d;
  set_config_value(d, "sampler.seed", "77");
  CHECK(d.sampler.seed == 77);
  set_config_value(d, "benchmark.T_values", "40,100");
  CHECK(d.benchmark.grid.T_values == std::vector<Index>{40, 100});
  CHECK_THROWS_AS(set_config_value(d, "sampler.nope", "1"), InvalidArgument);

  // the canonical dump lists every key and parses back to itself
  const std::string dump = canonical_config(d);
  for (const auto& k : config_keys()) CHECK(contains(dump, k.substr(k.find('.') + 1) + " = "));
  CHECK(canonical_config(parse_run_config(dump)) == dump);
}

TEST_CASE("validation catches bad values before anything runs") {
  RunConfig cfg;
  cfg.data.path = std::filesystem::temp_directory_path() / "out_io_test_missing.csv";
  CHECK_THROWS(validate_config(cfg, Command::Fit));
  const auto path = std::filesystem::temp_directory_path() / "out_io_test.csv";
  write_text_file(path, kGrid);
  cfg.data.path = path;
  CHECK_NOTHROW(validate_config(cfg, Command::Fit));
  cfg.output.edge_threshold = -1.0;
  CHECK_THROWS(validate_config(cfg, Command::Fit));
  cfg.output.edge_threshold = 0.1;
  cfg.data.diff_order = 3;
  CHECK_THROWS(validate_config(cfg, Command::Fit));
  cfg.data.diff_order = 0;
  cfg.output.lower_level = 0.9;
  cfg.output.upper_level = 0.1;
  CHECK_THROWS(validate_config(cfg, Command::Fit));
  std::filesystem::remove(path);
}

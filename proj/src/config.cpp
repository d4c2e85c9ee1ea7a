#include "out/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <functional>
#include <sstream>

namespace out {

namespace {

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw InvalidArgument("config key '" + key + "': expected " + expected + ", got '" + value + "'");
}

double to_double(const std::string& key, const std::string& raw) {
  const std::string v = strip(raw);
  double x = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(x))
    bad_value(key, raw, "a finite number");
  return x;
}

long long to_int(const std::string& key, const std::string& raw) {
  const std::string v = strip(raw);
  long long x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size()) bad_value(key, raw, "an integer");
  return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& raw) {
  const std::string v = strip(raw);
  std::uint64_t x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size()) bad_value(key, raw, "a nonnegative integer");
  return x;
}

bool to_bool(const std::string& key, const std::string& raw) {
  const std::string v = strip(raw);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, raw, "true or false");
}

// shortest text that reads back to the same double
std::string shortest(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::vector<std::string> split_list(const std::string& raw) {
  std::vector<std::string> items;
  std::string cur;
  for (char c : raw + ",") {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) items.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  return items;
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::ostringstream os;
  for (size_t k = 0; k < xs.size(); ++k) {
    if (k) os << ",";
    if constexpr (std::is_floating_point_v<T>) {
      os << shortest(xs[k]);
    } else {
      os << xs[k];
    }
  }
  return os.str();
}

std::string orientation_name(Orientation o) { return o == Orientation::SeriesInColumns ? "columns" : "rows"; }

struct Field {
  std::function<void(RunConfig&, const std::string& key, const std::string& value)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Member>
Field real_field(Member m) {
  return {[m](RunConfig& c, const std::string& k, const std::string& v) { m(c) = to_double(k, v); },
          [m](const RunConfig& c) { return shortest(m(c)); }};
}
template <typename Member>
Field int_field(Member m) {
  return {[m](RunConfig& c, const std::string& k, const std::string& v) {
            m(c) = static_cast<std::remove_reference_t<decltype(m(c))>>(to_int(k, v));
          },
          [m](const RunConfig& c) { return std::to_string(m(c)); }};
}
template <typename Member>
Field bool_field(Member m) {
  return {[m](RunConfig& c, const std::string& k, const std::string& v) { m(c) = to_bool(k, v); },
          [m](const RunConfig& c) { return std::string(m(c) ? "true" : "false"); }};
}
template <typename Member>
Field seed_field(Member m) {
  return {[m](RunConfig& c, const std::string& k, const std::string& v) { m(c) = to_u64(k, v); },
          [m](const RunConfig& c) { return std::to_string(m(c)); }};
}
template <typename Member>
Field orientation_field(Member m) {
  return {[m](RunConfig& c, const std::string&, const std::string& v) { m(c) = parse_orientation(strip(v)); },
          [m](const RunConfig& c) { return orientation_name(m(c)); }};
}
template <typename Member>
Field path_field(Member m) {
  return {[m](RunConfig& c, const std::string&, const std::string& v) { m(c) = strip(v); },
          [m](const RunConfig& c) { return m(c).string(); }};
}

#define OUT_MEMBER(expr) [](auto& c) -> auto& { return c.expr; }

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
    // data
    t.emplace_back("data.path", path_field(OUT_MEMBER(data.path)));
    t.emplace_back("data.orientation", orientation_field(OUT_MEMBER(data.orientation)));
    t.emplace_back("data.log_transform", bool_field(OUT_MEMBER(data.log_transform)));
    t.emplace_back("data.diff_order", int_field(OUT_MEMBER(data.diff_order)));
    // prior
    t.emplace_back("prior.sigma_T", real_field(OUT_MEMBER(prior.sigma_T)));
    t.emplace_back("prior.sigma_d", real_field(OUT_MEMBER(prior.sigma_d)));
    t.emplace_back("prior.lambda_L", real_field(OUT_MEMBER(prior.lambda_L)));
    t.emplace_back("prior.lambda_U", real_field(OUT_MEMBER(prior.lambda_U)));
    t.emplace_back("prior.nu1", real_field(OUT_MEMBER(prior.nu1)));
    t.emplace_back("prior.kappa1", real_field(OUT_MEMBER(prior.kappa1)));
    t.emplace_back("prior.kappa2", real_field(OUT_MEMBER(prior.kappa2)));
    t.emplace_back("prior.sigma_kappa", real_field(OUT_MEMBER(prior.sigma_kappa)));
    t.emplace_back("prior.c1", real_field(OUT_MEMBER(prior.c1)));
    t.emplace_back("prior.R", int_field(OUT_MEMBER(prior.R)));
    t.emplace_back("prior.K", int_field(OUT_MEMBER(prior.K)));
    t.emplace_back("prior.h0", real_field(OUT_MEMBER(prior.h0)));
    t.emplace_back("prior.penalty_ridge", real_field(OUT_MEMBER(prior.penalty_ridge)));
    // sampler
    t.emplace_back("sampler.total_iterations", int_field(OUT_MEMBER(sampler.total_iterations)));
    t.emplace_back("sampler.burn_in", int_field(OUT_MEMBER(sampler.burn_in)));
    t.emplace_back("sampler.thin", int_field(OUT_MEMBER(sampler.thin)));
    t.emplace_back("sampler.spectral_only_iterations", int_field(OUT_MEMBER(sampler.spectral_only_iterations)));
    t.emplace_back("sampler.threshold_activation", int_field(OUT_MEMBER(sampler.threshold_activation)));
    t.emplace_back("sampler.shrinkage_start", int_field(OUT_MEMBER(sampler.shrinkage_start)));
    t.emplace_back("sampler.rank_truncation", int_field(OUT_MEMBER(sampler.rank_truncation)));
    t.emplace_back("sampler.adaptation_window", int_field(OUT_MEMBER(sampler.adaptation_window)));
    t.emplace_back("sampler.proposal_refresh", int_field(OUT_MEMBER(sampler.proposal_refresh)));
    t.emplace_back("sampler.truncation_epsilon", real_field(OUT_MEMBER(sampler.truncation_epsilon)));
    t.emplace_back("sampler.step_L", real_field(OUT_MEMBER(sampler.step_L)));
    t.emplace_back("sampler.step_log_d", real_field(OUT_MEMBER(sampler.step_log_d)));
    t.emplace_back("sampler.step_xi", real_field(OUT_MEMBER(sampler.step_xi)));
    t.emplace_back("sampler.step_eta", real_field(OUT_MEMBER(sampler.step_eta)));
    t.emplace_back("sampler.rotation_scale", real_field(OUT_MEMBER(sampler.rotation_scale)));
    t.emplace_back("sampler.step_A", real_field(OUT_MEMBER(sampler.step_A)));
    t.emplace_back("sampler.threshold_scale", real_field(OUT_MEMBER(sampler.threshold_scale)));
    t.emplace_back("sampler.location_scale", real_field(OUT_MEMBER(sampler.location_scale)));
    t.emplace_back("sampler.mh_target_low", real_field(OUT_MEMBER(sampler.mh_target_low)));
    t.emplace_back("sampler.mh_target_high", real_field(OUT_MEMBER(sampler.mh_target_high)));
    t.emplace_back("sampler.lmc_target_low", real_field(OUT_MEMBER(sampler.lmc_target_low)));
    t.emplace_back("sampler.lmc_target_high", real_field(OUT_MEMBER(sampler.lmc_target_high)));
    t.emplace_back("sampler.baseline_blend", real_field(OUT_MEMBER(sampler.baseline_blend)));
    t.emplace_back("sampler.rotation_hot_start", bool_field(OUT_MEMBER(sampler.rotation_hot_start)));
    t.emplace_back("sampler.hot_start_lags", int_field(OUT_MEMBER(sampler.hot_start_lags)));
    t.emplace_back("sampler.lambda_floor", real_field(OUT_MEMBER(sampler.lambda_floor)));
    t.emplace_back("sampler.lambda_quantile", real_field(OUT_MEMBER(sampler.lambda_quantile)));
    t.emplace_back("sampler.spectral_init_scale", real_field(OUT_MEMBER(sampler.spectral_init_scale)));
    t.emplace_back("sampler.standardize", bool_field(OUT_MEMBER(sampler.standardize)));
    t.emplace_back("sampler.update_rotation", bool_field(OUT_MEMBER(sampler.update_rotation)));
    t.emplace_back("sampler.rotation_kernel",
                   Field{[](RunConfig& c, const std::string& k, const std::string& v) {
                           const std::string s = strip(v);
                           if (s == "langevin") c.sampler.rotation_kernel = RotationKernel::Langevin;
                           else if (s == "adaptive_mh") c.sampler.rotation_kernel = RotationKernel::AdaptiveMH;
                           else bad_value(k, v, "langevin or adaptive_mh");
                         },
                         [](const RunConfig& c) {
                           return std::string(c.sampler.rotation_kernel == RotationKernel::Langevin ? "langevin"
                                                                                                    : "adaptive_mh");
                         }});
    t.emplace_back("sampler.update_sigma_kappa", bool_field(OUT_MEMBER(sampler.update_sigma_kappa)));
    t.emplace_back("sampler.seed", seed_field(OUT_MEMBER(sampler.seed)));
    // output
    t.emplace_back("output.dir", path_field(OUT_MEMBER(output.dir)));
    t.emplace_back("output.edge_threshold", real_field(OUT_MEMBER(output.edge_threshold)));
    t.emplace_back("output.lower_level", real_field(OUT_MEMBER(output.lower_level)));
    t.emplace_back("output.upper_level", real_field(OUT_MEMBER(output.upper_level)));
    t.emplace_back("output.chains", int_field(OUT_MEMBER(output.chains)));
    t.emplace_back("output.workers", int_field(OUT_MEMBER(output.workers)));
    t.emplace_back("output.checkpoint_every", int_field(OUT_MEMBER(output.checkpoint_every)));
    t.emplace_back("output.spectral_grid", int_field(OUT_MEMBER(output.spectral_grid)));
    // simulate
    t.emplace_back("simulate.p", int_field(OUT_MEMBER(simulate.scenario.p)));
    t.emplace_back("simulate.T", int_field(OUT_MEMBER(simulate.scenario.T)));
    t.emplace_back("simulate.setting", int_field(OUT_MEMBER(simulate.scenario.setting)));
    t.emplace_back("simulate.sparsity", real_field(OUT_MEMBER(simulate.scenario.sparsity)));
    t.emplace_back("simulate.seed", seed_field(OUT_MEMBER(simulate.scenario.seed)));
    t.emplace_back("simulate.burn_in", int_field(OUT_MEMBER(simulate.scenario.burn_in)));
    t.emplace_back("simulate.orientation", orientation_field(OUT_MEMBER(simulate.orientation)));
    // benchmark
    t.emplace_back("benchmark.p", int_field(OUT_MEMBER(benchmark.grid.p)));
    t.emplace_back("benchmark.settings",
                   Field{[](RunConfig& c, const std::string& k, const std::string& v) {
                           c.benchmark.grid.settings.clear();
                           for (const auto& s : split_list(v))
                             c.benchmark.grid.settings.push_back(static_cast<int>(to_int(k, s)));
                         },
                         [](const RunConfig& c) { return join(c.benchmark.grid.settings); }});
    t.emplace_back("benchmark.T_values",
                   Field{[](RunConfig& c, const std::string& k, const std::string& v) {
                           c.benchmark.grid.T_values.clear();
                           for (const auto& s : split_list(v))
                             c.benchmark.grid.T_values.push_back(static_cast<Index>(to_int(k, s)));
                         },
                         [](const RunConfig& c) { return join(c.benchmark.grid.T_values); }});
    t.emplace_back("benchmark.sparsities",
                   Field{[](RunConfig& c, const std::string& k, const std::string& v) {
                           c.benchmark.grid.sparsities.clear();
                           for (const auto& s : split_list(v)) c.benchmark.grid.sparsities.push_back(to_double(k, s));
                         },
                         [](const RunConfig& c) { return join(c.benchmark.grid.sparsities); }});
    t.emplace_back("benchmark.replicates", int_field(OUT_MEMBER(benchmark.grid.replicates)));
    t.emplace_back("benchmark.base_seed", seed_field(OUT_MEMBER(benchmark.grid.base_seed)));
    t.emplace_back("benchmark.edge_threshold", real_field(OUT_MEMBER(benchmark.grid.edge_threshold)));
    t.emplace_back("benchmark.workers", int_field(OUT_MEMBER(benchmark.grid.n_workers)));
    t.emplace_back("benchmark.forecast", bool_field(OUT_MEMBER(benchmark.forecast)));
    t.emplace_back("benchmark.forecast_p", int_field(OUT_MEMBER(benchmark.forecast_grid.p)));
    t.emplace_back("benchmark.forecast_T", int_field(OUT_MEMBER(benchmark.forecast_grid.T)));
    t.emplace_back("benchmark.forecast_setting", int_field(OUT_MEMBER(benchmark.forecast_grid.setting)));
    t.emplace_back("benchmark.forecast_replicates", int_field(OUT_MEMBER(benchmark.forecast_grid.replicates)));
    t.emplace_back("benchmark.forecast_seed", seed_field(OUT_MEMBER(benchmark.forecast_grid.base_seed)));
    std::sort(t.begin(), t.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return t;
  }();
  return table;
}

#undef OUT_MEMBER

const Field* find_field(const std::string& key) {
  const auto& t = fields();
  const auto it = std::lower_bound(t.begin(), t.end(), key, [](const auto& e, const std::string& k) { return e.first < k; });
  return it != t.end() && it->first == key ? &it->second : nullptr;
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, f] : fields()) keys.push_back(k);
  return keys;
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  const Field* f = find_field(key);
  if (!f) throw InvalidArgument("unknown config key '" + key + "'");
  f->set(cfg, key, value);
}

RunConfig parse_run_config(const std::string& ini_text, const std::string& source) {
  boost::property_tree::ptree tree;
  std::istringstream in(ini_text);
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw InvalidArgument(source + ": line " + std::to_string(e.line()) + ": " + e.message());
  }
  RunConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw InvalidArgument(source + ": key '" + section + "' is outside any section");
    for (const auto& [key, value] : body) {
      const std::string name = section + "." + key;
      if (!find_field(name)) throw InvalidArgument(source + ": unknown config key '" + name + "'");
      set_config_value(cfg, name, value.data());
    }
  }
  // the slab bound tracks sigma_T unless set explicitly
  if (tree.get_child_optional("prior.sigma_T") && !tree.get_child_optional("prior.lambda_U"))
    cfg.prior.lambda_U = 3.0 * cfg.prior.sigma_T;
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_text_file(path), path.string());
}

void validate_config(const RunConfig& cfg, Command command) {
  auto fail = [](const std::string& msg) { throw InvalidArgument(msg); };
  cfg.prior.validate();
  cfg.sampler.validate();
  const auto& o = cfg.output;
  if (o.dir.empty()) fail("output.dir must be set");
  if (command == Command::Fit) {
    if (cfg.data.path.empty()) fail("data.path must be set");
    if (!std::filesystem::is_regular_file(cfg.data.path))
      fail("data.path '" + cfg.data.path.string() + "' does not exist");
    if (cfg.data.diff_order < 0 || cfg.data.diff_order > 2) fail("data.diff_order must be 0, 1 or 2");
    if (!(o.edge_threshold >= 0.0 && o.edge_threshold < 1.0)) fail("output.edge_threshold must lie in [0, 1)");
    if (!(o.lower_level > 0.0 && o.lower_level < o.upper_level && o.upper_level < 1.0))
      fail("output levels must satisfy 0 < lower_level < upper_level < 1");
    if (o.chains < 1 || o.chains > 64) fail("output.chains must lie in [1, 64]");
    if (o.workers < 1 || o.workers > 256) fail("output.workers must lie in [1, 256]");
    if (o.checkpoint_every < 0) fail("output.checkpoint_every must be >= 0");
    if (o.spectral_grid < 2) fail("output.spectral_grid must be >= 2");
  }
  if (command == Command::Simulate) cfg.simulate.scenario.validate();
  if (command == Command::Benchmark) {
    const auto& g = cfg.benchmark.grid;
    if (g.p < 2) fail("benchmark.p must be >= 2");
    if (g.replicates < 0) fail("benchmark.replicates must be >= 0");
    if (g.n_workers < 1 || g.n_workers > 256) fail("benchmark.workers must lie in [1, 256]");
    if (!(g.edge_threshold >= 0.0 && g.edge_threshold < 1.0)) fail("benchmark.edge_threshold must lie in [0, 1)");
    for (int s : g.settings)
      if (s < 1 || s > 3) fail("benchmark.settings entries must be 1, 2 or 3");
    for (Index T : g.T_values)
      if (T < 8) fail("benchmark.T_values entries must be >= 8");
    for (double sp : g.sparsities)
      if (!(sp > 0.0 && sp < 1.0)) fail("benchmark.sparsities entries must lie in (0, 1)");
    if (cfg.benchmark.forecast) {
      const auto& f = cfg.benchmark.forecast_grid;
      if (f.p < 2) fail("benchmark.forecast_p must be >= 2");
      if (f.T < 8) fail("benchmark.forecast_T must be >= 8");
      if (f.setting < 1 || f.setting > 3) fail("benchmark.forecast_setting must be 1, 2 or 3");
      if (f.replicates < 0) fail("benchmark.forecast_replicates must be >= 0");
    }
  }
}

std::string canonical_config(const RunConfig& cfg) {
  std::ostringstream os;
  std::string section;
  for (const auto& [k, f] : fields()) {
    const auto dot = k.find('.');
    if (k.compare(0, dot, section) != 0 || section.size() != dot) {
      section = k.substr(0, dot);
      os << (os.tellp() > 0 ? "\n" : "") << "[" << section << "]\n";
    }
    os << k.substr(dot + 1) << " = " << f.get(cfg) << "\n";
  }
  return os.str();
}

}  // namespace out

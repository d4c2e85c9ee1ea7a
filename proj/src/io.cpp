#include "out/io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

namespace out {

Orientation parse_orientation(const std::string& s) {
  if (s == "columns") return Orientation::SeriesInColumns;
  if (s == "rows") return Orientation::SeriesInRows;
  throw InvalidArgument("orientation must be 'columns' or 'rows', got '" + s + "'");
}

namespace {

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      lines.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty() && cur.back() == '\r') cur.pop_back();
  if (!cur.empty()) lines.push_back(cur);
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  std::string t = s.substr(b, e - b + 1);
  if (t.size() >= 2 && t.front() == '"' && t.back() == '"') t = t.substr(1, t.size() - 2);
  return t;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

bool parse_double(const std::string& s, double& x) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, last, x);
  return res.ec == std::errc() && res.ptr == last && std::isfinite(x);
}

}  // namespace

Dataset parse_csv(const std::string& text, Orientation orientation, const std::string& source) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines.front().empty()) throw InvalidArgument(source + ": missing header row");
  const auto header = split_fields(lines.front());
  for (size_t c = 0; c < header.size(); ++c)
    if (header[c].empty()) throw InvalidArgument(source + ": header column " + std::to_string(c + 1) + " is empty");
  if (orientation == Orientation::SeriesInColumns) {
    double probe = 0.0;
    bool all_numeric = true;
    for (const auto& h : header) all_numeric = all_numeric && parse_double(h, probe);
    if (all_numeric) throw InvalidArgument(source + ": missing header row (first line is numeric)");
  }
  if (lines.size() < 2) throw InvalidArgument(source + ": no data rows");

  const Index n_rows = static_cast<Index>(lines.size()) - 1;
  const Index n_cols = static_cast<Index>(header.size());
  Matrix cells(n_rows, n_cols);
  for (Index r = 0; r < n_rows; ++r) {
    const auto fields = split_fields(lines[static_cast<size_t>(r) + 1]);
    const std::string where = source + ": line " + std::to_string(r + 2);
    if (static_cast<Index>(fields.size()) != n_cols) {
      throw InvalidArgument(where + " has " + std::to_string(fields.size()) + " fields, header has " +
                            std::to_string(n_cols));
    }
    for (Index c = 0; c < n_cols; ++c) {
      double x = 0.0;
      if (!parse_double(fields[static_cast<size_t>(c)], x)) {
        throw InvalidArgument(where + ", column " + std::to_string(c + 1) + " ('" + header[static_cast<size_t>(c)] +
                              "'): invalid cell '" + fields[static_cast<size_t>(c)] + "'");
      }
      cells(r, c) = x;
    }
  }

  Dataset ds;
  if (orientation == Orientation::SeriesInColumns) {
    ds.values = cells.transpose();
    ds.names = header;
    for (Index t = 0; t < n_rows; ++t) ds.time_labels.push_back(std::to_string(t + 1));
  } else {
    ds.values = cells;
    ds.time_labels = header;
    for (Index j = 0; j < n_rows; ++j) ds.names.push_back("s" + std::to_string(j + 1));
  }
  return ds;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Dataset ingest_csv(const std::filesystem::path& path, Orientation orientation) {
  return parse_csv(read_text_file(path), orientation, path.string());
}

Dataset preprocess(const Dataset& ds, bool log_transform, int diff_order) {
  if (diff_order < 0 || diff_order > 2) throw InvalidArgument("diff_order must be 0, 1 or 2");
  Matrix x = ds.values;
  if (log_transform) {
    for (Index j = 0; j < x.rows(); ++j)
      for (Index t = 0; t < x.cols(); ++t)
        if (!(x(j, t) > 0.0)) {
          throw InvalidArgument("log transform needs positive values; series '" + ds.names[static_cast<size_t>(j)] +
                                "' at time " + ds.time_labels[static_cast<size_t>(t)] + " is " + format_real(x(j, t)));
        }
    x = x.array().log().matrix();
  }
  std::vector<std::string> labels = ds.time_labels;
  for (int k = 0; k < diff_order; ++k) {
    if (x.cols() < 2) throw InvalidArgument("series too short to difference");
    x = (x.rightCols(x.cols() - 1) - x.leftCols(x.cols() - 1)).eval();
    labels.erase(labels.begin());
  }
  x = (x.colwise() - x.rowwise().mean()).eval();
  if (!x.allFinite()) throw InvalidArgument("non-finite values after preprocessing");
  return Dataset{x, ds.names, labels};
}

std::string dataset_csv(const Dataset& ds) {
  std::ostringstream os;
  for (size_t j = 0; j < ds.names.size(); ++j) os << (j ? "," : "") << ds.names[j];
  os << '\n';
  for (Index t = 0; t < ds.T(); ++t) {
    for (Index j = 0; j < ds.p(); ++j) os << (j ? "," : "") << format_real(ds.values(j, t));
    os << '\n';
  }
  return os.str();
}

std::string matrix_csv(const Matrix& m, const std::vector<std::string>& col_names,
                       const std::vector<std::string>& row_names) {
  if (static_cast<Index>(col_names.size()) != m.cols()) throw InvalidArgument("matrix_csv: wrong number of column names");
  const bool labels = !row_names.empty();
  if (labels && static_cast<Index>(row_names.size()) != m.rows()) {
    throw InvalidArgument("matrix_csv: wrong number of row names");
  }
  std::ostringstream os;
  if (labels) os << "name,";
  for (size_t j = 0; j < col_names.size(); ++j) os << (j ? "," : "") << col_names[j];
  os << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    if (labels) os << row_names[static_cast<size_t>(i)] << ',';
    for (Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << format_real(m(i, j));
    os << '\n';
  }
  return os.str();
}

Matrix parse_matrix_csv(const std::string& text, bool has_row_labels) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw InvalidArgument("matrix csv: empty input");
  const Index cols = static_cast<Index>(split_fields(lines.front()).size()) - (has_row_labels ? 1 : 0);
  Matrix m(static_cast<Index>(lines.size()) - 1, cols);
  for (Index i = 0; i < m.rows(); ++i) {
    const auto f = split_fields(lines[static_cast<size_t>(i) + 1]);
    if (static_cast<Index>(f.size()) != cols + (has_row_labels ? 1 : 0)) {
      throw InvalidArgument("matrix csv: ragged row " + std::to_string(i + 2));
    }
    for (Index j = 0; j < cols; ++j) {
      const std::string& cell = f[static_cast<size_t>(j + (has_row_labels ? 1 : 0))];
      double x = 0.0;
      if (cell == "NA") {
        x = std::numeric_limits<double>::quiet_NaN();
      } else if (!parse_double(cell, x)) {
        throw InvalidArgument("matrix csv: invalid cell '" + cell + "' on line " + std::to_string(i + 2));
      }
      m(i, j) = x;
    }
  }
  return m;
}

std::string edges_csv(const EdgeSet& edges, const std::vector<std::string>& names) {
  std::ostringstream os;
  os << "i,j,name_i,name_j,partial_correlation\n";
  for (const auto& e : edges.edges) {
    os << e.i + 1 << ',' << e.j + 1 << ',' << names[static_cast<size_t>(e.i)] << ','
       << names[static_cast<size_t>(e.j)] << ',' << format_real(e.score) << '\n';
  }
  return os.str();
}

std::string edges_dot(const EdgeSet& edges, const std::vector<std::string>& names) {
  auto quote = [](const std::string& s) {
    std::string q = "\"";
    for (char c : s) {
      if (c == '"' || c == '\\') q.push_back('\\');
      q.push_back(c);
    }
    return q + "\"";
  };
  std::ostringstream os;
  os << "graph out {\n";
  for (Index j = 0; j < edges.p; ++j) os << "  " << quote(names[static_cast<size_t>(j)]) << ";\n";
  for (const auto& e : edges.edges) {
    os << "  " << quote(names[static_cast<size_t>(e.i)]) << " -- " << quote(names[static_cast<size_t>(e.j)])
       << " [weight=" << format_real(e.score) << "];\n";
  }
  os << "}\n";
  return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream outf(tmp, std::ios::binary | std::ios::trunc);
    if (!outf) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    outf.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!outf) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// binary encoding

namespace {

class Writer {
 public:
  template <typename T>
  void pod(T v) {
    const char* p = reinterpret_cast<const char*>(&v);
    buf_.append(p, sizeof(T));
  }
  void u32(std::uint32_t v) { pod(v); }
  void i64(std::int64_t v) { pod(v); }
  void u64(std::uint64_t v) { pod(v); }
  void f64(double v) { pod(v); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
  }
  void raw(const char* p, size_t n) { buf_.append(p, n); }
  void matrix(const Matrix& m) {
    i64(m.rows());
    i64(m.cols());
    raw(reinterpret_cast<const char*>(m.data()), sizeof(double) * static_cast<size_t>(m.size()));
  }
  void vector(const Vector& v) {
    i64(v.size());
    raw(reinterpret_cast<const char*>(v.data()), sizeof(double) * static_cast<size_t>(v.size()));
  }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& bytes, std::string what) : b_(bytes), what_(std::move(what)) {}
  template <typename T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, b_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::uint32_t u32() { return pod<std::uint32_t>(); }
  std::int64_t i64() { return pod<std::int64_t>(); }
  std::uint64_t u64() { return pod<std::uint64_t>(); }
  double f64() { return pod<double>(); }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void expect(const char* magic) {
    const size_t n = std::strlen(magic);
    need(n);
    if (b_.compare(pos_, n, magic) != 0) fail("bad magic");
    pos_ += n;
  }
  Matrix matrix() {
    const auto r = i64();
    const auto c = i64();
    if (r < 0 || c < 0) fail("negative shape");
    Matrix m(r, c);
    read_doubles(m.data(), static_cast<size_t>(r * c));
    return m;
  }
  Vector vector() {
    const auto n = i64();
    if (n < 0) fail("negative length");
    Vector v(n);
    read_doubles(v.data(), static_cast<size_t>(n));
    return v;
  }
  void read_doubles(double* dst, size_t n) {
    need(n * sizeof(double));
    std::memcpy(dst, b_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
  }
  bool done() const { return pos_ == b_.size(); }
  size_t position() const { return pos_; }
  [[noreturn]] void fail(const std::string& msg) const {
    throw InvalidArgument(what_ + ": " + msg + " at byte " + std::to_string(pos_));
  }

 private:
  void need(size_t n) const {
    if (pos_ + n > b_.size()) fail("truncated input");
  }
  const std::string& b_;
  std::string what_;
  size_t pos_ = 0;
};

constexpr std::uint32_t kChainVersion = 1;

void put_chain(Writer& w, const ChainOutput& c) {
  w.raw("OUTCHAIN", 8);
  w.u32(kChainVersion);
  w.i64(c.p);
  w.i64(c.K);
  w.u64(c.seed);
  const auto& d = c.draws;
  w.u32(8);
  {
    w.str("iteration");
    w.pod<std::uint8_t>(1);
    w.i64(d.size());
    w.i64(1);
    for (auto it : d.iterations) w.i64(it);
  }
  auto col = [&](const char* name, const Matrix& m) {
    w.str(name);
    w.pod<std::uint8_t>(0);
    w.matrix(m);
  };
  col("L", d.L);
  col("d", d.d);
  col("A", d.A);
  col("lambda", d.lambda);
  col("lambda_prime", d.lambda_prime);
  col("theta", d.theta);
  col("log_likelihood", d.log_likelihood);

  w.u32(static_cast<std::uint32_t>(c.acceptance.size()));
  for (const auto& b : c.acceptance) {
    w.str(b.block);
    w.i64(b.attempts);
    w.i64(b.accepted);
    w.i64(b.sampling_attempts);
    w.i64(b.sampling_accepted);
  }
  w.u32(static_cast<std::uint32_t>(c.adaptation_log.size()));
  for (const auto& e : c.adaptation_log) {
    w.i64(e.iteration);
    w.str(e.block);
    w.str(e.kind);
    w.f64(e.before);
    w.f64(e.after);
  }
}

ChainOutput get_chain(Reader& r) {
  r.expect("OUTCHAIN");
  if (r.u32() != kChainVersion) r.fail("unsupported chain version");
  ChainOutput c;
  c.p = r.i64();
  c.K = r.i64();
  c.seed = r.u64();
  const auto n_cols = r.u32();
  auto& d = c.draws;
  for (std::uint32_t k = 0; k < n_cols; ++k) {
    const std::string name = r.str();
    const auto type = r.pod<std::uint8_t>();
    if (type == 1) {
      const auto rows = r.i64();
      if (r.i64() != 1 || rows < 0) r.fail("bad integer column shape");
      d.iterations.resize(static_cast<size_t>(rows));
      for (auto& it : d.iterations) it = r.i64();
      if (name != "iteration") r.fail("unknown integer column '" + name + "'");
      continue;
    }
    if (type != 0) r.fail("unknown column type");
    Matrix m = r.matrix();
    if (name == "L") d.L = m;
    else if (name == "d") d.d = m;
    else if (name == "A") d.A = m;
    else if (name == "lambda") d.lambda = m.col(0);
    else if (name == "lambda_prime") d.lambda_prime = m.col(0);
    else if (name == "theta") d.theta = m;
    else if (name == "log_likelihood") d.log_likelihood = m.col(0);
    else r.fail("unknown column '" + name + "'");
  }
  const auto n = d.size();
  if (d.L.rows() != n || d.d.rows() != n || d.A.rows() != n || d.lambda.size() != n || d.lambda_prime.size() != n ||
      d.theta.rows() != n || d.log_likelihood.size() != n) {
    r.fail("columns disagree on the number of draws");
  }
  const auto n_blocks = r.u32();
  for (std::uint32_t k = 0; k < n_blocks; ++k) {
    BlockStats b;
    b.block = r.str();
    b.attempts = r.i64();
    b.accepted = r.i64();
    b.sampling_attempts = r.i64();
    b.sampling_accepted = r.i64();
    c.acceptance.push_back(b);
  }
  const auto n_events = r.u32();
  for (std::uint32_t k = 0; k < n_events; ++k) {
    AdaptationEvent e;
    e.iteration = r.i64();
    e.block = r.str();
    e.kind = r.str();
    e.before = r.f64();
    e.after = r.f64();
    c.adaptation_log.push_back(e);
  }
  return c;
}

}  // namespace

std::string serialize_chain(const ChainOutput& chain) {
  Writer w;
  put_chain(w, chain);
  return w.bytes();
}

ChainOutput deserialize_chain(const std::string& bytes) {
  Reader r(bytes, "chain file");
  ChainOutput c = get_chain(r);
  if (!r.done()) r.fail("trailing bytes");
  return c;
}

void write_chain(const std::filesystem::path& path, const ChainOutput& chain) {
  write_text_file(path, serialize_chain(chain));
}

ChainOutput read_chain(const std::filesystem::path& path) { return deserialize_chain(read_text_file(path)); }

std::string serialize_checkpoint(const SamplerCheckpoint& cp) {
  Writer w;
  w.raw("OUTCKPT1", 8);
  w.i64(cp.iteration);
  const auto& s = cp.state;
  w.vector(s.l_raw);
  w.vector(s.log_d);
  w.vector(s.a_raw);
  w.f64(s.thresholds.lambda);
  w.f64(s.thresholds.lambda_prime);
  w.matrix(s.spectral.xi);
  w.matrix(s.spectral.eta);
  w.u32(static_cast<std::uint32_t>(s.spectral.active.size()));
  for (char a : s.spectral.active) w.pod<std::uint8_t>(a ? 1 : 0);
  w.matrix(s.shrinkage.v);
  w.vector(s.shrinkage.delta);
  w.f64(s.shrinkage.sigma_kappa);
  w.f64(s.ig_location);

  w.u32(static_cast<std::uint32_t>(cp.steps.size()));
  for (double x : cp.steps) w.f64(x);
  w.vector(cp.l_scale);
  w.u32(static_cast<std::uint32_t>(cp.windows.size()));
  for (const auto& win : cp.windows) {
    w.i64(win.attempts);
    w.i64(win.accepted);
  }
  const auto& rp = cp.rotation_proposal;
  w.i64(rp.dim);
  w.i64(rp.refresh_interval);
  w.i64(rp.count);
  w.i64(rp.version);
  w.f64(rp.initial_scale);
  w.f64(rp.nugget);
  w.f64(rp.scale);
  w.vector(rp.sum);
  w.matrix(rp.outer);
  w.matrix(rp.base_cov);
  w.vector(cp.l_mean_sum);
  w.vector(cp.a_mean_sum);
  w.i64(cp.mean_count);
  w.str(cp.rng_state);
  w.f64(cp.partial.wall_seconds);
  put_chain(w, cp.partial);
  return w.bytes();
}

SamplerCheckpoint deserialize_checkpoint(const std::string& bytes) {
  Reader r(bytes, "checkpoint");
  r.expect("OUTCKPT1");
  SamplerCheckpoint cp;
  cp.iteration = r.i64();
  auto& s = cp.state;
  s.l_raw = r.vector();
  s.log_d = r.vector();
  s.a_raw = r.vector();
  s.thresholds.lambda = r.f64();
  s.thresholds.lambda_prime = r.f64();
  s.spectral.xi = r.matrix();
  s.spectral.eta = r.matrix();
  const auto n_active = r.u32();
  s.spectral.active.resize(n_active);
  for (auto& a : s.spectral.active) a = static_cast<char>(r.pod<std::uint8_t>());
  s.shrinkage.v = r.matrix();
  s.shrinkage.delta = r.vector();
  s.shrinkage.sigma_kappa = r.f64();
  s.ig_location = r.f64();

  const auto n_steps = r.u32();
  for (std::uint32_t k = 0; k < n_steps; ++k) cp.steps.push_back(r.f64());
  cp.l_scale = r.vector();
  const auto n_windows = r.u32();
  for (std::uint32_t k = 0; k < n_windows; ++k) {
    AcceptanceWindow win;
    win.attempts = r.i64();
    win.accepted = r.i64();
    cp.windows.push_back(win);
  }
  auto& rp = cp.rotation_proposal;
  rp.dim = r.i64();
  rp.refresh_interval = r.i64();
  rp.count = r.i64();
  rp.version = r.i64();
  rp.initial_scale = r.f64();
  rp.nugget = r.f64();
  rp.scale = r.f64();
  rp.sum = r.vector();
  rp.outer = r.matrix();
  rp.base_cov = r.matrix();
  cp.l_mean_sum = r.vector();
  cp.a_mean_sum = r.vector();
  cp.mean_count = r.i64();
  cp.rng_state = r.str();
  const double wall = r.f64();
  cp.partial = get_chain(r);
  cp.partial.wall_seconds = wall;
  if (!r.done()) r.fail("trailing bytes");
  return cp;
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace out

#include "poolgraph/stream.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace poolgraph {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = line.find(sep, pos);
    out.push_back(trim(line.substr(pos, next == std::string_view::npos ? next : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

std::optional<double> parse_double(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

}  // namespace

void LabeledStream::validate() const {
  const bool labelled = has_labels();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (p.values.size() != dimension)
      throw Error("point " + std::to_string(i) + " has dimension " +
                  std::to_string(p.values.size()) + ", expected " + std::to_string(dimension));
    for (double v : p.values)
      if (!std::isfinite(v)) throw Error("point " + std::to_string(i) + " has a non-finite value");
    if (p.label.has_value() != labelled)
      throw Error("labels must be present for every point or for none");
    if (p.label && *p.label > 1) throw Error("label must be 0 or 1");
  }
}

LabeledStream parse_stream_csv(const std::string& text, const CsvSchema& schema,
                               std::string name) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) {
      header = split(line, ',');
      break;
    }
  }
  if (header.empty()) throw Error("empty CSV input");

  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() != header.size())
      throw Error("ragged row at line " + std::to_string(line_no) + ": " +
                  std::to_string(cells.size()) + " cells, header has " +
                  std::to_string(header.size()));
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw Error("CSV input has no data rows");

  auto column_of = [&](const std::string& col) -> std::optional<std::size_t> {
    const auto it = std::find(header.begin(), header.end(), col);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };

  std::size_t label_col = header.size();  // header.size() means "no label column"
  if (!schema.label_column.empty())
    if (const auto idx = column_of(schema.label_column)) label_col = *idx;
  const bool has_label = label_col < header.size();
  std::vector<std::size_t> value_cols;
  if (!schema.value_columns.empty()) {
    for (const auto& col : schema.value_columns) {
      const auto idx = column_of(col);
      if (!idx) throw Error("value column '" + col + "' not found in header");
      value_cols.push_back(*idx);
    }
  } else {
    // Auto-detect: every column whose first row parses as a number.
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == label_col) continue;
      if (parse_double(rows.front()[c])) value_cols.push_back(c);
    }
  }
  if (value_cols.empty()) throw Error("no numeric value columns in CSV input");

  LabeledStream stream;
  stream.name = std::move(name);
  stream.dimension = value_cols.size();
  stream.points.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    TimePoint p;
    p.index = r;
    p.values.reserve(value_cols.size());
    for (auto c : value_cols) {
      const auto v = parse_double(rows[r][c]);
      if (!v) throw Error("non-numeric value '" + rows[r][c] + "' in column '" + header[c] +
                          "' at data row " + std::to_string(r + 1));
      if (!std::isfinite(*v))
        throw Error("non-finite value in column '" + header[c] + "' at data row " +
                    std::to_string(r + 1));
      p.values.push_back(*v);
    }
    if (has_label) {
      const auto& cell = rows[r][label_col];
      if (cell == "0")
        p.label = 0;
      else if (cell == "1")
        p.label = 1;
      else
        throw Error("label '" + cell + "' at data row " + std::to_string(r + 1) +
                    " is not 0 or 1");
    }
    stream.points.push_back(std::move(p));
  }
  stream.validate();
  return stream;
}

LabeledStream load_stream(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open stream file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_stream_csv(buffer.str(), schema, path.stem().string());
}

void write_stream_csv(const LabeledStream& stream, std::ostream& out, int precision) {
  const bool labelled = stream.has_labels();
  for (std::size_t j = 0; j < stream.dimension; ++j) out << (j ? "," : "") << 'v' << j;
  if (labelled) out << ",label";
  out << '\n';
  out << std::setprecision(precision);
  for (const auto& p : stream.points) {
    for (std::size_t j = 0; j < p.values.size(); ++j) out << (j ? "," : "") << p.values[j];
    if (labelled) out << ',' << static_cast<int>(*p.label);
    out << '\n';
  }
}

std::vector<Batch> batch_iter(const LabeledStream& stream, std::size_t batch_size) {
  if (batch_size < 2) throw Error("batch_size must be at least 2");
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < stream.size(); start += batch_size) {
    const std::size_t stop = std::min(stream.size(), start + batch_size);
    if (stop - start < batch_size && stop - start < kMinBatchLength) break;  // short tail
    Batch b;
    b.batch_index = batches.size();
    b.points.assign(stream.points.begin() + static_cast<std::ptrdiff_t>(start),
                    stream.points.begin() + static_cast<std::ptrdiff_t>(stop));
    batches.push_back(std::move(b));
  }
  if (batches.empty())
    throw Error("stream of length " + std::to_string(stream.size()) +
                " yields no batch of at least " + std::to_string(kMinBatchLength) + " points");
  return batches;
}

GeneratorSpec parse_generator_spec(const std::string& text) {
  GeneratorSpec spec;
  const auto colon = text.find(':');
  const std::string kind = trim(text.substr(0, colon));
  if (kind == "sinusoid")
    spec.kind = GeneratorKind::sinusoid;
  else if (kind == "gaussian")
    spec.kind = GeneratorKind::gaussian;
  else if (kind == "ar1")
    spec.kind = GeneratorKind::ar1;
  else
    throw Error("unknown generator '" + kind + "'");
  if (colon == std::string::npos) return spec;

  for (const auto& item : split(text.substr(colon + 1), ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error("generator parameter without '=': " + item);
    const std::string key = trim(item.substr(0, eq));
    const std::string value = trim(item.substr(eq + 1));
    auto number = [&]() {
      const auto v = parse_double(value);
      if (!v) throw Error("generator parameter " + key + " is not numeric: " + value);
      return *v;
    };
    if (key == "length")
      spec.length = static_cast<std::size_t>(number());
    else if (key == "anomaly_rate" || key == "rate")
      spec.anomaly_rate = number();
    else if (key == "dim" || key == "dimension")
      spec.dimension = static_cast<std::size_t>(number());
    else if (key == "period")
      spec.period = number();
    else if (key == "amplitude")
      spec.amplitude = number();
    else if (key == "noise")
      spec.noise = number();
    else if (key == "spike")
      spec.spike = number();
    else if (key == "phi")
      spec.phi = number();
    else if (key == "seed")
      spec.seed = static_cast<std::uint64_t>(number());
    else if (key == "shift") {
      const auto at = value.find('@');
      if (at == std::string::npos) throw Error("shift must be <size>@<index>");
      const auto size = parse_double(value.substr(0, at));
      const auto index = parse_double(value.substr(at + 1));
      if (!size || !index || *index < 0) throw Error("malformed shift: " + value);
      spec.shift = MeanShift{static_cast<std::size_t>(*index), *size};
    } else {
      throw Error("unknown generator parameter '" + key + "'");
    }
  }
  return spec;
}

std::string format_generator_spec(const GeneratorSpec& spec) {
  std::ostringstream out;
  out << std::setprecision(17);
  switch (spec.kind) {
    case GeneratorKind::sinusoid: out << "sinusoid"; break;
    case GeneratorKind::gaussian: out << "gaussian"; break;
    case GeneratorKind::ar1: out << "ar1"; break;
  }
  out << ":length=" << spec.length << ",anomaly_rate=" << spec.anomaly_rate
      << ",dim=" << spec.dimension << ",period=" << spec.period << ",amplitude=" << spec.amplitude
      << ",noise=" << spec.noise << ",spike=" << spec.spike << ",phi=" << spec.phi
      << ",seed=" << spec.seed;
  if (spec.shift) out << ",shift=" << spec.shift->size << '@' << spec.shift->at;
  return out.str();
}

double stationary_stddev(const GeneratorSpec& spec) {
  switch (spec.kind) {
    case GeneratorKind::sinusoid:
      return std::sqrt(spec.amplitude * spec.amplitude / 2.0 + spec.noise * spec.noise);
    case GeneratorKind::gaussian: return spec.noise;
    case GeneratorKind::ar1: return spec.noise / std::sqrt(1.0 - spec.phi * spec.phi);
  }
  return 0.0;
}

LabeledStream synth_stream(const GeneratorSpec& spec) {
  if (spec.length == 0) throw Error("generator length must be positive");
  if (spec.dimension == 0) throw Error("generator dimension must be positive");
  if (!(spec.anomaly_rate >= 0.0 && spec.anomaly_rate < 0.5))
    throw Error("anomaly_rate must lie in [0, 0.5)");
  if (spec.kind == GeneratorKind::ar1 && !(std::abs(spec.phi) < 1.0))
    throw Error("ar1 coefficient must satisfy |phi| < 1");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.noise);
  const std::size_t d = spec.dimension;

  LabeledStream stream;
  stream.dimension = d;
  stream.name = format_generator_spec(spec);
  stream.points.resize(spec.length);

  std::vector<double> ar_state(d, 0.0);
  for (std::size_t t = 0; t < spec.length; ++t) {
    auto& p = stream.points[t];
    p.index = t;
    p.label = 0;
    p.values.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      double v = 0.0;
      switch (spec.kind) {
        case GeneratorKind::sinusoid:
          v = spec.amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / spec.period +
                                        static_cast<double>(j) * std::numbers::pi / 3.0) +
              noise(rng);
          break;
        case GeneratorKind::gaussian: v = noise(rng); break;
        case GeneratorKind::ar1:
          ar_state[j] = spec.phi * ar_state[j] + noise(rng);
          v = ar_state[j];
          break;
      }
      if (spec.shift && t >= spec.shift->at) v += spec.shift->size;
      p.values[j] = v;
    }
  }

  // Spike injection: an exact count of distinct indices, one random dimension each.
  const auto n_anomalies =
      static_cast<std::size_t>(std::llround(spec.anomaly_rate * static_cast<double>(spec.length)));
  if (n_anomalies > 0) {
    std::vector<std::size_t> order(spec.length);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::uniform_real_distribution<double> magnitude(0.75, 1.25);
    std::uniform_int_distribution<std::size_t> pick_dim(0, d - 1);
    std::bernoulli_distribution sign(0.5);
    for (std::size_t k = 0; k < n_anomalies; ++k) {
      auto& p = stream.points[order[k]];
      const double m = spec.spike * magnitude(rng);
      p.values[pick_dim(rng)] += sign(rng) ? m : -m;
      p.label = 1;
    }
  }
  return stream;
}

LabeledStream synth_stream(const std::string& kind, std::size_t length, double anomaly_rate,
                           std::optional<MeanShift> shift, std::uint64_t seed) {
  auto spec = parse_generator_spec(kind);
  spec.length = length;
  spec.anomaly_rate = anomaly_rate;
  spec.shift = shift;
  spec.seed = seed;
  return synth_stream(spec);
}

void Standardizer::observe(std::span<const double> row) {
  if (mean_.empty()) {
    mean_.assign(row.size(), 0.0);
    m2_.assign(row.size(), 0.0);
  }
  if (row.size() != mean_.size()) throw Error("standardizer dimension mismatch");
  ++count_;
  const double n = static_cast<double>(count_);
  for (std::size_t j = 0; j < row.size(); ++j) {
    const double delta = row[j] - mean_[j];
    mean_[j] += delta / n;
    m2_[j] += delta * (row[j] - mean_[j]);
  }
}

void Standardizer::transform(std::span<const double> row, std::span<double> out) const {
  if (row.size() != mean_.size() || out.size() != row.size())
    throw Error("standardizer dimension mismatch");
  for (std::size_t j = 0; j < row.size(); ++j) {
    const double var = count_ > 1 ? m2_[j] / static_cast<double>(count_ - 1) : 0.0;
    const double sd = std::sqrt(var);
    out[j] = sd > 1e-12 ? (row[j] - mean_[j]) / sd : row[j] - mean_[j];
  }
}

}  // namespace poolgraph

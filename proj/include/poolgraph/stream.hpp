#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace poolgraph {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A final partial batch shorter than this is dropped.
inline constexpr std::size_t kMinBatchLength = 10;

struct TimePoint {
  std::size_t index = 0;
  std::vector<double> values;
  std::optional<std::uint8_t> label;  // 0 normal, 1 anomaly
};

struct Batch {
  std::size_t batch_index = 0;
  std::vector<TimePoint> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  std::size_t dimension() const { return points.empty() ? 0 : points.front().values.size(); }
};

struct LabeledStream {
  std::size_t dimension = 0;
  std::vector<TimePoint> points;
  std::string name;

  std::size_t size() const { return points.size(); }
  bool has_labels() const { return !points.empty() && points.front().label.has_value(); }
  /// Throws Error when a point breaks the dimension, finiteness or label-presence rules.
  void validate() const;
};

/// Column mapping for CSV input. Empty `value_columns` means "every numeric column except the label".
struct CsvSchema {
  std::vector<std::string> value_columns;
  std::string label_column = "label";
};

LabeledStream load_stream(const std::filesystem::path& path, const CsvSchema& schema = {});
LabeledStream parse_stream_csv(const std::string& text, const CsvSchema& schema = {},
                               std::string name = "stream");
/// Writes a header row (v0..v{d-1}[,label]) and one row per point with `precision` significant digits.
void write_stream_csv(const LabeledStream& stream, std::ostream& out, int precision = 17);

/// Splits the stream into consecutive batches. A final partial batch shorter than kMinBatchLength
/// is dropped; throws Error when no batch remains.
std::vector<Batch> batch_iter(const LabeledStream& stream, std::size_t batch_size);

enum class GeneratorKind { sinusoid, gaussian, ar1 };

struct MeanShift {
  std::size_t at = 0;
  double size = 0.0;
};

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::sinusoid;
  std::size_t length = 1000;
  double anomaly_rate = 0.0;
  std::size_t dimension = 1;
  double period = 64.0;
  double amplitude = 1.0;
  double noise = 0.1;
  double spike = 1.0;  // injected spikes have magnitude spike * U(0.75, 1.25)
  double phi = 0.8;    // ar1 coefficient
  std::optional<MeanShift> shift;
  std::uint64_t seed = 0;
};

/// Parses "kind:key=value,key=value"; `shift=<size>@<index>` adds a mean shift.
GeneratorSpec parse_generator_spec(const std::string& text);
std::string format_generator_spec(const GeneratorSpec& spec);

LabeledStream synth_stream(const GeneratorSpec& spec);
LabeledStream synth_stream(const std::string& kind, std::size_t length, double anomaly_rate,
                           std::optional<MeanShift> shift, std::uint64_t seed);

/// Stationary standard deviation of a generator's clean signal plus noise.
double stationary_stddev(const GeneratorSpec& spec);

/// Running per-dimension mean and variance (Welford).
class Standardizer {
 public:
  explicit Standardizer(std::size_t dimension = 0) : mean_(dimension, 0.0), m2_(dimension, 0.0) {}

  void observe(std::span<const double> row);
  /// (x - mean) / std, with std floored so constant dimensions map to zero offsets.
  void transform(std::span<const double> row, std::span<double> out) const;
  std::size_t count() const { return count_; }
  std::size_t dimension() const { return mean_.size(); }

 private:
  std::size_t count_ = 0;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

}  // namespace poolgraph

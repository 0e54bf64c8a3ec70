#include "poolgraph/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace poolgraph {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(std::string_view key, std::string_view v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(std::string(v), &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw Error("config: '" + std::string(key) + "' expects a number, got '" + std::string(v) + "'");
  }
}

std::uint64_t to_unsigned(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw Error("config: '" + std::string(key) + "' expects a nonnegative integer, got '" +
                std::string(v) + "'");
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error("config: '" + std::string(key) + "' expects true or false");
}

}  // namespace

std::vector<ArchitectureSpec> RunConfig::arch_set() const {
  return architectures.empty() ? builtin_arch_set() : architectures;
}

void set_config_value(PipelineConfig& c, std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "batch_size") c.batch_size = to_unsigned(key, value);
  else if (key == "alpha") c.alpha = to_double(key, value);
  else if (key == "beta") c.beta = to_double(key, value);
  else if (key == "gamma") c.gamma = to_double(key, value);
  else if (key == "theta_drift") c.theta_drift = to_double(key, value);
  else if (key == "resolution") c.resolution = to_double(key, value);
  else if (key == "capacity") c.capacity = to_unsigned(key, value);
  else if (key == "damping") c.damping = to_double(key, value);
  else if (key == "seed") c.seed = to_unsigned(key, value);
  else if (key == "mode") c = ablation_mode(c, parse_mode(value));
  else if (key == "shuffle_louvain") c.shuffle_louvain = to_bool(key, value);
  else if (key == "threshold_policy") c.threshold_policy = parse_policy(value);
  else if (key == "threshold_k") c.threshold_params.k = to_double(key, value);
  else if (key == "threshold_window") c.threshold_params.window = to_unsigned(key, value);
  else if (key == "threshold_q") c.threshold_params.q = to_double(key, value);
  else throw Error("config: unknown key '" + std::string(key) + "'");
}

RunConfig parse_config(std::string_view text) {
  RunConfig rc;
  std::string section = "pipeline";
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      if (line.front() == '[') {
        if (line.back() != ']') throw Error("malformed section header");
        section = std::string(trim(line.substr(1, line.size() - 2)));
        if (section != "pipeline" && section != "threshold" && section != "architectures")
          throw Error("unknown section [" + section + "]");
        continue;
      }
      if (section == "architectures") {
        rc.architectures.push_back(parse_spec(line));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw Error("expected key = value");
      const auto key = std::string(trim(line.substr(0, eq)));
      const auto value = trim(line.substr(eq + 1));
      set_config_value(rc.pipeline, section == "threshold" ? "threshold_" + key : key, value);
    } catch (const Error& e) {
      throw Error("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  rc.pipeline.validate();
  return rc;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const RunConfig& rc) {
  const auto& c = rc.pipeline;
  std::ostringstream out;
  out.precision(17);
  out << "[pipeline]\n"
      << "batch_size = " << c.batch_size << '\n'
      << "alpha = " << c.alpha << '\n'
      << "beta = " << c.beta << '\n'
      << "gamma = " << c.gamma << '\n'
      << "theta_drift = " << c.theta_drift << '\n'
      << "resolution = " << c.resolution << '\n'
      << "capacity = " << c.capacity << '\n'
      << "damping = " << c.damping << '\n'
      << "seed = " << c.seed << '\n'
      << "mode = " << mode_name(c.mode) << '\n'
      << "shuffle_louvain = " << (c.shuffle_louvain ? "true" : "false") << '\n'
      << "\n[threshold]\n"
      << "policy = " << policy_name(c.threshold_policy) << '\n'
      << "k = " << c.threshold_params.k << '\n'
      << "window = " << c.threshold_params.window << '\n'
      << "q = " << c.threshold_params.q << '\n';
  if (!rc.architectures.empty()) {
    out << "\n[architectures]\n";
    for (const auto& s : rc.architectures) out << format_spec(s) << '\n';
  }
  return out.str();
}

}  // namespace poolgraph

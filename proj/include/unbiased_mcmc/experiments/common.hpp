#pragma once

// Shared plumbing for the experiment drivers: strict JSON config reading,
// in-memory output sets written atomically, run manifests, and the
// batch-means estimate of the MCMC asymptotic variance.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "unbiased_mcmc/error.hpp"
#include "unbiased_mcmc/io.hpp"
#include "unbiased_mcmc/version.hpp"

namespace umcmc::experiments {

using json = nlohmann::json;
namespace fs = std::filesystem;

/// Options shared by every subcommand; CLI flags override config values.
struct RunOptions {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::optional<long long> replicates;
  std::optional<std::string> kernel;
  /// Relative data paths in a config are resolved against this directory.
  fs::path base_dir = UMCMC_CONFIG_DIR;
};

/// One JSON object of a config. Every getter records the value it returns
/// (including defaults) so the manifest holds the fully resolved config;
/// finish() rejects keys that no getter asked for.
class ConfigObject {
 public:
  ConfigObject(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail("expected a JSON object");
    resolved_ = json::object();
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  double real(const std::string& key, std::optional<double> def = {}) {
    const auto v = fetch<double>(key, def, [&](const json& x) {
      if (!x.is_number()) fail(key + ": expected a number");
      return x.get<double>();
    });
    if (!std::isfinite(v)) fail(key + ": must be finite");
    return v;
  }

  long long integer(const std::string& key, std::optional<long long> def = {}) {
    return fetch<long long>(key, def, [&](const json& x) { return as_integer(x, key); });
  }

  bool boolean(const std::string& key, std::optional<bool> def = {}) {
    return fetch<bool>(key, def, [&](const json& x) {
      if (!x.is_boolean()) fail(key + ": expected true or false");
      return x.get<bool>();
    });
  }

  std::string string(const std::string& key, std::optional<std::string> def = {}) {
    return fetch<std::string>(key, def, [&](const json& x) {
      if (!x.is_string()) fail(key + ": expected a string");
      return x.get<std::string>();
    });
  }

  std::vector<double> reals(const std::string& key, std::optional<std::vector<double>> def = {}) {
    return fetch<std::vector<double>>(key, def, [&](const json& x) {
      if (!x.is_array()) fail(key + ": expected an array of numbers");
      std::vector<double> out;
      for (const auto& e : x) {
        if (!e.is_number()) fail(key + ": expected an array of numbers");
        out.push_back(e.get<double>());
      }
      return out;
    });
  }

  std::vector<long long> integers(const std::string& key, std::optional<std::vector<long long>> def = {}) {
    return fetch<std::vector<long long>>(key, def, [&](const json& x) {
      if (!x.is_array()) fail(key + ": expected an array of integers");
      std::vector<long long> out;
      for (const auto& e : x) out.push_back(as_integer(e, key));
      return out;
    });
  }

  /// Replicate count: the --replicates flag wins over the config value.
  long long replicates(const std::string& key, long long def, const RunOptions& opt) {
    long long v = integer(key, def);
    if (opt.replicates) {
      v = *opt.replicates;
      resolved_[key] = v;
    }
    return v;
  }

  /// Parses a nested object (an empty one if absent) with `parse(ConfigObject&)`.
  template <class F>
  auto nested(const std::string& key, F&& parse) {
    used_.insert(key);
    const json empty = json::object();
    ConfigObject child(has(key) ? j_.at(key) : empty, where_ + "." + key);
    auto out = parse(child);
    child.finish();
    resolved_[key] = child.resolved();
    return out;
  }

  /// Parses an array of objects; `def` is used when the key is absent.
  template <class F>
  auto nested_list(const std::string& key, const json& def, F&& parse) {
    used_.insert(key);
    const json& arr = has(key) ? j_.at(key) : def;
    if (!arr.is_array() || arr.empty()) fail(key + ": expected a non-empty array of objects");
    using T = std::decay_t<decltype(parse(std::declval<ConfigObject&>()))>;
    std::vector<T> out;
    json resolved = json::array();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      ConfigObject child(arr[i], where_ + "." + key + "[" + std::to_string(i) + "]");
      out.push_back(parse(child));
      child.finish();
      resolved.push_back(child.resolved());
    }
    resolved_[key] = std::move(resolved);
    return out;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) fail("unknown key '" + key + "'");
    }
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(where_ + ": " + msg); }

  void require(bool ok, const std::string& msg) const {
    if (!ok) fail(msg);
  }

  const json& resolved() const noexcept { return resolved_; }

 private:
  template <class T, class Conv>
  T fetch(const std::string& key, const std::optional<T>& def, Conv&& conv) {
    used_.insert(key);
    T v;
    if (has(key)) {
      v = conv(j_.at(key));
    } else if (def) {
      v = *def;
    } else {
      fail("missing required key '" + key + "'");
    }
    resolved_[key] = v;
    return v;
  }

  long long as_integer(const json& x, const std::string& key) const {
    if (x.is_number_integer()) return x.get<long long>();
    if (x.is_number_float()) {
      const double d = x.get<double>();
      if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9.0e15) return static_cast<long long>(d);
    }
    fail(key + ": expected an integer");
  }

  const json& j_;
  std::string where_;
  std::set<std::string> used_;
  json resolved_;
};

inline json load_config_file(const fs::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const IngestionError&) {
    throw ConfigError("cannot read config file " + path.string());
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
}

inline fs::path resolve_data_path(const RunOptions& opt, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : opt.base_dir / path;
}

inline std::string default_data_file(const std::string& name) { return std::string(UMCMC_DATA_DIR) + "/" + name; }

/// Everything a subcommand produces, held in memory until the run succeeds.
struct OutputSet {
  std::vector<std::pair<std::string, std::string>> files;
  std::map<std::string, std::string> data_checksums;
  json summary = json::object();
  json resolved_config = json::object();

  void add(std::string name, std::string contents) { files.emplace_back(std::move(name), std::move(contents)); }
};

inline std::string config_hash(const json& resolved) { return io::checksum_hex(resolved.dump()); }

inline json make_manifest(const std::string& subcommand, const RunOptions& opt, const OutputSet& out) {
  json m;
  m["tool"] = "coupled-mcmc";
  m["version"] = kVersion;
  m["subcommand"] = subcommand;
  m["seed"] = opt.seed;
  m["threads"] = opt.threads;
  m["config"] = out.resolved_config;
  m["config_dir"] = opt.base_dir.string();
  m["config_hash"] = config_hash(out.resolved_config);
  m["data_checksums"] = out.data_checksums;
  m["checksum_algorithm"] = "fnv1a64";
  m["compiler"] = kCompiler;
  m["eigen"] = kEigenVersion;
  json files = json::array();
  for (const auto& f : out.files) files.push_back(f.first);
  m["outputs"] = files;
  m["summary"] = out.summary;
  return m;
}

/// Writes each file to a temporary name in `dir` and renames it into place.
inline void write_outputs(const fs::path& dir, const OutputSet& out, const json& manifest) {
  fs::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& contents) {
    const fs::path final_path = dir / name;
    const fs::path tmp = dir / (name + ".partial");
    {
      std::ofstream f(tmp, std::ios::binary);
      if (!f) throw IngestionError("cannot write " + tmp.string());
      f << contents;
      if (!f) throw IngestionError("write failed for " + tmp.string());
    }
    fs::rename(tmp, final_path);
  };
  for (const auto& [name, contents] : out.files) put(name, contents);
  put("manifest.json", manifest.dump(2) + "\n");
}

struct BatchMeans {
  double mean = 0.0;
  double asymptotic_variance = 0.0;
  std::size_t batches = 0;
  std::size_t batch_size = 0;
};

/// Non-overlapping batch means with floor(sqrt(n)) batches.
inline BatchMeans batch_means(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 4) throw ContractError("batch means needs at least 4 values");
  BatchMeans out;
  out.batches = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
  out.batch_size = n / out.batches;
  const std::size_t used = out.batches * out.batch_size;
  std::vector<double> means(out.batches, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < used; ++i) {
    means[i / out.batch_size] += values[i];
    total += values[i];
  }
  out.mean = total / static_cast<double>(used);
  double ss = 0.0;
  for (auto& b : means) {
    b /= static_cast<double>(out.batch_size);
    ss += (b - out.mean) * (b - out.mean);
  }
  out.asymptotic_variance = static_cast<double>(out.batch_size) * ss / static_cast<double>(out.batches - 1);
  return out;
}

inline std::vector<double> linspace_breaks(double lo, double hi, std::size_t bins) {
  if (!(hi > lo) || bins < 1) throw ConfigError("histogram range must satisfy lo < hi with at least one bin");
  std::vector<double> b(bins + 1);
  for (std::size_t j = 0; j <= bins; ++j) b[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(bins);
  return b;
}

}  // namespace umcmc::experiments

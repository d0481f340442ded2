#pragma once

// Data ingestion and CSV output. CSVs are UTF-8 with a header row, comma
// separated, '.' decimal separator; doubles are written in shortest
// round-trip form.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "unbiased_mcmc/error.hpp"
#include "unbiased_mcmc/kernels/pump.hpp"
#include "unbiased_mcmc/models/cut.hpp"
#include "unbiased_mcmc/rng.hpp"

namespace umcmc::io {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// FNV-1a 64-bit checksum of the file bytes, as 16 hex digits.
inline std::string checksum_hex(std::string_view bytes) {
  const std::uint64_t h = umcmc::detail::fnv1a64(bytes);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 0; i < 16; ++i) out[15 - i] = kHex[(h >> (4 * i)) & 0xF];
  return out;
}

inline std::string file_checksum(const std::filesystem::path& path) { return checksum_hex(read_file(path)); }

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row
};

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    std::string_view cell = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
    out.emplace_back(cell);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& expected_header) {
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  CsvTable table;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto cells = split_csv_line(line);
    if (!have_header) {
      if (cells != expected_header) {
        std::string want;
        for (const auto& h : expected_header) want += (want.empty() ? "" : ",") + h;
        throw IngestionError(path.string() + ": expected header '" + want + "'");
      }
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != expected_header.size()) {
      throw IngestionError(path.string() + ": row " + std::to_string(table.rows.size() + 1) + " (line " +
                           std::to_string(lineno) + ") has " + std::to_string(cells.size()) + " fields, expected " +
                           std::to_string(expected_header.size()));
    }
    table.rows.push_back(std::move(cells));
    table.line_numbers.push_back(lineno);
  }
  if (!have_header) throw IngestionError(path.string() + ": empty file");
  return table;
}

namespace detail {

inline std::string where(const std::filesystem::path& path, const CsvTable& t, std::size_t row) {
  return path.string() + ": row " + std::to_string(row + 1) + " (line " + std::to_string(t.line_numbers[row]) + ")";
}

inline double parse_double(const std::string& cell, const std::string& ctx) {
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size() || !std::isfinite(v))
    throw IngestionError(ctx + ": '" + cell + "' is not a finite number");
  return v;
}

inline long long parse_int(const std::string& cell, const std::string& ctx) {
  long long v = 0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
    throw IngestionError(ctx + ": '" + cell + "' is not an integer");
  return v;
}

}  // namespace detail

/// Columns t,s; exactly 10 rows; t > 0, s >= 0.
inline PumpData load_pump_data(const std::filesystem::path& path) {
  const auto t = read_csv(path, {"t", "s"});
  if (t.rows.size() != PumpData::kPumps)
    throw IngestionError(path.string() + ": expected exactly 10 data rows, found " + std::to_string(t.rows.size()));
  PumpData d;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto ctx = detail::where(path, t, r);
    d.t[r] = detail::parse_double(t.rows[r][0], ctx);
    const auto s = detail::parse_int(t.rows[r][1], ctx);
    if (!(d.t[r] > 0.0)) throw IngestionError(ctx + ": operating time must be positive");
    if (s < 0) throw IngestionError(ctx + ": failure count must be nonnegative");
    d.s[r] = static_cast<int>(s);
  }
  return d;
}

inline std::vector<models::HpvRow> load_hpv_data(const std::filesystem::path& path) {
  const auto t = read_csv(path, {"ncases", "npop"});
  std::vector<models::HpvRow> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto ctx = detail::where(path, t, r);
    const auto c = detail::parse_int(t.rows[r][0], ctx);
    const auto n = detail::parse_int(t.rows[r][1], ctx);
    if (c < 0 || n < c) throw IngestionError(ctx + ": need 0 <= ncases <= npop");
    out.push_back({static_cast<int>(c), static_cast<int>(n)});
  }
  return out;
}

/// Columns ncases,log_pyears; with raw_pyears the second column is pyears and
/// log(pyears / 1000) is applied.
inline std::vector<models::CancerRow> load_cancer_data(const std::filesystem::path& path, bool raw_pyears = false) {
  const auto t = read_csv(path, {"ncases", raw_pyears ? "pyears" : "log_pyears"});
  std::vector<models::CancerRow> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto ctx = detail::where(path, t, r);
    const auto c = detail::parse_int(t.rows[r][0], ctx);
    double v = detail::parse_double(t.rows[r][1], ctx);
    if (c < 0) throw IngestionError(ctx + ": ncases must be nonnegative");
    if (raw_pyears) {
      if (!(v > 0.0)) throw IngestionError(ctx + ": pyears must be positive");
      v = std::log(1e-3 * v);
    }
    out.push_back({static_cast<int>(c), v});
  }
  return out;
}

/// Accumulates a CSV in memory; written in one go by the caller.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) { row(header); }

  template <class... Cells>
  CsvWriter& add(const Cells&... cells) {
    std::vector<std::string> r;
    (r.push_back(cell(cells)), ...);
    return row(r);
  }

  CsvWriter& row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw ContractError("CSV row has the wrong number of cells");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
    return *this;
  }

  std::string str() const { return out_.str(); }

  static std::string cell(double v) { return format_double(v); }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }
  template <class I>
    requires std::is_integral_v<I>
  static std::string cell(I v) {
    return std::to_string(v);
  }

 private:
  std::size_t columns_;
  std::ostringstream out_;
};

}  // namespace umcmc::io

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "jadl/signal.hpp"

namespace jadl {

// --- text helpers -----------------------------------------------------------

// Shortest-round-trip decimal text for a double (17 significant digits).
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& field, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end == field.c_str() || *end != '\0')
    throw DataError(where + ": cannot parse number '" + field + "'");
  return v;
}

// FNV-1a 64-bit content checksum, hex encoded.
inline std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// --- files ------------------------------------------------------------------

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Atomic write: temp file in the same directory, then rename.
inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DataError("cannot rename " + tmp.string() + ": " + ec.message());
}

// --- matrix CSV ---------------------------------------------------------------
// Row-major CSV with a single comment header carrying the dimensions and the
// sample rate, e.g. "# rows=200 cols=512 sample_rate=128".

struct MatrixCsv {
  Eigen::MatrixXd values;
  double sample_rate = 0.0;
};

inline std::string matrix_csv_string(const Eigen::Ref<const Eigen::MatrixXd>& m,
                                     double sample_rate) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * 20 + 64);
  out += "# rows=" + std::to_string(m.rows()) +
         " cols=" + std::to_string(m.cols()) +
         " sample_rate=" + format_double(sample_rate) + "\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_double(m(r, c));
    }
    out += '\n';
  }
  return out;
}

inline void write_matrix_csv(const std::filesystem::path& path,
                             const Eigen::Ref<const Eigen::MatrixXd>& m,
                             double sample_rate) {
  write_file_atomic(path, matrix_csv_string(m, sample_rate));
}

inline MatrixCsv read_matrix_csv(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  MatrixCsv out;
  std::vector<std::vector<double>> rows;
  std::size_t cols = 0;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string tok;
      while (hs >> tok) {
        const auto eq = tok.find('=');
        if (eq != std::string::npos && tok.substr(0, eq) == "sample_rate")
          out.sample_rate = parse_double(tok.substr(eq + 1),
                                         path.string() + ":" + std::to_string(lineno));
      }
      continue;
    }
    std::vector<double> row;
    std::size_t start = 0;
    int field = 0;
    while (start <= line.size()) {
      auto comma = line.find(',', start);
      if (comma == std::string::npos) comma = line.size();
      ++field;
      row.push_back(parse_double(line.substr(start, comma - start),
                                 path.string() + ":" + std::to_string(lineno) +
                                     " field " + std::to_string(field)));
      start = comma + 1;
    }
    if (cols == 0) cols = row.size();
    if (row.size() != cols)
      throw DataError(path.string() + ":" + std::to_string(lineno) +
                      ": ragged row (" + std::to_string(row.size()) + " vs " +
                      std::to_string(cols) + " fields)");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path.string() + ": no data rows");
  out.values.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols; ++c)
      out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          rows[r][c];
  return out;
}

inline std::vector<Signal> signals_from_matrix(const MatrixCsv& m) {
  std::vector<Signal> out(static_cast<std::size_t>(m.values.rows()));
  for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
    out[static_cast<std::size_t>(r)].samples = m.values.row(r).transpose();
    out[static_cast<std::size_t>(r)].sample_rate = m.sample_rate;
  }
  return out;
}

inline Eigen::MatrixXd signals_to_matrix(const std::vector<Signal>& signals) {
  if (signals.empty()) throw DataError("no signals");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(signals.size()),
                    signals.front().samples.size());
  for (std::size_t j = 0; j < signals.size(); ++j) {
    if (signals[j].samples.size() != m.cols())
      throw DataError("signals have inconsistent lengths");
    m.row(static_cast<Eigen::Index>(j)) = signals[j].samples.transpose();
  }
  return m;
}

// --- codes CSV ----------------------------------------------------------------
// One line per signal; entries are "atom,shift,coeff" triples joined by ';'.
// An empty line is an empty code.

inline std::string codes_csv_string(const std::vector<SparseCode>& codes,
                                    double sample_rate) {
  std::string out = "# codes signals=" + std::to_string(codes.size()) +
                    " sample_rate=" + format_double(sample_rate) + "\n";
  for (const auto& code : codes) {
    bool first = true;
    for (const auto& e : code.entries) {
      if (!first) out += ';';
      first = false;
      out += std::to_string(e.atom) + ',' + std::to_string(e.shift) + ',' +
             format_double(e.coeff);
    }
    out += '\n';
  }
  return out;
}

inline void write_codes_csv(const std::filesystem::path& path,
                            const std::vector<SparseCode>& codes,
                            double sample_rate) {
  write_file_atomic(path, codes_csv_string(codes, sample_rate));
}

inline std::vector<SparseCode> read_codes_csv(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  std::vector<SparseCode> codes;
  long expected = -1;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string tok;
      while (hs >> tok) {
        const auto eq = tok.find('=');
        if (eq != std::string::npos && tok.substr(0, eq) == "signals")
          expected = std::strtol(tok.substr(eq + 1).c_str(), nullptr, 10);
      }
      continue;
    }
    SparseCode code;
    if (!line.empty()) {
      std::size_t start = 0;
      while (start <= line.size()) {
        auto semi = line.find(';', start);
        if (semi == std::string::npos) semi = line.size();
        const std::string triple = line.substr(start, semi - start);
        const auto c1 = triple.find(',');
        const auto c2 = triple.find(',', c1 == std::string::npos ? 0 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
          throw DataError(path.string() + ":" + std::to_string(lineno) +
                          ": malformed code triple '" + triple + "'");
        const std::string where = path.string() + ":" + std::to_string(lineno);
        CodeEntry e;
        e.atom = static_cast<int>(parse_double(triple.substr(0, c1), where));
        e.shift = static_cast<int>(parse_double(triple.substr(c1 + 1, c2 - c1 - 1), where));
        e.coeff = parse_double(triple.substr(c2 + 1), where);
        code.entries.push_back(e);
        start = semi + 1;
      }
    }
    codes.push_back(std::move(code));
  }
  if (expected >= 0 && static_cast<long>(codes.size()) != expected)
    throw DataError(path.string() + ": expected " + std::to_string(expected) +
                    " code lines, found " + std::to_string(codes.size()));
  return codes;
}

}  // namespace jadl

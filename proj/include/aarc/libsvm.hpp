#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <zlib.h>

#include "aarc/objective.hpp"

namespace aarc {

struct LibsvmRecord {
  double label = 0.0;
  std::vector<std::pair<int, double>> entries;  // 1-based, strictly increasing indices
};

namespace detail {

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

inline double parse_real(std::string_view tok, std::size_t line, std::size_t col, const char *what) {
  double v = 0.0;
  const char *first = tok.data();
  if (!tok.empty() && tok.front() == '+')
    ++first;
  auto [ptr, ec] = std::from_chars(first, tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || first == tok.data() + tok.size())
    throw ParseError(std::string("malformed ") + what + " '" + std::string(tok) + "'", line, col);
  return v;
}

} // namespace detail

inline std::vector<LibsvmRecord> parse_libsvm_records(std::string_view text) {
  std::vector<LibsvmRecord> records;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos)
      end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);

    LibsvmRecord rec;
    bool have_label = false;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && detail::is_space(line[i]))
        ++i;
      if (i >= line.size())
        break;
      const std::size_t start = i;
      while (i < line.size() && !detail::is_space(line[i]))
        ++i;
      std::string_view tok = line.substr(start, i - start);
      const std::size_t col = start + 1;
      if (!have_label) {
        rec.label = detail::parse_real(tok, line_no, col, "label");
        have_label = true;
        continue;
      }
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos)
        throw ParseError("expected index:value, got '" + std::string(tok) + "'", line_no, col);
      std::string_view idx_tok = tok.substr(0, colon);
      int idx = 0;
      auto [ptr, ec] = std::from_chars(idx_tok.data(), idx_tok.data() + idx_tok.size(), idx);
      if (ec != std::errc() || ptr != idx_tok.data() + idx_tok.size() || idx < 1)
        throw ParseError("malformed feature index '" + std::string(idx_tok) + "'", line_no, col);
      if (!rec.entries.empty() && idx <= rec.entries.back().first)
        throw ParseError("feature indices must be strictly increasing", line_no, col);
      const double v = detail::parse_real(tok.substr(colon + 1), line_no, col + colon + 1, "feature value");
      rec.entries.emplace_back(idx, v);
    }
    if (have_label)
      records.push_back(std::move(rec));
    if (end == text.size())
      break;
  }
  return records;
}

inline Dataset to_dataset(const std::vector<LibsvmRecord> &records) {
  if (records.empty())
    throw Error("libsvm: no records");
  std::set<double> distinct;
  int d = 0;
  for (const auto &r : records) {
    distinct.insert(r.label);
    if (!r.entries.empty())
      d = std::max(d, r.entries.back().first);
  }
  if (distinct.size() > 2)
    throw Error("libsvm: more than two distinct labels (" + std::to_string(distinct.size()) + ")");
  if (d == 0)
    throw Error("libsvm: no features");

  Dataset ds;
  ds.samples = Matrix::Zero(Eigen::Index(records.size()), d);
  ds.labels.resize(Eigen::Index(records.size()));
  const double low = *distinct.begin();
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto &r = records[k];
    if (distinct.size() == 2)
      ds.labels[Eigen::Index(k)] = r.label == low ? -1.0 : 1.0;
    else
      ds.labels[Eigen::Index(k)] = r.label > 0.0 ? 1.0 : -1.0;
    for (const auto &[idx, v] : r.entries)
      ds.samples(Eigen::Index(k), idx - 1) = v;
  }
  return ds;
}

/// Inflates gzip data (magic bytes 0x1f 0x8b); other input is returned untouched.
inline std::string maybe_gunzip(std::string bytes) {
  if (bytes.size() < 2 || static_cast<unsigned char>(bytes[0]) != 0x1f ||
      static_cast<unsigned char>(bytes[1]) != 0x8b)
    return bytes;
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK)
    throw Error("gzip: inflateInit2 failed");
  zs.next_in = reinterpret_cast<Bytef *>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());
  std::string out;
  char buf[1 << 15];
  int rc = Z_OK;
  do {
    zs.next_out = reinterpret_cast<Bytef *>(buf);
    zs.avail_out = sizeof(buf);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw Error("gzip: corrupt stream");
    }
    out.append(buf, sizeof(buf) - zs.avail_out);
    // concatenated members
    if (rc == Z_STREAM_END && zs.avail_in > 0) {
      if (inflateReset(&zs) != Z_OK) {
        inflateEnd(&zs);
        throw Error("gzip: inflateReset failed");
      }
      rc = Z_OK;
    }
  } while (rc != Z_STREAM_END && (zs.avail_in > 0 || zs.avail_out == 0));
  inflateEnd(&zs);
  if (rc != Z_STREAM_END)
    throw Error("gzip: truncated stream");
  return out;
}

inline Dataset parse_libsvm(std::string_view text) {
  if (text.size() >= 2 && static_cast<unsigned char>(text[0]) == 0x1f &&
      static_cast<unsigned char>(text[1]) == 0x8b)
    return to_dataset(parse_libsvm_records(maybe_gunzip(std::string(text))));
  return to_dataset(parse_libsvm_records(text));
}

inline Dataset parse_libsvm(std::istream &in) {
  std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_libsvm(std::string_view(bytes));
}

inline Dataset read_libsvm_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot open " + path);
  try {
    return parse_libsvm(in);
  } catch (const ParseError &e) {
    throw ParseError(e.detail, e.line, e.column, path);
  } catch (const Error &e) {
    throw Error(path + ": " + e.what());
  }
}

/// Writes the dense dataset back in sparse LIBSVM form; the last feature is always
/// written on the first row so that d survives a round trip.
inline std::string serialize_libsvm(const Dataset &ds) {
  std::string out;
  char buf[64];
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    out += ds.labels[i] > 0 ? "+1" : "-1";
    for (Eigen::Index j = 0; j < ds.d(); ++j) {
      const double v = ds.samples(i, j);
      if (v == 0.0 && !(i == 0 && j == ds.d() - 1))
        continue;
      std::snprintf(buf, sizeof(buf), " %lld:%.17g", static_cast<long long>(j + 1), v);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

enum class NormalizeMode { none, scale_to_unit_range, standardize };

inline const char *to_string(NormalizeMode m) {
  switch (m) {
  case NormalizeMode::none: return "none";
  case NormalizeMode::scale_to_unit_range: return "scale_to_unit_range";
  case NormalizeMode::standardize: return "standardize";
  }
  return "?";
}

inline Dataset normalize(Dataset ds, NormalizeMode mode) {
  if (ds.n() == 0)
    throw Error("normalize: empty dataset");
  for (Eigen::Index j = 0; j < ds.d() && mode != NormalizeMode::none; ++j) {
    auto col = ds.samples.col(j);
    if (mode == NormalizeMode::scale_to_unit_range) {
      const double lo = col.minCoeff(), hi = col.maxCoeff();
      if (hi > lo)
        col = ((col.array() - lo) / (hi - lo)).matrix();
    } else {
      const double mean = col.mean();
      const double var = (col.array() - mean).square().mean();
      if (var > 0.0)
        col = ((col.array() - mean) / std::sqrt(var)).matrix();
    }
  }
  return ds;
}

} // namespace aarc

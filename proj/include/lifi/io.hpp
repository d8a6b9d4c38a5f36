#pragma once

// Small text/binary helpers shared by the dataset and model file formats:
// a "key: value" metadata file and flat little-endian float64 payloads.

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lifi/error.hpp"

namespace lifi::io {

inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);  // shortest round-trip form
  return std::string(buf, res.ptr);
}

inline std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += format_double(v[i]);
  }
  return out;
}

inline double parse_double(const std::string& s, const std::string& what) {
  double v = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\t' || last[-1] == '\r')) --last;
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw ParseError(what + ": cannot parse '" + s + "' as a number");
  return v;
}

/// Ordered key/value metadata with 1-based source line numbers for diagnostics.
class KeyValueFile {
 public:
  void set(const std::string& key, const std::string& value) {
    if (!values_.count(key)) order_.push_back(key);
    values_[key] = value;
  }
  void set(const std::string& key, double v) { set(key, format_double(v)); }
  void set(const std::string& key, const std::vector<double>& v) { set(key, join(v)); }
  void set_int(const std::string& key, long long v) { set(key, std::to_string(v)); }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  const std::string& get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ParseError(source_ + ": missing key '" + key + "'");
    return it->second;
  }

  double get_double(const std::string& key) const { return parse_double(get(key), where(key)); }

  long long get_int(const std::string& key) const {
    const std::string& s = get(key);
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw ParseError(where(key) + ": expected an integer, got '" + s + "'");
    return v;
  }

  std::vector<double> get_vector(const std::string& key) const {
    std::vector<double> out;
    std::istringstream in(get(key));
    std::string tok;
    while (in >> tok) out.push_back(parse_double(tok, where(key)));
    return out;
  }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    for (const auto& k : order_) out << k << ": " << values_.at(k) << '\n';
    if (!out) throw Error("failed writing '" + path + "'");
  }

  static KeyValueFile read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    KeyValueFile kv;
    kv.source_ = path;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      const auto colon = line.find(':');
      if (colon == std::string::npos || colon == 0)
        throw ParseError(path + ":" + std::to_string(lineno) + ": expected 'key: value'");
      std::string key = line.substr(0, colon);
      std::string value = line.substr(colon + 1);
      if (!value.empty() && value[0] == ' ') value.erase(0, 1);
      kv.set(key, value);
      kv.lines_[key] = lineno;
    }
    return kv;
  }

 private:
  std::string where(const std::string& key) const {
    auto it = lines_.find(key);
    return source_ + (it != lines_.end() ? ":" + std::to_string(it->second) : "") + " (" + key +
           ")";
  }

  std::map<std::string, std::string> values_;
  std::map<std::string, int> lines_;
  std::vector<std::string> order_;
  std::string source_ = "<memory>";
};

inline std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffULL) << (8 * (7 - i));
    return r;
  } else {
    return v;
  }
}

inline void write_f64(std::ostream& out, const double* data, std::size_t n) {
  std::vector<std::uint64_t> buf(n);
  for (std::size_t i = 0; i < n; ++i)
    buf[i] = to_little_endian(std::bit_cast<std::uint64_t>(data[i]));
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(n * sizeof(std::uint64_t)));
}

/// Reads exactly n float64 values. Returns the number actually read.
inline std::size_t read_f64(std::istream& in, double* data, std::size_t n) {
  std::vector<std::uint64_t> buf(n);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(n * sizeof(std::uint64_t)));
  const std::size_t got = static_cast<std::size_t>(in.gcount()) / sizeof(std::uint64_t);
  for (std::size_t i = 0; i < got; ++i)
    data[i] = std::bit_cast<double>(to_little_endian(buf[i]));
  return got;
}

/// 64-bit FNV-1a; used for configuration fingerprints.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace lifi::io

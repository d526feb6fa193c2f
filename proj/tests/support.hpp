// Helpers shared by the unit tests and the acceptance binary.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "iecache/gateway.hpp"

namespace testing_support {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(IECACHE_FIXTURE_DIR) / name;
}

inline std::filesystem::path data_file(const std::string& name) {
  return std::filesystem::path(IECACHE_DATA_DIR) / name;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void spit(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
}

inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  auto dir = std::filesystem::temp_directory_path() / ("iecache-" + tag + "-" + std::to_string(rng() % 1000000007));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

struct Scripted {
  std::shared_ptr<iecache::ScriptedBackend> backend;
  std::unique_ptr<iecache::Gateway> gateway;
};

inline Scripted scripted(std::vector<std::string> replies) {
  Scripted s;
  s.backend = iecache::ScriptedBackend::from_contents(std::move(replies));
  s.gateway = std::make_unique<iecache::Gateway>(s.backend);
  return s;
}

// Queue fixture text from a list of replies.
inline std::string queue_fixture(const std::vector<std::string>& replies) {
  std::string out = "{\"mode\":\"queue\"}\n";
  for (const auto& r : replies) {
    std::string esc;
    for (char c : r) {
      if (c == '"' || c == '\\') {
        esc += '\\';
        esc += c;
      } else if (c == '\n') {
        esc += "\\n";
      } else {
        esc += c;
      }
    }
    out += "{\"content\":\"" + esc + "\"}\n";
  }
  return out;
}

// ---- brute-force oracles -------------------------------------------------

struct Prf {
  double p = 0, r = 0, f = 0;
};

inline Prf prf(double overlap, double np, double nr) {
  if (np == 0 && nr == 0) return {1, 1, 1};
  if (np == 0 || nr == 0) return {};
  Prf s{overlap / np, overlap / nr, 0};
  s.f = s.p + s.r > 0 ? 2 * s.p * s.r / (s.p + s.r) : 0;
  return s;
}

// Clipped overlap by greedy one-to-one matching of n-gram positions.
inline Prf oracle_rouge_n(const std::vector<std::string>& pred, const std::vector<std::string>& ref, std::size_t n) {
  auto grams = [n](const std::vector<std::string>& t) {
    std::vector<std::string> g;
    for (std::size_t i = 0; i + n <= t.size(); ++i) {
      std::string s;
      for (std::size_t k = 0; k < n; ++k) s += t[i + k] + '\x01';
      g.push_back(s);
    }
    return g;
  };
  auto pg = grams(pred), rg = grams(ref);
  std::vector<bool> used(rg.size(), false);
  double overlap = 0;
  for (const auto& g : pg) {
    for (std::size_t j = 0; j < rg.size(); ++j) {
      if (!used[j] && rg[j] == g) {
        used[j] = true;
        ++overlap;
        break;
      }
    }
  }
  return prf(overlap, static_cast<double>(pg.size()), static_cast<double>(rg.size()));
}

// LCS by enumerating every subsequence of the shorter side (length <= 16).
inline std::size_t oracle_lcs(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const auto& s = a.size() <= b.size() ? a : b;
  const auto& t = a.size() <= b.size() ? b : a;
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << s.size()); ++mask) {
    std::size_t len = static_cast<std::size_t>(__builtin_popcount(mask));
    if (len <= best) continue;
    std::size_t j = 0;
    bool ok = true;
    for (std::size_t i = 0; i < s.size() && ok; ++i) {
      if (!(mask & (1u << i))) continue;
      while (j < t.size() && t[j] != s[i]) ++j;
      if (j == t.size()) ok = false;
      else ++j;
    }
    if (ok) best = len;
  }
  return best;
}

inline Prf oracle_rouge_l(const std::vector<std::string>& pred, const std::vector<std::string>& ref) {
  return prf(static_cast<double>(oracle_lcs(pred, ref)), static_cast<double>(pred.size()),
             static_cast<double>(ref.size()));
}

// Shortest round-trip decimal via printf's %.*e, expanded to plain notation.
inline std::string oracle_canonical_number(double v) {
  if (v == 0) return "0";
  for (int p = 0; p < 17; ++p) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*e", p, v);
    if (std::strtod(buf, nullptr) != v) continue;
    std::string s(buf);
    bool neg = s[0] == '-';
    if (neg) s = s.substr(1);
    auto e = s.find('e');
    int exp = std::atoi(s.c_str() + e + 1);
    std::string digits;
    for (char c : s.substr(0, e)) {
      if (c != '.') digits += c;
    }
    while (digits.size() > 1 && digits.back() == '0') digits.pop_back();
    int point = exp + 1;  // digits before the decimal point
    std::string out;
    if (point <= 0) {
      out = "0." + std::string(static_cast<std::size_t>(-point), '0') + digits;
    } else if (static_cast<std::size_t>(point) >= digits.size()) {
      out = digits + std::string(static_cast<std::size_t>(point) - digits.size(), '0');
    } else {
      out = digits.substr(0, static_cast<std::size_t>(point)) + "." + digits.substr(static_cast<std::size_t>(point));
    }
    return (neg ? "-" : "") + out;
  }
  return "?";
}

}  // namespace testing_support

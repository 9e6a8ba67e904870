#include "treelearn/data/example.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "treelearn/data/hashing.hpp"
#include "treelearn/errors.hpp"

namespace treelearn {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

void canonicalize(std::vector<Feature>& features) {
  std::stable_sort(features.begin(), features.end(),
                   [](const Feature& a, const Feature& b) { return a.index < b.index; });
  size_t out = 0;
  for (size_t i = 0; i < features.size(); ++i) {
    if (out > 0 && features[out - 1].index == features[i].index) {
      features[out - 1].value += features[i].value;
    } else {
      features[out++] = features[i];
    }
  }
  features.resize(out);
}

SparseExample parse_example(std::string_view line, int bits, size_t line_number) {
  check_hash_bits(bits);
  const size_t bar = line.find('|');
  if (bar == std::string_view::npos) throw ParseError("missing '|' separator", line_number);
  auto head = split_ws(line.substr(0, bar));
  if (head.empty() || head.size() > 2) {
    throw ParseError("expected 'label [importance]' before '|'", line_number);
  }
  SparseExample ex;
  if (!parse_double(head[0], ex.label)) {
    throw ParseError("malformed label '" + std::string(head[0]) + "'", line_number);
  }
  if (head.size() == 2) {
    if (!parse_double(head[1], ex.importance) || !(ex.importance > 0)) {
      throw ParseError("importance must be a positive number, got '" + std::string(head[1]) + "'",
                       line_number);
    }
  }
  const uint64_t limit = uint64_t{1} << bits;
  for (std::string_view tok : split_ws(line.substr(bar + 1))) {
    Feature f;
    std::string_view name = tok;
    if (auto colon = tok.rfind(':'); colon != std::string_view::npos) {
      name = tok.substr(0, colon);
      std::string_view value = tok.substr(colon + 1);
      if (!parse_double(value, f.value)) {
        throw ParseError("non-numeric feature value '" + std::string(value) + "'", line_number);
      }
    }
    if (name.empty()) throw ParseError("empty feature name", line_number);
    if (name.size() > 1 && name[0] == '#' &&
        std::all_of(name.begin() + 1, name.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      uint64_t idx = 0;
      auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), idx);
      if (ec != std::errc() || idx >= limit) {
        throw ParseError("literal index '" + std::string(name) + "' outside hash space", line_number);
      }
      f.index = static_cast<uint32_t>(idx);
    } else {
      f.index = hash_feature(name, bits);
    }
    ex.features.push_back(f);
  }
  canonicalize(ex.features);
  return ex;
}

std::string to_text(const SparseExample& example) {
  std::string s = format_double(example.label);
  if (example.importance != 1.0) s += " " + format_double(example.importance);
  s += " |";
  for (const auto& f : example.features) {
    s += " #" + std::to_string(f.index);
    if (f.value != 1.0) s += ":" + format_double(f.value);
  }
  return s;
}

}  // namespace treelearn

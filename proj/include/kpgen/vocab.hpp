// Vocabulary with fixed reserved ids and frequency-ranked construction.
#pragma once

#include <algorithm>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "kpgen/common.hpp"

namespace kpgen {

class Vocabulary {
 public:
  Vocabulary() {
    for (const char* t : {kPadToken, kUnkToken, kBosToken, kEosToken, kSegToken}) add(t);
    max_size_ = kNumReserved;
  }

  // Returns the id of tok, or UNK when absent.
  int id(const std::string& tok) const {
    auto it = token_to_id_.find(tok);
    return it == token_to_id_.end() ? kUnk : it->second;
  }

  bool contains(const std::string& tok) const { return token_to_id_.count(tok) > 0; }

  const std::string& token(int id) const {
    if (id < 0 || id >= static_cast<int>(id_to_token_.size())) fail("Vocabulary: id out of range");
    return id_to_token_[static_cast<size_t>(id)];
  }

  int size() const { return static_cast<int>(id_to_token_.size()); }
  int max_size() const { return max_size_; }
  void set_max_size(int m) { max_size_ = m; }

  // Appends tok with the next free id; duplicates are ignored.
  void add(const std::string& tok) {
    if (token_to_id_.count(tok)) return;
    token_to_id_.emplace(tok, static_cast<int>(id_to_token_.size()));
    id_to_token_.push_back(tok);
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("Vocabulary::save: cannot open " + path);
    for (const auto& t : id_to_token_) out << t << "\n";
  }

  static Vocabulary load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("Vocabulary::load: cannot open " + path);
    Vocabulary v;
    std::string line;
    int idx = 0;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (idx < kNumReserved) {
        if (line != v.id_to_token_[static_cast<size_t>(idx)])
          fail("Vocabulary::load: reserved entry mismatch at " + path);
      } else {
        if (line.empty()) fail("Vocabulary::load: empty token line in " + path);
        v.add(line);
      }
      ++idx;
    }
    if (idx < kNumReserved) fail("Vocabulary::load: file truncated: " + path);
    v.max_size_ = v.size();
    return v;
  }

  uint64_t content_hash() const {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& t : id_to_token_) {
      h = fnv1a(t, h);
      h = fnv1a("\n", h);
    }
    return h;
  }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
  int max_size_ = kNumReserved;
};

// Most-frequent tokens win; ties break lexicographically. Counts is any
// token -> frequency map; reserved tokens are always present.
inline Vocabulary build_vocabulary_from_counts(
    const std::unordered_map<std::string, long long>& counts, int max_size) {
  if (max_size <= kNumReserved) fail("build_vocabulary: max_size must exceed the reserved count");
  std::vector<std::pair<std::string, long long>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary v;
  v.set_max_size(max_size);
  for (const auto& [tok, cnt] : ranked) {
    (void)cnt;
    if (v.size() >= max_size) break;
    if (v.contains(tok)) continue;  // corpus token colliding with a reserved literal
    v.add(tok);
  }
  return v;
}

}  // namespace kpgen

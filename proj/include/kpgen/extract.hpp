// Unsupervised keyphrase extraction: TF-IDF, TextRank, and the hybrid union
// used to build synthetic labels for unlabeled documents.
#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kpgen/common.hpp"
#include "kpgen/data.hpp"
#include "kpgen/stopwords.hpp"

namespace kpgen {

struct ScoredPhrase {
  Phrase phrase;
  Real score;
};

// Ordered by (score desc, phrase lexicographic); phrases distinct.
using RankedPhrases = std::vector<ScoredPhrase>;

struct ExtractOptions {
  bool include_title = false;  // extraction runs on the abstract by default
  int max_ngram = 3;
};

inline std::vector<std::string> extraction_tokens(const Document& doc, const ExtractOptions& opts) {
  std::vector<std::string> toks;
  if (opts.include_title) toks = doc.title_tokens;
  toks.insert(toks.end(), doc.abstract_tokens.begin(), doc.abstract_tokens.end());
  return toks;
}

inline bool candidate_token(const std::string& tok) {
  return !is_stopword(tok) && tok != kDigitToken;
}

// Contiguous n-grams (1..max_ngram) free of stopwords and <digit>,
// deduplicated in first-occurrence order.
inline std::vector<Phrase> candidate_phrases(const Document& doc, const ExtractOptions& opts = {}) {
  const auto toks = extraction_tokens(doc, opts);
  std::vector<Phrase> out;
  std::set<Phrase> seen;
  const int n = static_cast<int>(toks.size());
  for (int len = 1; len <= opts.max_ngram; ++len) {
    for (int i = 0; i + len <= n; ++i) {
      bool ok = true;
      for (int j = i; j < i + len; ++j)
        if (!candidate_token(toks[static_cast<size_t>(j)])) { ok = false; break; }
      if (!ok) continue;
      Phrase p(toks.begin() + i, toks.begin() + i + len);
      if (seen.insert(p).second) out.push_back(std::move(p));
    }
  }
  return out;
}

// --- TF-IDF -----------------------------------------------------------------

struct IdfTable {
  std::unordered_map<std::string, Real> idf;
  long corpus_size = 0;

  // Unseen tokens are smoothed as df = 1.
  Real value(const std::string& tok) const {
    auto it = idf.find(tok);
    return it == idf.end() ? std::log(static_cast<Real>(corpus_size)) : it->second;
  }
};

// Document-granularity df over abstract tokens; idf = ln(M / df).
inline IdfTable build_idf(const Dataset& corpus) {
  if (corpus.empty()) fail("build_idf: empty corpus");
  IdfTable table;
  table.corpus_size = static_cast<long>(corpus.size());
  std::unordered_map<std::string, long> df;
  for (const auto& doc : corpus.docs) {
    std::unordered_set<std::string> distinct(doc.abstract_tokens.begin(), doc.abstract_tokens.end());
    for (const auto& tok : distinct) ++df[tok];
  }
  const Real m = static_cast<Real>(table.corpus_size);
  for (const auto& [tok, count] : df)
    table.idf.emplace(tok, std::log(m / static_cast<Real>(count)));
  return table;
}

namespace detail {

inline void sort_and_truncate(RankedPhrases& ranked, int k) {
  std::sort(ranked.begin(), ranked.end(), [](const ScoredPhrase& a, const ScoredPhrase& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.phrase < b.phrase;
  });
  if (static_cast<int>(ranked.size()) > k) ranked.resize(static_cast<size_t>(k));
}

}  // namespace detail

// Phrase score = mean over member tokens of tf(token) * idf(token), with tf
// normalized by document length. Returns the top k (all, when fewer exist).
inline RankedPhrases tfidf_rank(const Document& doc, const IdfTable& idf, int k,
                                const ExtractOptions& opts = {}) {
  if (k < 1) fail("tfidf_rank: k must be >= 1");
  const auto toks = extraction_tokens(doc, opts);
  if (toks.empty()) return {};
  std::unordered_map<std::string, long> tf;
  for (const auto& t : toks) ++tf[t];
  const Real len = static_cast<Real>(toks.size());

  RankedPhrases ranked;
  for (auto& phrase : candidate_phrases(doc, opts)) {
    Real sum = 0;
    for (const auto& t : phrase) sum += (static_cast<Real>(tf[t]) / len) * idf.value(t);
    ranked.push_back({std::move(phrase), sum / static_cast<Real>(phrase.size())});
  }
  detail::sort_and_truncate(ranked, k);
  return ranked;
}

// --- TextRank ----------------------------------------------------------------

struct TextRankConfig {
  int window = 4;
  Real damping = 0.85;
  Real tol = 1e-6;
  int max_iter = 200;
};

// score_i = (1 - d) + d * sum_{j in adj(i)} score_j / deg(j), iterated until
// the max-abs change drops below tol or max_iter is hit. adj holds neighbor
// lists of a simple undirected graph.
inline std::vector<Real> pagerank_scores(const std::vector<std::vector<int>>& adj, Real damping,
                                         Real tol, int max_iter) {
  const size_t n = adj.size();
  std::vector<Real> score(n, Real(1)), next(n);
  for (int iter = 0; iter < max_iter; ++iter) {
    Real delta = 0;
    for (size_t i = 0; i < n; ++i) {
      Real acc = 0;
      for (int j : adj[i]) acc += score[static_cast<size_t>(j)] / static_cast<Real>(adj[static_cast<size_t>(j)].size());
      next[i] = (Real(1) - damping) + damping * acc;
      delta = std::max(delta, std::abs(next[i] - score[i]));
    }
    score.swap(next);
    if (delta < tol) break;
  }
  return score;
}

// Undirected co-occurrence graph over candidate unigrams: tokens at positions
// i < j are linked when j - i < window. Phrase score = sum of member scores.
inline RankedPhrases textrank_rank(const Document& doc, int k, const TextRankConfig& cfg = {},
                                   const ExtractOptions& opts = {}) {
  if (k < 1) fail("textrank_rank: k must be >= 1");
  if (cfg.window < 2) fail("textrank_rank: window must be >= 2");
  if (cfg.damping <= 0 || cfg.damping >= 1) fail("textrank_rank: damping must lie in (0,1)");

  const auto toks = extraction_tokens(doc, opts);
  // node ids in first-occurrence order, for deterministic iteration
  std::unordered_map<std::string, int> node_of;
  std::vector<std::string> node_tok;
  for (const auto& t : toks) {
    if (!candidate_token(t)) continue;
    if (node_of.emplace(t, static_cast<int>(node_tok.size())).second) node_tok.push_back(t);
  }
  if (node_tok.empty()) return {};

  std::set<std::pair<int, int>> edges;
  const int n = static_cast<int>(toks.size());
  for (int i = 0; i < n; ++i) {
    auto it = node_of.find(toks[static_cast<size_t>(i)]);
    if (it == node_of.end()) continue;
    for (int j = i + 1; j < n && j - i < cfg.window; ++j) {
      auto jt = node_of.find(toks[static_cast<size_t>(j)]);
      if (jt == node_of.end() || jt->second == it->second) continue;
      edges.emplace(std::min(it->second, jt->second), std::max(it->second, jt->second));
    }
  }
  std::vector<std::vector<int>> adj(node_tok.size());
  for (auto [a, b] : edges) {
    adj[static_cast<size_t>(a)].push_back(b);
    adj[static_cast<size_t>(b)].push_back(a);
  }

  const auto score = pagerank_scores(adj, cfg.damping, cfg.tol, cfg.max_iter);

  RankedPhrases ranked;
  for (auto& phrase : candidate_phrases(doc, opts)) {
    Real sum = 0;
    for (const auto& t : phrase) sum += score[static_cast<size_t>(node_of.at(t))];
    ranked.push_back({std::move(phrase), sum});
  }
  detail::sort_and_truncate(ranked, k);
  return ranked;
}

// --- hybrid ------------------------------------------------------------------

// Union of the two top-k lists with duplicate removal: TF-IDF phrases first,
// then TextRank phrases, each in ranking order.
inline std::vector<Phrase> hybrid_synthetic(const Document& doc, const IdfTable& idf, int k,
                                            const TextRankConfig& tr_cfg = {},
                                            const ExtractOptions& opts = {}) {
  if (k < 1) fail("hybrid_synthetic: k must be >= 1");
  std::vector<Phrase> out;
  std::set<Phrase> seen;
  for (auto& list : {tfidf_rank(doc, idf, k, opts), textrank_rank(doc, k, tr_cfg, opts)})
    for (const auto& sp : list)
      if (seen.insert(sp.phrase).second) out.push_back(sp.phrase);
  return out;
}

}  // namespace kpgen

// Documents, datasets, JSONL I/O and copy-aware numeric encoding.
#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "kpgen/common.hpp"
#include "kpgen/tokenize.hpp"
#include "kpgen/vocab.hpp"

namespace kpgen {

using Phrase = std::vector<std::string>;

struct Document {
  std::string id;
  std::vector<std::string> title_tokens;
  std::vector<std::string> abstract_tokens;
  std::optional<std::vector<Phrase>> keyphrases;  // absent for unlabeled data
  std::string label_source;                       // "", "hybrid-unsup" or "self-learn"

  bool labeled() const { return keyphrases.has_value(); }
};

enum class DatasetKind { kLabeled, kUnlabeled, kSynthetic, kTitled };

inline const char* to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::kLabeled: return "labeled";
    case DatasetKind::kUnlabeled: return "unlabeled";
    case DatasetKind::kSynthetic: return "synthetic";
    case DatasetKind::kTitled: return "titled";
  }
  return "?";
}

struct Dataset {
  DatasetKind kind = DatasetKind::kUnlabeled;
  std::vector<Document> docs;

  size_t size() const { return docs.size(); }
  bool empty() const { return docs.empty(); }
};

inline void validate_dataset(const Dataset& ds) {
  std::unordered_set<std::string> seen;
  for (const auto& d : ds.docs) {
    if (!seen.insert(d.id).second) fail("dataset: duplicate document id '" + d.id + "'");
    switch (ds.kind) {
      case DatasetKind::kLabeled:
      case DatasetKind::kSynthetic:
        if (!d.keyphrases) fail("dataset: document '" + d.id + "' lacks keyphrases");
        break;
      case DatasetKind::kTitled:
        if (d.title_tokens.empty()) fail("dataset: document '" + d.id + "' lacks a title");
        break;
      case DatasetKind::kUnlabeled:
        break;
    }
  }
}

inline Dataset as_titled(Dataset ds) {
  ds.kind = DatasetKind::kTitled;
  validate_dataset(ds);
  return ds;
}

// --- JSONL ----------------------------------------------------------------
// One object per line: {"id", "title", "abstract", "keyphrases"?: [string],
// "label_source"?: string}. Text fields are tokenized on load (tokenize is
// idempotent, so already-tokenized files round-trip unchanged).

inline Dataset load_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("load_jsonl: cannot open " + path);
  Dataset ds;
  std::string line;
  long line_no = 0;
  long labeled_count = 0, synthetic_count = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      fail(path + ":" + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j.contains("title") || !j.contains("abstract"))
      fail(path + ":" + std::to_string(line_no) + ": object must have id, title, abstract");
    Document d;
    d.id = j.at("id").get<std::string>();
    d.title_tokens = tokenize(j.at("title").get<std::string>());
    d.abstract_tokens = tokenize(j.at("abstract").get<std::string>());
    if (j.contains("keyphrases")) {
      std::vector<Phrase> phrases;
      for (const auto& raw : j.at("keyphrases")) {
        Phrase p = tokenize(raw.get<std::string>());
        if (!p.empty()) phrases.push_back(std::move(p));
      }
      d.keyphrases = std::move(phrases);
      ++labeled_count;
    }
    if (j.contains("label_source")) {
      d.label_source = j.at("label_source").get<std::string>();
      ++synthetic_count;
    }
    ds.docs.push_back(std::move(d));
  }
  if (labeled_count == 0) {
    ds.kind = DatasetKind::kUnlabeled;
  } else if (labeled_count == static_cast<long>(ds.docs.size())) {
    ds.kind = synthetic_count == labeled_count ? DatasetKind::kSynthetic : DatasetKind::kLabeled;
  } else {
    fail("load_jsonl: " + path + " mixes labeled and unlabeled documents");
  }
  validate_dataset(ds);
  return ds;
}

inline void save_jsonl(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("save_jsonl: cannot open " + path);
  for (const auto& d : ds.docs) {
    nlohmann::json j;
    j["id"] = d.id;
    j["title"] = join_tokens(d.title_tokens);
    j["abstract"] = join_tokens(d.abstract_tokens);
    if (d.keyphrases) {
      auto arr = nlohmann::json::array();
      for (const auto& p : *d.keyphrases) arr.push_back(join_tokens(p));
      j["keyphrases"] = arr;
    }
    if (!d.label_source.empty()) j["label_source"] = d.label_source;
    out << j.dump() << "\n";
  }
}

// --- keyphrase sequence ----------------------------------------------------

// Joins phrases with the segmenter token, preserving phrase order.
inline std::vector<std::string> serialize_keyphrases(const std::vector<Phrase>& phrases) {
  std::vector<std::string> seq;
  for (size_t i = 0; i < phrases.size(); ++i) {
    if (i) seq.emplace_back(kSegToken);
    seq.insert(seq.end(), phrases[i].begin(), phrases[i].end());
  }
  return seq;
}

// Frequency over titles, abstracts and keyphrases of every document.
inline void count_tokens(const Dataset& ds, std::unordered_map<std::string, long long>& counts) {
  for (const auto& d : ds.docs) {
    for (const auto& t : d.title_tokens) ++counts[t];
    for (const auto& t : d.abstract_tokens) ++counts[t];
    if (d.keyphrases)
      for (const auto& p : *d.keyphrases)
        for (const auto& t : p) ++counts[t];
  }
}

inline Vocabulary build_vocabulary(const Dataset& ds, int max_size) {
  std::unordered_map<std::string, long long> counts;
  count_tokens(ds, counts);
  return build_vocabulary_from_counts(counts, max_size);
}

inline Vocabulary build_vocabulary(const std::vector<const Dataset*>& sets, int max_size) {
  std::unordered_map<std::string, long long> counts;
  for (const auto* ds : sets) count_tokens(*ds, counts);
  return build_vocabulary_from_counts(counts, max_size);
}

// --- numeric encoding -------------------------------------------------------

struct Example {
  std::string id;
  std::vector<int> src_ids;      // ids over the fixed vocabulary (OOV -> UNK)
  std::vector<int> src_ext_ids;  // ids over vocab + this document's OOV words
  std::vector<std::string> oov_words;
  std::vector<int> tgt_ids;      // SEG-joined, EOS-terminated
  std::vector<int> tgt_ext_ids;

  int oov_count() const { return static_cast<int>(oov_words.size()); }
};

struct EncodeOptions {
  int src_max = 200;
  int tgt_max = 40;
  bool use_title = false;  // prepend title tokens to the encoder input
  enum class Target { kKeyphrases, kTitle, kNone } target = Target::kKeyphrases;
};

inline Example encode_example(const Document& doc, const Vocabulary& vocab,
                              const EncodeOptions& opts = {}) {
  if (doc.abstract_tokens.empty()) fail("encode_example: document '" + doc.id + "' has an empty abstract");

  Example ex;
  ex.id = doc.id;

  std::vector<std::string> src;
  if (opts.use_title) src = doc.title_tokens;
  src.insert(src.end(), doc.abstract_tokens.begin(), doc.abstract_tokens.end());
  if (static_cast<int>(src.size()) > opts.src_max) src.resize(static_cast<size_t>(opts.src_max));

  std::unordered_map<std::string, int> oov_index;  // token -> extended id
  const int v = vocab.size();
  for (const auto& tok : src) {
    int id = vocab.id(tok);
    if (id == kUnk && tok != kUnkToken) {
      auto [it, fresh] = oov_index.emplace(tok, v + static_cast<int>(ex.oov_words.size()));
      if (fresh) ex.oov_words.push_back(tok);
      ex.src_ids.push_back(kUnk);
      ex.src_ext_ids.push_back(it->second);
    } else {
      ex.src_ids.push_back(id);
      ex.src_ext_ids.push_back(id);
    }
  }

  std::vector<std::string> tgt;
  switch (opts.target) {
    case EncodeOptions::Target::kKeyphrases:
      if (!doc.keyphrases) fail("encode_example: document '" + doc.id + "' has no keyphrases");
      tgt = serialize_keyphrases(*doc.keyphrases);
      break;
    case EncodeOptions::Target::kTitle:
      if (doc.title_tokens.empty()) fail("encode_example: document '" + doc.id + "' has no title");
      tgt = doc.title_tokens;
      break;
    case EncodeOptions::Target::kNone:
      return ex;
  }
  if (static_cast<int>(tgt.size()) > opts.tgt_max - 1) tgt.resize(static_cast<size_t>(opts.tgt_max - 1));
  for (const auto& tok : tgt) {
    int id = vocab.id(tok);
    ex.tgt_ids.push_back(id);
    if (id == kUnk && tok != kUnkToken) {
      auto it = oov_index.find(tok);
      ex.tgt_ext_ids.push_back(it == oov_index.end() ? kUnk : it->second);
    } else {
      ex.tgt_ext_ids.push_back(id);
    }
  }
  ex.tgt_ids.push_back(kEos);
  ex.tgt_ext_ids.push_back(kEos);
  return ex;
}

// Maps an id over the extended vocabulary back to its surface token.
inline std::string render_token(int id, const Vocabulary& vocab,
                                const std::vector<std::string>& oov_words) {
  if (id < vocab.size()) return vocab.token(id);
  size_t k = static_cast<size_t>(id - vocab.size());
  if (k >= oov_words.size()) fail("render_token: extended id out of range");
  return oov_words[k];
}

inline std::vector<std::string> render_tokens(const std::vector<int>& ids, const Vocabulary& vocab,
                                              const std::vector<std::string>& oov_words) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(render_token(id, vocab, oov_words));
  return out;
}

}  // namespace kpgen

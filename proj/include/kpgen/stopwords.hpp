// English stopword list used by the candidate-phrase filter.
#pragma once

#include <string>
#include <unordered_set>

namespace kpgen {

inline const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> kSet = {
      "a", "about", "above", "after", "again", "against", "all", "am", "an",
      "and", "any", "are", "aren't", "as", "at", "be", "because", "been",
      "before", "being", "below", "between", "both", "but", "by", "can",
      "cannot", "could", "couldn't", "did", "didn't", "do", "does", "doesn't",
      "doing", "don't", "down", "during", "each", "few", "for", "from",
      "further", "had", "hadn't", "has", "hasn't", "have", "haven't",
      "having", "he", "her", "here", "hers", "herself", "him", "himself",
      "his", "how", "i", "if", "in", "into", "is", "isn't", "it", "its",
      "itself", "just", "me", "more", "most", "mustn't", "my", "myself",
      "no", "nor", "not", "now", "of", "off", "on", "once", "only", "or",
      "other", "ought", "our", "ours", "ourselves", "out", "over", "own",
      "same", "shan't", "she", "should", "shouldn't", "so", "some", "such",
      "than", "that", "the", "their", "theirs", "them", "themselves", "then",
      "there", "these", "they", "this", "those", "through", "to", "too",
      "under", "until", "up", "upon", "very", "was", "wasn't", "we", "were",
      "weren't", "what", "when", "where", "which", "while", "who", "whom",
      "why", "will", "with", "won't", "would", "wouldn't", "you", "your",
      "yours", "yourself", "yourselves",
      // clipped forms left behind by apostrophe splitting ("don't" -> don, t)
      "s", "t", "d", "ll", "m", "re", "ve", "don", "didn", "doesn", "isn",
      "aren", "wasn", "weren", "hasn", "haven", "hadn", "won", "wouldn",
      "couldn", "shouldn", "mustn", "shan",
  };
  return kSet;
}

inline bool is_stopword(const std::string& tok) { return stopwords().count(tok) > 0; }

}  // namespace kpgen

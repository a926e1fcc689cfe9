// Copyright 2026 The claimscope Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Normalization and tokenization of tweet text, plus n-gram counting and
// content fingerprints. Everything here is a pure function of its input.

#include <sodium.h>
#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace claimscope {

inline constexpr std::string_view kUrlToken = "<url>";

using StopwordSet = std::unordered_set<std::string>;

inline constexpr int kStopwordListVersion = 1;

// Frozen copy of resources/stopwords.txt.
inline const StopwordSet &default_stopwords() {
  static const StopwordSet words{
      "a", "about", "above", "after", "again", "against", "all", "am", "an", "and",
      "any", "are", "as", "at", "be", "because", "been", "before", "being", "below",
      "between", "both", "but", "by", "can", "could", "did", "do", "does", "doing",
      "down", "during", "each", "few", "for", "from", "further", "had", "has", "have",
      "having", "he", "her", "here", "hers", "herself", "him", "himself", "his", "how",
      "i", "if", "in", "into", "is", "it", "it's", "its", "itself", "just",
      "me", "more", "most", "my", "myself", "no", "nor", "not", "now", "of",
      "off", "on", "once", "only", "or", "other", "our", "ours", "ourselves", "out",
      "over", "own", "same", "she", "should", "so", "some", "such", "than", "that",
      "that's", "the", "their", "theirs", "them", "themselves", "then", "there", "these", "they",
      "this", "those", "through", "to", "too", "under", "until", "up", "very", "was",
      "we", "were", "what", "when", "where", "which", "while", "who", "whom", "why",
      "will", "with", "would", "you", "your", "yours", "yourself", "yourselves", "i'm", "you're",
      "we're", "they're", "isn't", "aren't", "don't", "doesn't", "didn't", "won't", "can't", "also",
      "amp", "rt", "via", "get", "got", "let", "one", "much", "many", "even",
      "still",
  };
  return words;
}

// One word per line; blank lines and lines starting with '#' are skipped.
inline StopwordSet load_stopwords(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open stopword list " + path);
  StopwordSet out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.insert(line);
  }
  return out;
}

namespace detail {

inline bool is_ascii(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; });
}

inline bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

inline bool starts_with_url(std::string_view chunk) {
  return chunk.starts_with("http://") || chunk.starts_with("https://") || chunk.starts_with("www.");
}

// Lowercase + NFC for non-ASCII input, with Unicode white space folded to ' '.
inline std::string unicode_fold(std::string_view text) {
  icu::UnicodeString us = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  us.toLower(icu::Locale::getRoot());
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2 *nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
  icu::UnicodeString normalized = nfc->normalize(us, status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU normalization failed");
  for (int32_t i = 0; i < normalized.length(); ++i) {
    if (u_isUWhiteSpace(normalized.charAt(i))) normalized.setCharAt(i, u' ');
  }
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

}  // namespace detail

// Lowercased NFC text with URLs replaced by "<url>". White space runs
// collapse to one space. Idempotent.
inline std::string normalize(std::string_view text) {
  std::string folded;
  if (detail::is_ascii(text)) {
    folded.resize(text.size());
    std::transform(text.begin(), text.end(), folded.begin(), [](char c) {
      return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
    });
  } else {
    folded = detail::unicode_fold(text);
  }
  std::string out;
  out.reserve(folded.size());
  std::size_t i = 0;
  const std::size_t n = folded.size();
  while (i < n) {
    while (i < n && detail::is_ascii_space(folded[i])) ++i;
    if (i == n) break;
    std::size_t j = i;
    while (j < n && !detail::is_ascii_space(folded[j])) ++j;
    std::string_view chunk(folded.data() + i, j - i);
    if (!out.empty()) out += ' ';
    if (detail::starts_with_url(chunk)) {
      out += kUrlToken;
    } else {
      out += chunk;
    }
    i = j;
  }
  return out;
}

namespace detail {

inline bool is_word_cp(UChar32 cp) {
  if (cp < 0x80) {
    return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9') || cp == '_';
  }
  return (U_GET_GC_MASK(cp) & (U_GC_L_MASK | U_GC_N_MASK | U_GC_M_MASK)) != 0;
}

inline bool is_apostrophe(UChar32 cp) { return cp == '\'' || cp == 0x2019; }

inline void tokenize_chunk(std::string_view chunk, std::vector<std::string> &out) {
  std::string cur;
  bool has_word = false;
  auto flush = [&] {
    while (!cur.empty() && (cur.back() == '@' || cur.back() == '#')) cur.pop_back();
    if (has_word && !cur.empty()) out.push_back(std::move(cur));
    cur.clear();
    has_word = false;
  };
  const auto *s = reinterpret_cast<const uint8_t *>(chunk.data());
  const int32_t length = static_cast<int32_t>(chunk.size());
  int32_t i = 0;
  while (i < length) {
    int32_t start = i;
    UChar32 cp;
    U8_NEXT(s, i, length, cp);
    if (cp < 0) {
      flush();
      continue;
    }
    if (is_word_cp(cp)) {
      cur.append(chunk.data() + start, static_cast<std::size_t>(i - start));
      has_word = true;
    } else if (cp == '@' || cp == '#') {
      cur += static_cast<char>(cp);
    } else if (is_apostrophe(cp) && has_word) {
      int32_t peek = i;
      UChar32 next = -1;
      if (peek < length) U8_NEXT(s, peek, length, next);
      if (next >= 0 && is_word_cp(next)) {
        cur += '\'';
      } else {
        flush();
      }
    } else {
      flush();
    }
  }
  flush();
}

}  // namespace detail

// Splits normalized text into tokens. "@" and "#" survive as word prefixes,
// apostrophes only between word characters; pure punctuation is dropped.
// The URL sentinel is kept as its own token.
inline std::vector<std::string> tokenize(std::string_view normalized) {
  std::vector<std::string> out;
  std::size_t i = 0;
  const std::size_t n = normalized.size();
  while (i < n) {
    while (i < n && detail::is_ascii_space(normalized[i])) ++i;
    if (i == n) break;
    std::size_t j = i;
    while (j < n && !detail::is_ascii_space(normalized[j])) ++j;
    std::string_view chunk = normalized.substr(i, j - i);
    if (chunk == kUrlToken) {
      out.emplace_back(kUrlToken);
    } else {
      detail::tokenize_chunk(chunk, out);
    }
    i = j;
  }
  return out;
}

// Term -> occurrence count. Never holds zero counts; total is the sum of
// all counts. Merging is associative and commutative.
class TermVector {
 public:
  using Map = std::unordered_map<std::string, std::uint64_t>;

  void add(const std::string &term, std::uint64_t n = 1) {
    if (n == 0) return;
    counts_[term] += n;
    total_ += n;
  }
  void add(std::string &&term, std::uint64_t n = 1) {
    if (n == 0) return;
    counts_[std::move(term)] += n;
    total_ += n;
  }

  void merge(const TermVector &other) {
    for (const auto &[term, n] : other.counts_) counts_[term] += n;
    total_ += other.total_;
  }

  std::uint64_t count(const std::string &term) const {
    auto it = counts_.find(term);
    return it == counts_.end() ? 0 : it->second;
  }
  std::uint64_t total() const { return total_; }
  std::size_t size() const { return counts_.size(); }
  bool empty() const { return counts_.empty(); }
  const Map &counts() const { return counts_; }

  // Entries ordered by term, for deterministic output.
  std::vector<std::pair<std::string, std::uint64_t>> sorted() const {
    std::vector<std::pair<std::string, std::uint64_t>> out(counts_.begin(), counts_.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  friend bool operator==(const TermVector &a, const TermVector &b) {
    return a.total_ == b.total_ && a.counts_ == b.counts_;
  }

 private:
  Map counts_;
  std::uint64_t total_ = 0;
};

// Adds the unigrams (minus stopwords) and, for max_n == 2, the contiguous
// bigrams whose members are not both stopwords.
inline void add_terms(TermVector &into, const std::vector<std::string> &tokens, int max_n,
                      const StopwordSet &stopwords) {
  if (max_n != 1 && max_n != 2) throw std::invalid_argument("max_n must be 1 or 2");
  const std::size_t n = tokens.size();
  std::vector<char> stop(n);
  for (std::size_t i = 0; i < n; ++i) {
    stop[i] = stopwords.count(tokens[i]) ? 1 : 0;
    if (!stop[i]) into.add(tokens[i]);
  }
  if (max_n < 2) return;
  std::string bigram;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (stop[i] && stop[i + 1]) continue;
    bigram.assign(tokens[i]);
    bigram += ' ';
    bigram += tokens[i + 1];
    into.add(bigram);
  }
}

inline TermVector extract_terms(const std::vector<std::string> &tokens, int max_n = 2,
                                const StopwordSet &stopwords = default_stopwords()) {
  TermVector out;
  add_terms(out, tokens, max_n, stopwords);
  return out;
}

// 128-bit BLAKE2b digest of a normalized text.
struct ContentFingerprint {
  std::array<std::uint8_t, 16> digest{};

  std::string hex() const {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(32);
    for (auto b : digest) {
      out += kHex[b >> 4];
      out += kHex[b & 0xf];
    }
    return out;
  }

  friend auto operator<=>(const ContentFingerprint &, const ContentFingerprint &) = default;
};

struct FingerprintHash {
  std::size_t operator()(const ContentFingerprint &f) const noexcept {
    std::uint64_t h;
    std::memcpy(&h, f.digest.data(), sizeof(h));
    return static_cast<std::size_t>(h);
  }
};

inline ContentFingerprint fingerprint(std::string_view normalized) {
  ContentFingerprint fp;
  crypto_generichash(fp.digest.data(), fp.digest.size(),
                     reinterpret_cast<const unsigned char *>(normalized.data()), normalized.size(),
                     nullptr, 0);
  return fp;
}

}  // namespace claimscope

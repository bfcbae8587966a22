// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace poslda {

using WordId = std::int32_t;
using TagId = std::int32_t;

inline constexpr std::string_view kUnknownWord = "<unk>";

// Dense string <-> id map. Ids are assigned in first-occurrence order.
class Vocabulary {
 public:
  // Returns the id of `word`, inserting it if unseen.
  WordId add(std::string_view word);
  std::optional<WordId> lookup(std::string_view word) const;
  const std::string& word(WordId id) const { return words_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }
  const std::vector<std::string>& words() const { return words_; }

  // Id of the reserved unknown-word entry, if one was added.
  std::optional<WordId> unknown_id() const { return lookup(kUnknownWord); }

  bool operator==(const Vocabulary& other) const { return words_ == other.words_; }

 private:
  std::unordered_map<std::string, WordId> ids_;
  std::vector<std::string> words_;
};

struct Document {
  std::string name;
  std::vector<std::vector<WordId>> sentences;
  // Empty when the document carries no gold tags; otherwise parallel to
  // `sentences`, sentence by sentence.
  std::vector<std::vector<TagId>> gold_tags;

  bool has_gold_tags() const { return !gold_tags.empty() || sentences.empty(); }
  std::size_t token_count() const;

  bool operator==(const Document&) const = default;
};

struct Corpus {
  std::vector<Document> documents;
  Vocabulary vocabulary;
  Vocabulary tags;

  std::size_t token_count() const;
  std::size_t sentence_count() const;
  // True when every document carries gold tags (and there is at least one tag).
  bool has_gold_tags() const;

  bool operator==(const Corpus&) const = default;
};

// Per-token tags shaped like a corpus: document, sentence, position.
using TagSequences = std::vector<std::vector<std::vector<TagId>>>;

enum class CorpusFormat { kPlain, kTagged };

struct LoadOptions {
  CorpusFormat format = CorpusFormat::kPlain;
  bool lowercase = true;
  // Append a reserved "<unk>" entry to the vocabulary so that held-out text
  // can be mapped through it.
  bool reserve_unknown = false;
};

// Splits plain text into sentences of tokens. A sentence ends at '.', '!' or
// '?' followed by whitespace or end of input. Other punctuation separates
// tokens and is dropped; apostrophes and hyphens between word characters are
// kept inside the token.
std::vector<std::vector<std::string>> tokenize_plain(std::string_view text, bool lowercase);

// Loads a file, or every regular non-hidden file of a directory in
// lexicographic filename order, one document per file.
Corpus load_corpus(const std::filesystem::path& path, const LoadOptions& options = {});

// Parses documents from in-memory text. `name` is used in error messages.
void append_plain_document(Corpus& corpus, std::string name, std::string_view text, bool lowercase);
void append_tagged_document(Corpus& corpus, std::string name, std::string_view text, bool lowercase);

// Writers for the two on-disk formats. Re-ingesting their output reproduces
// the token id sequences.
void write_plain_document(std::ostream& out, const Corpus& corpus, const Document& doc);
void write_tagged_document(std::ostream& out, const Corpus& corpus, const Document& doc);

// Re-encodes `corpus` with the ids of `vocabulary`. Words missing from it map
// to its "<unk>" entry; a ValidationError is thrown if there is none. Tags are
// remapped through `tags` the same way (unknown tags are an error).
Corpus remap_corpus(const Corpus& corpus, const Vocabulary& vocabulary, const Vocabulary* tags = nullptr);

// Gold tags of every document; throws ValidationError if any are missing.
TagSequences gold_tag_sequences(const Corpus& corpus);

// Corpus containing the selected documents (in the given order), sharing the
// vocabulary and tag set of `corpus`.
Corpus select_documents(const Corpus& corpus, const std::vector<std::size_t>& indices);

// Per-word permitted tag sets. Tag ids index bits of a 64-bit mask, so at
// most 64 tags are supported.
class TagDictionary {
 public:
  using Mask = std::uint64_t;
  static constexpr std::size_t kMaxTags = 64;

  TagDictionary(std::vector<std::string> tag_names, std::size_t vocabulary_size,
                std::optional<int> threshold);

  std::size_t tag_count() const { return tag_names_.size(); }
  const std::vector<std::string>& tag_names() const { return tag_names_; }
  // nullopt stands for an infinite threshold (no word constrained).
  std::optional<int> threshold() const { return threshold_; }
  std::size_t vocabulary_size() const { return allowed_.size(); }

  Mask full_mask() const;
  // Words outside the dictionary's vocabulary are unconstrained.
  Mask allowed(WordId word) const;
  bool is_constrained(WordId word) const;
  std::size_t allowed_count(WordId word) const;

  void constrain(WordId word, Mask mask);

  // One line per constrained word: word TAB comma-separated tag names.
  void write(std::ostream& out, const Vocabulary& vocabulary) const;

 private:
  std::vector<std::string> tag_names_;
  std::optional<int> threshold_;
  std::vector<Mask> allowed_;
};

// Words occurring at least `threshold` times are constrained to the tags
// they were observed with. nullopt = infinite threshold.
TagDictionary build_tag_dictionary(const Corpus& corpus, std::optional<int> threshold);

struct AmbiguityStats {
  double percent_ambiguous = 0.0;
  double mean_tags_per_token = 0.0;
};

AmbiguityStats ambiguity_stats(const Corpus& corpus, const TagDictionary& dictionary);

}  // namespace poslda

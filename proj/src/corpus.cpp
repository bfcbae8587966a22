// Apache License, Version 2.0, refer to LICENSE.txt

#include "poslda/corpus.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <fstream>
#include <iterator>
#include <map>
#include <ostream>
#include <sstream>

#include "poslda/error.hpp"

namespace poslda {

namespace fs = std::filesystem;

WordId Vocabulary::add(std::string_view word) {
  auto it = ids_.find(std::string(word));
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<WordId>(words_.size());
  words_.emplace_back(word);
  ids_.emplace(words_.back(), id);
  return id;
}

std::optional<WordId> Vocabulary::lookup(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::size_t Document::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

std::size_t Corpus::token_count() const {
  std::size_t n = 0;
  for (const auto& d : documents) n += d.token_count();
  return n;
}

std::size_t Corpus::sentence_count() const {
  std::size_t n = 0;
  for (const auto& d : documents) n += d.sentences.size();
  return n;
}

bool Corpus::has_gold_tags() const {
  if (tags.empty()) return false;
  return std::all_of(documents.begin(), documents.end(),
                     [](const Document& d) { return d.has_gold_tags(); });
}

namespace {

bool is_space(unsigned char ch) {
  return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\f' || ch == '\v';
}

// ASCII punctuation only; bytes >= 0x80 belong to UTF-8 sequences and count
// as word characters.
bool is_punct(unsigned char ch) {
  return ch < 0x80 && std::ispunct(ch) != 0;
}

bool is_sentence_end(unsigned char ch) { return ch == '.' || ch == '!' || ch == '?'; }

bool is_joiner(unsigned char ch) { return ch == '\'' || ch == '-'; }

std::string to_lower_ascii(std::string s) {
  for (auto& ch : s) {
    const auto u = static_cast<unsigned char>(ch);
    if (u < 0x80) ch = static_cast<char>(std::tolower(u));
  }
  return s;
}

// Splits one whitespace-delimited chunk into word tokens.
void split_chunk(std::string_view chunk, bool lowercase, std::vector<std::string>& out) {
  std::string current;
  for (std::size_t i = 0; i < chunk.size(); ++i) {
    const auto ch = static_cast<unsigned char>(chunk[i]);
    if (!is_punct(ch)) {
      current.push_back(static_cast<char>(ch));
      continue;
    }
    const bool inner = is_joiner(ch) && !current.empty() && i + 1 < chunk.size() &&
                       !is_punct(static_cast<unsigned char>(chunk[i + 1]));
    if (inner) {
      current.push_back(static_cast<char>(ch));
    } else if (!current.empty()) {
      out.push_back(lowercase ? to_lower_ascii(std::move(current)) : std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(lowercase ? to_lower_ascii(std::move(current)) : std::move(current));
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read corpus file '" + path.string() + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error while reading corpus file '" + path.string() + "'");
  return text;
}

}  // namespace

std::vector<std::vector<std::string>> tokenize_plain(std::string_view text, bool lowercase) {
  std::vector<std::vector<std::string>> sentences;
  std::vector<std::string> current;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t begin = i;
    while (i < text.size() && !is_space(static_cast<unsigned char>(text[i]))) ++i;
    if (begin == i) break;
    const std::string_view chunk = text.substr(begin, i - begin);
    split_chunk(chunk, lowercase, current);
    // The chunk is followed by whitespace or end of input here.
    if (is_sentence_end(static_cast<unsigned char>(chunk.back())) && !current.empty()) {
      sentences.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) sentences.push_back(std::move(current));
  return sentences;
}

void append_plain_document(Corpus& corpus, std::string name, std::string_view text, bool lowercase) {
  Document doc;
  doc.name = std::move(name);
  for (const auto& sentence : tokenize_plain(text, lowercase)) {
    std::vector<WordId> ids;
    ids.reserve(sentence.size());
    for (const auto& token : sentence) ids.push_back(corpus.vocabulary.add(token));
    doc.sentences.push_back(std::move(ids));
  }
  corpus.documents.push_back(std::move(doc));
}

void append_tagged_document(Corpus& corpus, std::string name, std::string_view text, bool lowercase) {
  Document doc;
  doc.name = std::move(name);
  std::vector<WordId> words;
  std::vector<TagId> tags;
  auto flush = [&] {
    if (words.empty()) return;
    doc.sentences.push_back(std::move(words));
    doc.gold_tags.push_back(std::move(tags));
    words.clear();
    tags.clear();
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    const bool blank = std::all_of(line.begin(), line.end(),
                                   [](char c) { return is_space(static_cast<unsigned char>(c)); });
    if (blank) {
      flush();
      if (end == text.size()) break;
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0 || tab + 1 >= line.size() ||
        line.find('\t', tab + 1) != std::string_view::npos) {
      throw FormatError(doc.name + ":" + std::to_string(line_no) +
                        ": expected exactly one token and one tag separated by a TAB");
    }
    std::string token(line.substr(0, tab));
    if (lowercase) token = to_lower_ascii(std::move(token));
    words.push_back(corpus.vocabulary.add(token));
    tags.push_back(corpus.tags.add(line.substr(tab + 1)));
    if (end == text.size()) break;
  }
  flush();
  corpus.documents.push_back(std::move(doc));
}

Corpus load_corpus(const fs::path& path, const LoadOptions& options) {
  std::error_code ec;
  if (!fs::exists(path, ec)) throw IoError("corpus path '" + path.string() + "' does not exist");

  std::vector<fs::path> files;
  if (fs::is_directory(path, ec)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (!entry.is_regular_file()) continue;
      const auto name = entry.path().filename().string();
      if (name.empty() || name.front() == '.') continue;
      files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  } else {
    files.push_back(path);
  }

  Corpus corpus;
  for (const auto& file : files) {
    const std::string text = read_file(file);
    if (options.format == CorpusFormat::kPlain) {
      append_plain_document(corpus, file.filename().string(), text, options.lowercase);
    } else {
      append_tagged_document(corpus, file.filename().string(), text, options.lowercase);
    }
  }
  if (options.reserve_unknown) corpus.vocabulary.add(kUnknownWord);
  return corpus;
}

void write_plain_document(std::ostream& out, const Corpus& corpus, const Document& doc) {
  for (const auto& sentence : doc.sentences) {
    for (std::size_t i = 0; i < sentence.size(); ++i) {
      if (i > 0) out << ' ';
      out << corpus.vocabulary.word(sentence[i]);
    }
    out << ".\n";
  }
}

void write_tagged_document(std::ostream& out, const Corpus& corpus, const Document& doc) {
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    for (std::size_t i = 0; i < doc.sentences[s].size(); ++i) {
      out << corpus.vocabulary.word(doc.sentences[s][i]) << '\t'
          << corpus.tags.word(doc.gold_tags.at(s).at(i)) << '\n';
    }
    out << '\n';
  }
}

Corpus remap_corpus(const Corpus& corpus, const Vocabulary& vocabulary, const Vocabulary* tags) {
  Corpus out;
  out.vocabulary = vocabulary;
  out.tags = tags != nullptr ? *tags : corpus.tags;
  const auto unk = vocabulary.unknown_id();
  for (const auto& doc : corpus.documents) {
    Document mapped;
    mapped.name = doc.name;
    for (const auto& sentence : doc.sentences) {
      std::vector<WordId> ids;
      ids.reserve(sentence.size());
      for (const WordId w : sentence) {
        const auto& word = corpus.vocabulary.word(w);
        if (auto id = vocabulary.lookup(word)) {
          ids.push_back(*id);
        } else if (unk) {
          ids.push_back(*unk);
        } else {
          throw ValidationError("word '" + word + "' in document '" + doc.name +
                                "' is not in the vocabulary and no <unk> entry is reserved");
        }
      }
      mapped.sentences.push_back(std::move(ids));
    }
    for (const auto& sentence_tags : doc.gold_tags) {
      std::vector<TagId> ids;
      ids.reserve(sentence_tags.size());
      for (const TagId t : sentence_tags) {
        const auto& name = corpus.tags.word(t);
        auto id = out.tags.lookup(name);
        if (!id) throw ValidationError("tag '" + name + "' is not in the tag set");
        ids.push_back(*id);
      }
      mapped.gold_tags.push_back(std::move(ids));
    }
    out.documents.push_back(std::move(mapped));
  }
  return out;
}

TagSequences gold_tag_sequences(const Corpus& corpus) {
  if (!corpus.has_gold_tags()) throw ValidationError("corpus has no gold tags");
  TagSequences out;
  out.reserve(corpus.documents.size());
  for (const auto& doc : corpus.documents) out.push_back(doc.gold_tags);
  return out;
}

Corpus select_documents(const Corpus& corpus, const std::vector<std::size_t>& indices) {
  Corpus out;
  out.vocabulary = corpus.vocabulary;
  out.tags = corpus.tags;
  out.documents.reserve(indices.size());
  for (const auto i : indices) out.documents.push_back(corpus.documents.at(i));
  return out;
}

TagDictionary::TagDictionary(std::vector<std::string> tag_names, std::size_t vocabulary_size,
                             std::optional<int> threshold)
    : tag_names_(std::move(tag_names)), threshold_(threshold) {
  if (tag_names_.empty()) throw ValidationError("tag dictionary needs at least one tag");
  if (tag_names_.size() > kMaxTags) {
    throw ValidationError("tag dictionary supports at most 64 tags, got " + std::to_string(tag_names_.size()));
  }
  if (threshold_ && *threshold_ < 1) throw ValidationError("tag dictionary threshold must be >= 1");
  allowed_.assign(vocabulary_size, full_mask());
}

TagDictionary::Mask TagDictionary::full_mask() const {
  return tag_names_.size() == kMaxTags ? ~Mask{0} : ((Mask{1} << tag_names_.size()) - 1);
}

TagDictionary::Mask TagDictionary::allowed(WordId word) const {
  if (word < 0 || static_cast<std::size_t>(word) >= allowed_.size()) return full_mask();
  return allowed_[static_cast<std::size_t>(word)];
}

bool TagDictionary::is_constrained(WordId word) const { return allowed(word) != full_mask(); }

std::size_t TagDictionary::allowed_count(WordId word) const {
  return static_cast<std::size_t>(std::popcount(allowed(word)));
}

void TagDictionary::constrain(WordId word, Mask mask) {
  mask &= full_mask();
  if (mask == 0) throw ValidationError("empty allowed tag set for word id " + std::to_string(word));
  if (word < 0 || static_cast<std::size_t>(word) >= allowed_.size()) {
    throw ValidationError("word id " + std::to_string(word) + " outside the dictionary vocabulary");
  }
  allowed_[static_cast<std::size_t>(word)] = mask;
}

void TagDictionary::write(std::ostream& out, const Vocabulary& vocabulary) const {
  for (std::size_t w = 0; w < allowed_.size(); ++w) {
    if (allowed_[w] == full_mask()) continue;
    out << vocabulary.word(static_cast<WordId>(w)) << '\t';
    bool first = true;
    for (std::size_t t = 0; t < tag_names_.size(); ++t) {
      if ((allowed_[w] >> t & 1U) == 0) continue;
      if (!first) out << ',';
      out << tag_names_[t];
      first = false;
    }
    out << '\n';
  }
}

TagDictionary build_tag_dictionary(const Corpus& corpus, std::optional<int> threshold) {
  if (!corpus.has_gold_tags()) throw ValidationError("tag dictionary requires a corpus with gold tags");
  TagDictionary dict(corpus.tags.words(), corpus.vocabulary.size(), threshold);
  if (!threshold) return dict;

  std::vector<std::int64_t> frequency(corpus.vocabulary.size(), 0);
  std::vector<TagDictionary::Mask> seen(corpus.vocabulary.size(), 0);
  for (const auto& doc : corpus.documents) {
    for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
      for (std::size_t i = 0; i < doc.sentences[s].size(); ++i) {
        const auto w = static_cast<std::size_t>(doc.sentences[s][i]);
        ++frequency[w];
        seen[w] |= TagDictionary::Mask{1} << doc.gold_tags[s][i];
      }
    }
  }
  for (std::size_t w = 0; w < frequency.size(); ++w) {
    if (frequency[w] >= *threshold) dict.constrain(static_cast<WordId>(w), seen[w]);
  }
  return dict;
}

AmbiguityStats ambiguity_stats(const Corpus& corpus, const TagDictionary& dictionary) {
  std::size_t tokens = 0;
  std::size_t ambiguous = 0;
  std::size_t tag_sum = 0;
  for (const auto& doc : corpus.documents) {
    for (const auto& sentence : doc.sentences) {
      for (const WordId w : sentence) {
        const auto n = dictionary.allowed_count(w);
        ++tokens;
        tag_sum += n;
        if (n > 1) ++ambiguous;
      }
    }
  }
  if (tokens == 0) return {};
  return {100.0 * static_cast<double>(ambiguous) / static_cast<double>(tokens),
          static_cast<double>(tag_sum) / static_cast<double>(tokens)};
}

}  // namespace poslda

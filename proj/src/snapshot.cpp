// Apache License, Version 2.0, refer to LICENSE.txt

#include "poslda/snapshot.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unistd.h>

#include "poslda/error.hpp"

namespace poslda {

namespace {

constexpr std::string_view kMagic = "PLDASNAP";

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u64(s.size());
    out_.append(s);
  }
  template <typename T, typename F>
  void list(const std::vector<T>& v, F&& each) {
    u64(v.size());
    for (const auto& x : v) each(x);
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const auto n = length();
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  // Element count that is plausible for the remaining bytes.
  std::size_t length() {
    const std::uint64_t n = u64();
    if (n > in_.size() - pos_) throw SnapshotError("snapshot is truncated or corrupt (length field too large)");
    return static_cast<std::size_t>(n);
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw SnapshotError("snapshot is truncated");
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

std::uint32_t checksum(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1U << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + pos), chunk);
    pos += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

void write_vocabulary(Writer& w, const Vocabulary& v) {
  w.list(v.words(), [&](const std::string& s) { w.str(s); });
}

Vocabulary read_vocabulary(Reader& r) {
  Vocabulary v;
  const auto n = r.length();
  for (std::size_t i = 0; i < n; ++i) {
    const auto word = r.str();
    if (v.add(word) != static_cast<WordId>(i)) throw SnapshotError("duplicate vocabulary entry in snapshot");
  }
  return v;
}

template <typename T>
void write_ids(Writer& w, const std::vector<T>& ids) {
  w.list(ids, [&](T id) { w.i32(static_cast<std::int32_t>(id)); });
}

template <typename T>
std::vector<T> read_ids(Reader& r) {
  std::vector<T> out(r.length());
  for (auto& x : out) x = static_cast<T>(r.i32());
  return out;
}

}  // namespace

std::string save_snapshot(const ModelState& state) {
  Writer w;
  const Corpus& corpus = state.corpus();
  write_vocabulary(w, corpus.vocabulary);
  write_vocabulary(w, corpus.tags);
  w.list(corpus.documents, [&](const Document& doc) {
    w.str(doc.name);
    w.list(doc.sentences, [&](const std::vector<WordId>& s) { write_ids(w, s); });
    w.list(doc.gold_tags, [&](const std::vector<TagId>& s) { write_ids(w, s); });
  });

  const ModelConfig& config = state.config().config();
  w.i32(config.topics);
  w.i32(config.classes);
  w.i32(config.semantic_classes);
  write_ids(w, config.semantic_class_ids);
  w.i32(config.order);
  w.u64(config.seed);
  w.i32(config.iterations);

  const Hyperparameters& h = state.hyperparameters();
  w.list(h.alpha, [&](double x) { w.f64(x); });
  w.f64(h.beta);
  w.list(h.gamma, [&](double x) { w.f64(x); });

  w.list(state.class_masks(), [&](std::uint64_t m) { w.u64(m); });
  w.u8(state.transition_mode() == TransitionMode::kExact ? 0 : 1);
  write_ids(w, state.class_assignments());
  write_ids(w, state.topic_assignments());
  w.i32(state.completed_sweeps());
  std::ostringstream rng;
  rng << state.rng();
  w.str(rng.str());

  const std::string payload = w.take();
  Writer out;
  std::string bytes(kMagic);
  out.u32(kSnapshotVersion);
  out.u64(payload.size());
  bytes += out.take();
  bytes += payload;
  Writer tail;
  tail.u32(checksum(payload));
  bytes += tail.take();
  return bytes;
}

ModelState load_snapshot(std::string_view bytes) {
  constexpr std::size_t header = 8 + 4 + 8;
  if (bytes.size() < header + 4) throw SnapshotError("snapshot is truncated");
  if (bytes.substr(0, kMagic.size()) != kMagic) throw SnapshotError("not a snapshot file (bad magic)");
  Reader head(bytes.substr(kMagic.size(), 12));
  const auto version = head.u32();
  if (version != kSnapshotVersion) {
    throw SnapshotError("unsupported snapshot version " + std::to_string(version) + " (expected " +
                        std::to_string(kSnapshotVersion) + ")");
  }
  const auto length = head.u64();
  if (length != bytes.size() - header - 4) throw SnapshotError("snapshot is truncated or has trailing data");
  const std::string_view payload = bytes.substr(header, static_cast<std::size_t>(length));
  Reader crc(bytes.substr(header + payload.size()));
  if (crc.u32() != checksum(payload)) throw SnapshotError("snapshot checksum mismatch");

  try {
    Reader r(payload);
    auto corpus = std::make_shared<Corpus>();
    corpus->vocabulary = read_vocabulary(r);
    corpus->tags = read_vocabulary(r);
    const auto docs = r.length();
    for (std::size_t d = 0; d < docs; ++d) {
      Document doc;
      doc.name = r.str();
      const auto sentences = r.length();
      for (std::size_t s = 0; s < sentences; ++s) doc.sentences.push_back(read_ids<WordId>(r));
      const auto tagged = r.length();
      for (std::size_t s = 0; s < tagged; ++s) doc.gold_tags.push_back(read_ids<TagId>(r));
      corpus->documents.push_back(std::move(doc));
    }

    ModelConfig config;
    config.topics = r.i32();
    config.classes = r.i32();
    config.semantic_classes = r.i32();
    config.semantic_class_ids = read_ids<ClassId>(r);
    config.order = r.i32();
    config.seed = r.u64();
    config.iterations = r.i32();

    Hyperparameters h;
    h.alpha.resize(r.length());
    for (auto& x : h.alpha) x = r.f64();
    h.beta = r.f64();
    h.gamma.resize(r.length());
    for (auto& x : h.gamma) x = r.f64();

    std::vector<std::uint64_t> masks(r.length());
    for (auto& m : masks) m = r.u64();
    const auto mode = r.u8();
    auto classes = read_ids<ClassId>(r);
    auto topics = read_ids<TopicId>(r);
    const int sweeps = r.i32();
    const std::string rng_text = r.str();
    if (!r.done()) throw SnapshotError("snapshot payload has trailing data");

    ModelState state(std::move(corpus), validate_config(config), std::move(h));
    state.set_class_masks(std::move(masks));
    if (mode > 1) throw SnapshotError("unknown transition mode in snapshot");
    state.set_transition_mode(mode == 0 ? TransitionMode::kExact : TransitionMode::kLiteral);
    state.assign(std::move(classes), std::move(topics));
    state.set_completed_sweeps(sweeps);
    std::istringstream rng_in(rng_text);
    rng_in >> state.rng();
    if (!rng_in) throw SnapshotError("corrupt RNG state in snapshot");
    return state;
  } catch (const SnapshotError&) {
    throw;
  } catch (const Error& e) {
    throw SnapshotError(std::string("invalid snapshot contents: ") + e.what());
  }
}

void write_file_atomically(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("failed writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move output into place at '" + path.string() + "'");
  }
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void save_snapshot_file(const ModelState& state, const std::filesystem::path& path) {
  write_file_atomically(path, save_snapshot(state));
}

ModelState load_snapshot_file(const std::filesystem::path& path) { return load_snapshot(read_file_bytes(path)); }

}  // namespace poslda

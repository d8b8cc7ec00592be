#ifndef MODCRF_DATA_HPP
#define MODCRF_DATA_HPP

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "modcrf/labels.hpp"
#include "modcrf/rng.hpp"

// Corpus ingestion and assembly: CoNLL-style token-per-line files, embedding
// tables, vocabularies, fold splitting, and partial-label projection.

namespace modcrf {

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

struct Token {
  std::string surface;
  std::vector<int> characters;  // filled by Vocabulary::index
  int word_id = -1;             // OOV sentinel until indexed
};

enum class Availability { Full, SegOnly, TypeOnly, Unlabeled };

// Labels live in the projection vectors actually annotated. Full sentences
// carry all three views; partial sentences keep only their projection, so a
// read of the absent one trips the accessor checks.
struct AnnotatedSentence {
  std::vector<Token> tokens;
  Availability availability = Availability::Unlabeled;
  std::vector<FullLabel> labels;   // Full only (BIO2)
  std::vector<SegTag> seg_labels;  // Full or SegOnly (BIO2)
  std::vector<int> typ_labels;     // Full or TypeOnly (kNoType at O positions)

  int size() const { return int(tokens.size()); }
  bool has_full() const { return availability == Availability::Full; }
  bool has_seg() const {
    return availability == Availability::Full ||
           availability == Availability::SegOnly;
  }
  bool has_typ() const {
    return availability == Availability::Full ||
           availability == Availability::TypeOnly;
  }
  const std::vector<FullLabel>& full_view() const;
  const std::vector<SegTag>& seg_view() const;
  const std::vector<int>& typ_view() const;
};

AnnotatedSentence make_full_sentence(std::vector<Token> tokens,
                                     std::vector<FullLabel> labels);
AnnotatedSentence make_seg_sentence(std::vector<Token> tokens,
                                    std::vector<SegTag> seg);
AnnotatedSentence make_typ_sentence(std::vector<Token> tokens,
                                    std::vector<int> typ);
AnnotatedSentence make_unlabeled_sentence(std::vector<Token> tokens);

struct Corpus {
  std::vector<AnnotatedSentence> sentences;
  LabelSpace label_space;  // BIO2 space of the on-disk representation
  std::string provenance;

  int size() const { return int(sentences.size()); }
};

// Blank-line separated sentences, token first, label last (when labeled).
// Availability is inferred from the label alphabet: FullLabels -> Full,
// bare {B,I,O} -> SegOnly, types + O -> TypeOnly. An alphabet that parses
// two ways (a type named "B", say) must be disambiguated by `force`.
Corpus read_conll(const std::string& path, const LabelSpace& label_space,
                  std::optional<Availability> force = std::nullopt);
void write_conll(const std::string& path, const Corpus& corpus);

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(int dimension, uint64_t seed);

  int dimension() const { return dimension_; }
  void insert(const std::string& word, std::vector<double> vec);
  bool contains(const std::string& word) const;
  // Absent words get the table's OOV vector, stable across calls.
  const std::vector<double>& lookup(const std::string& word) const;
  const std::vector<double>& oov_vector() const { return oov_; }
  size_t size() const { return vectors_.size(); }

 private:
  int dimension_ = 0;
  std::unordered_map<std::string, std::vector<double>> vectors_;
  std::vector<double> oov_;
};

// One entry per line: word then `dimension` reals, whitespace separated.
EmbeddingTable load_embeddings(const std::string& path, int dimension,
                               uint64_t seed);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kOov = 1;

  // Word ids are case-insensitive; characters keep the original case. When a
  // table is supplied, only in-table words get ids and everything else maps
  // to the OOV id, mirroring pre-trained-embedding lookup.
  static Vocabulary build(const std::vector<const Corpus*>& corpora,
                          const EmbeddingTable* table = nullptr);
  // Reconstruction from serialized word/char lists (checkpoint manifests).
  static Vocabulary from_lists(const std::vector<std::string>& words,
                               const std::string& chars);
  std::string serialize_words() const;  // newline-joined, reserved ids first
  std::string serialize_chars() const;

  int word_id(const std::string& surface) const;
  int char_id(char c) const;
  int num_words() const { return int(words_.size()); }
  int num_chars() const { return int(chars_.size()); }
  const std::vector<std::string>& words() const { return words_; }

  void index(AnnotatedSentence& sentence) const;
  void index(Corpus& corpus) const;

 private:
  std::vector<std::string> words_;  // [0]=<pad>, [1]=<oov>
  std::vector<char> chars_;
  std::map<std::string, int> word_ids_;
  std::map<char, int> char_ids_;
};

struct Fold {
  Corpus train;
  Corpus dev;
  Corpus test;
};

// k partitions; fold i's test is part i, dev is 10% of the remainder,
// train the rest. Deterministic under seed.
std::vector<Fold> split_folds(const Corpus& corpus, int k, uint64_t seed);

enum class PartialKind { Seg, Typ };

// Re-tags `fraction` of a fully labeled corpus with only one projection.
// keep_rest keeps the unselected sentences as Full; otherwise drops them.
Corpus project_partial(const Corpus& corpus, PartialKind keep, double fraction,
                       uint64_t seed, bool keep_rest = false);

}  // namespace modcrf

#endif  // MODCRF_DATA_HPP

#include "modcrf/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace modcrf {

namespace {

std::string lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return char(std::tolower(c)); });
  return out;
}

}  // namespace

const std::vector<FullLabel>& AnnotatedSentence::full_view() const {
  if (!has_full())
    throw UsageError("full labels requested from a non-Full sentence");
  return labels;
}

const std::vector<SegTag>& AnnotatedSentence::seg_view() const {
  if (!has_seg())
    throw UsageError("seg labels requested from a sentence without them");
  return seg_labels;
}

const std::vector<int>& AnnotatedSentence::typ_view() const {
  if (!has_typ())
    throw UsageError("type labels requested from a sentence without them");
  return typ_labels;
}

AnnotatedSentence make_full_sentence(std::vector<Token> tokens,
                                     std::vector<FullLabel> labels) {
  if (tokens.size() != labels.size())
    throw UsageError("label count != token count");
  AnnotatedSentence s;
  s.tokens = std::move(tokens);
  s.availability = Availability::Full;
  s.labels = std::move(labels);
  s.seg_labels.reserve(s.labels.size());
  s.typ_labels.reserve(s.labels.size());
  for (const auto& y : s.labels) {
    auto [seg, typ] = decompose(y);
    s.seg_labels.push_back(seg);
    s.typ_labels.push_back(typ);
  }
  return s;
}

AnnotatedSentence make_seg_sentence(std::vector<Token> tokens,
                                    std::vector<SegTag> seg) {
  if (tokens.size() != seg.size())
    throw UsageError("label count != token count");
  AnnotatedSentence s;
  s.tokens = std::move(tokens);
  s.availability = Availability::SegOnly;
  s.seg_labels = std::move(seg);
  return s;
}

AnnotatedSentence make_typ_sentence(std::vector<Token> tokens,
                                    std::vector<int> typ) {
  if (tokens.size() != typ.size())
    throw UsageError("label count != token count");
  AnnotatedSentence s;
  s.tokens = std::move(tokens);
  s.availability = Availability::TypeOnly;
  s.typ_labels = std::move(typ);
  return s;
}

AnnotatedSentence make_unlabeled_sentence(std::vector<Token> tokens) {
  AnnotatedSentence s;
  s.tokens = std::move(tokens);
  s.availability = Availability::Unlabeled;
  return s;
}

// ---- CoNLL reader ----------------------------------------------------------

namespace {

struct RawSentence {
  std::vector<std::string> surfaces;
  std::vector<std::string> label_texts;  // empty if no label column
  int first_line = 0;
};

std::vector<RawSentence> read_raw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::vector<RawSentence> raw;
  RawSentence current;
  std::string line;
  int line_no = 0;
  int columns = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::vector<std::string> fields;
    std::string field;
    while (ss >> field) fields.push_back(field);
    if (fields.empty()) {
      if (!current.surfaces.empty()) {
        raw.push_back(std::move(current));
        current = RawSentence{};
      }
      continue;
    }
    if (current.surfaces.empty()) current.first_line = line_no;
    if (columns == -1) columns = int(fields.size());
    if (int(fields.size()) != columns) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected " + std::to_string(columns) +
                       " columns, got " + std::to_string(fields.size()));
    }
    current.surfaces.push_back(fields.front());
    if (columns >= 2) current.label_texts.push_back(fields.back());
  }
  if (!current.surfaces.empty()) raw.push_back(std::move(current));
  return raw;
}

std::vector<Token> make_tokens(const std::vector<std::string>& surfaces) {
  std::vector<Token> tokens;
  tokens.reserve(surfaces.size());
  for (const auto& s : surfaces) tokens.push_back(Token{s, {}, -1});
  return tokens;
}

}  // namespace

Corpus read_conll(const std::string& path, const LabelSpace& label_space,
                  std::optional<Availability> force) {
  auto raw = read_raw(path);

  // Alphabet inference over the whole file.
  bool any_labels = false;
  bool all_full = true, all_seg = true, all_typ = true;
  for (const auto& rs : raw) {
    for (const auto& text : rs.label_texts) {
      any_labels = true;
      if (!label_space.try_parse(text)) all_full = false;
      auto seg = text.size() == 1 ? seg_from_char(text[0]) : std::nullopt;
      if (!(seg && seg_in_scheme(*seg, Scheme::BIO2))) all_seg = false;
      if (!(text == "O" || label_space.type_index_of(text))) all_typ = false;
    }
  }

  Availability availability = Availability::Unlabeled;
  if (any_labels) {
    if (force) {
      availability = *force;
    } else {
      // "O" alone is ambiguous between all three readings; prefer Full.
      const int readings = int(all_full) + int(all_seg) + int(all_typ);
      if (readings == 0)
        throw ParseError(path + ": labels fit no known alphabet");
      if (all_full)
        availability = Availability::Full;
      else if (all_seg && !all_typ)
        availability = Availability::SegOnly;
      else if (all_typ && !all_seg)
        availability = Availability::TypeOnly;
      else
        throw ParseError(path +
                         ": label alphabet is ambiguous; pass an explicit "
                         "availability override");
    }
  }

  Corpus corpus;
  corpus.label_space = label_space;
  corpus.provenance = path;
  for (const auto& rs : raw) {
    auto tokens = make_tokens(rs.surfaces);
    if (!any_labels || availability == Availability::Unlabeled) {
      corpus.sentences.push_back(make_unlabeled_sentence(std::move(tokens)));
      continue;
    }
    if (rs.label_texts.size() != rs.surfaces.size())
      throw ParseError(path + ":" + std::to_string(rs.first_line) +
                       ": sentence mixes labeled and unlabeled lines");
    switch (availability) {
      case Availability::Full: {
        std::vector<FullLabel> labels;
        for (size_t i = 0; i < rs.label_texts.size(); ++i) {
          auto y = label_space.try_parse(rs.label_texts[i]);
          if (!y)
            throw ParseError(path + ":" +
                             std::to_string(rs.first_line + int(i)) +
                             ": bad label '" + rs.label_texts[i] + "'");
          labels.push_back(*y);
        }
        auto violations = validate_sequence(labels, Scheme::BIO2);
        if (!violations.empty())
          throw ParseError(path + ": sentence at line " +
                           std::to_string(rs.first_line) +
                           " invalid BIO2 at offset " +
                           std::to_string(violations.front().position) + ": " +
                           violations.front().message);
        corpus.sentences.push_back(
            make_full_sentence(std::move(tokens), std::move(labels)));
        break;
      }
      case Availability::SegOnly: {
        std::vector<SegTag> seg;
        for (size_t i = 0; i < rs.label_texts.size(); ++i) {
          auto s = rs.label_texts[i].size() == 1
                       ? seg_from_char(rs.label_texts[i][0])
                       : std::nullopt;
          if (!s || !seg_in_scheme(*s, Scheme::BIO2))
            throw ParseError(path + ":" +
                             std::to_string(rs.first_line + int(i)) +
                             ": bad seg label '" + rs.label_texts[i] + "'");
          seg.push_back(*s);
        }
        auto violations = validate_seg_sequence(seg, Scheme::BIO2);
        if (!violations.empty())
          throw ParseError(path + ": seg sequence at line " +
                           std::to_string(rs.first_line) + " invalid BIO2");
        corpus.sentences.push_back(
            make_seg_sentence(std::move(tokens), std::move(seg)));
        break;
      }
      case Availability::TypeOnly: {
        std::vector<int> typ;
        for (size_t i = 0; i < rs.label_texts.size(); ++i) {
          const auto& text = rs.label_texts[i];
          if (text == "O") {
            typ.push_back(kNoType);
          } else if (auto t = label_space.type_index_of(text)) {
            typ.push_back(*t);
          } else {
            throw ParseError(path + ":" +
                             std::to_string(rs.first_line + int(i)) +
                             ": bad type label '" + text + "'");
          }
        }
        corpus.sentences.push_back(
            make_typ_sentence(std::move(tokens), std::move(typ)));
        break;
      }
      case Availability::Unlabeled:
        corpus.sentences.push_back(make_unlabeled_sentence(std::move(tokens)));
        break;
    }
  }
  return corpus;
}

void write_conll(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  const LabelSpace& space = corpus.label_space;
  for (const auto& s : corpus.sentences) {
    for (int t = 0; t < s.size(); ++t) {
      out << s.tokens[t].surface;
      switch (s.availability) {
        case Availability::Full:
          out << ' ' << space.render(s.labels[t]);
          break;
        case Availability::SegOnly:
          out << ' ' << seg_char(s.seg_labels[t]);
          break;
        case Availability::TypeOnly:
          out << ' ' << space.render_typ(s.typ_labels[t]);
          break;
        case Availability::Unlabeled:
          break;
      }
      out << '\n';
    }
    out << '\n';
  }
}

// ---- embeddings --------------------------------------------------------------

EmbeddingTable::EmbeddingTable(int dimension, uint64_t seed)
    : dimension_(dimension) {
  Rng rng = Rng::derive(seed, "embedding-oov");
  const double bound = std::sqrt(3.0 / dimension);
  oov_.reserve(size_t(dimension));
  for (int i = 0; i < dimension; ++i) oov_.push_back(rng.uniform(-bound, bound));
}

void EmbeddingTable::insert(const std::string& word, std::vector<double> vec) {
  if (int(vec.size()) != dimension_)
    throw DimensionError("embedding vector length != table dimension");
  vectors_[word] = std::move(vec);
}

bool EmbeddingTable::contains(const std::string& word) const {
  return vectors_.count(word) > 0;
}

const std::vector<double>& EmbeddingTable::lookup(
    const std::string& word) const {
  auto it = vectors_.find(word);
  return it == vectors_.end() ? oov_ : it->second;
}

EmbeddingTable load_embeddings(const std::string& path, int dimension,
                               uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  EmbeddingTable table(dimension, seed);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    std::vector<double> vec;
    double v;
    while (ss >> v) vec.push_back(v);
    if (int(vec.size()) != dimension) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(dimension) + " values, got " +
                       std::to_string(vec.size()));
    }
    table.insert(word, std::move(vec));
  }
  return table;
}

// ---- vocabulary --------------------------------------------------------------

Vocabulary Vocabulary::build(const std::vector<const Corpus*>& corpora,
                             const EmbeddingTable* table) {
  Vocabulary vocab;
  vocab.words_ = {"<pad>", "<oov>"};
  vocab.chars_ = {'\0', '\1'};  // pad, oov
  std::set<std::string> word_set;
  std::set<char> char_set;
  for (const Corpus* corpus : corpora) {
    for (const auto& s : corpus->sentences) {
      for (const auto& tok : s.tokens) {
        word_set.insert(lower(tok.surface));
        for (char c : tok.surface) char_set.insert(c);
      }
    }
  }
  for (const auto& w : word_set) {
    if (table && !table->contains(w)) continue;  // collapses to OOV
    vocab.word_ids_[w] = int(vocab.words_.size());
    vocab.words_.push_back(w);
  }
  for (char c : char_set) {
    vocab.char_ids_[c] = int(vocab.chars_.size());
    vocab.chars_.push_back(c);
  }
  return vocab;
}

Vocabulary Vocabulary::from_lists(const std::vector<std::string>& words,
                                  const std::string& chars) {
  if (words.size() < 2 || words[0] != "<pad>" || words[1] != "<oov>")
    throw UsageError("vocabulary word list is missing reserved entries");
  if (chars.size() < 2)
    throw UsageError("vocabulary char list is missing reserved entries");
  Vocabulary vocab;
  vocab.words_ = words;
  for (size_t i = 2; i < words.size(); ++i)
    vocab.word_ids_[words[i]] = int(i);
  vocab.chars_.assign(chars.begin(), chars.end());
  for (size_t i = 2; i < vocab.chars_.size(); ++i)
    vocab.char_ids_[vocab.chars_[i]] = int(i);
  return vocab;
}

std::string Vocabulary::serialize_words() const {
  std::string out;
  for (size_t i = 0; i < words_.size(); ++i) {
    if (i) out += '\n';
    out += words_[i];
  }
  return out;
}

std::string Vocabulary::serialize_chars() const {
  return std::string(chars_.begin(), chars_.end());
}

int Vocabulary::word_id(const std::string& surface) const {
  auto it = word_ids_.find(lower(surface));
  return it == word_ids_.end() ? kOov : it->second;
}

int Vocabulary::char_id(char c) const {
  auto it = char_ids_.find(c);
  return it == char_ids_.end() ? kOov : it->second;
}

void Vocabulary::index(AnnotatedSentence& sentence) const {
  for (auto& tok : sentence.tokens) {
    tok.word_id = word_id(tok.surface);
    tok.characters.clear();
    for (char c : tok.surface) tok.characters.push_back(char_id(c));
    if (tok.characters.empty()) tok.characters.push_back(kPad);
  }
}

void Vocabulary::index(Corpus& corpus) const {
  for (auto& s : corpus.sentences) index(s);
}

// ---- splitting ---------------------------------------------------------------

std::vector<Fold> split_folds(const Corpus& corpus, int k, uint64_t seed) {
  if (k < 2) throw UsageError("split_folds: k must be >= 2");
  if (corpus.size() < k)
    throw UsageError("split_folds: corpus smaller than fold count");

  std::vector<int> order(size_t(corpus.size()));
  for (int i = 0; i < corpus.size(); ++i) order[size_t(i)] = i;
  Rng rng = Rng::derive(seed, "fold-split");
  rng.shuffle(order);

  // Parts differ by at most one sentence.
  std::vector<std::vector<int>> parts(static_cast<size_t>(k));
  for (int i = 0; i < corpus.size(); ++i)
    parts[size_t(i % k)].push_back(order[size_t(i)]);

  std::vector<Fold> folds;
  for (int f = 0; f < k; ++f) {
    Fold fold;
    fold.train.label_space = fold.dev.label_space = fold.test.label_space =
        corpus.label_space;
    fold.train.provenance = corpus.provenance + "#train" + std::to_string(f);
    fold.dev.provenance = corpus.provenance + "#dev" + std::to_string(f);
    fold.test.provenance = corpus.provenance + "#test" + std::to_string(f);
    for (int idx : parts[size_t(f)])
      fold.test.sentences.push_back(corpus.sentences[size_t(idx)]);
    std::vector<int> rest;
    for (int g = 0; g < k; ++g) {
      if (g == f) continue;
      rest.insert(rest.end(), parts[size_t(g)].begin(), parts[size_t(g)].end());
    }
    const int dev_count = int(rest.size()) / 10;
    for (size_t i = 0; i < rest.size(); ++i) {
      auto& target = (int(i) < dev_count) ? fold.dev : fold.train;
      target.sentences.push_back(corpus.sentences[size_t(rest[i])]);
    }
    folds.push_back(std::move(fold));
  }
  return folds;
}

Corpus project_partial(const Corpus& corpus, PartialKind keep, double fraction,
                       uint64_t seed, bool keep_rest) {
  if (fraction < 0.0 || fraction > 1.0)
    throw UsageError("project_partial: fraction out of [0, 1]");
  for (const auto& s : corpus.sentences) {
    if (s.availability != Availability::Full)
      throw UsageError("project_partial: corpus must be fully labeled");
  }
  std::vector<int> order(size_t(corpus.size()));
  for (int i = 0; i < corpus.size(); ++i) order[size_t(i)] = i;
  Rng rng = Rng::derive(seed, "partial-projection");
  rng.shuffle(order);
  const int selected = int(std::lround(fraction * corpus.size()));

  std::vector<char> is_selected(size_t(corpus.size()), 0);
  for (int i = 0; i < selected; ++i) is_selected[size_t(order[size_t(i)])] = 1;

  Corpus out;
  out.label_space = corpus.label_space;
  out.provenance = corpus.provenance + "#partial";
  for (int i = 0; i < corpus.size(); ++i) {
    const auto& s = corpus.sentences[size_t(i)];
    if (is_selected[size_t(i)]) {
      if (keep == PartialKind::Seg) {
        out.sentences.push_back(make_seg_sentence(s.tokens, s.seg_labels));
      } else {
        out.sentences.push_back(make_typ_sentence(s.tokens, s.typ_labels));
      }
    } else if (keep_rest) {
      out.sentences.push_back(s);
    }
  }
  return out;
}

}  // namespace modcrf

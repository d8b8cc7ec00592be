#ifndef MODCRF_LABELS_HPP
#define MODCRF_LABELS_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "modcrf/tensor.hpp"  // error types

// Composite tags and their decomposition into segmentation and type partial
// labels, BIO2 <-> BIOES scheme conversion, and the dense label space the
// heads predict over. Rendering follows CoNLL conventions: "O" or "SEG-TYPE".

namespace modcrf {

enum class Scheme { BIO2, BIOES };

enum class SegTag : uint8_t { O = 0, B, I, E, S };

constexpr int kNoType = -1;  // type id of the O label

struct FullLabel {
  SegTag seg = SegTag::O;
  int typ = kNoType;  // index into LabelSpace::types, kNoType iff seg == O

  bool is_o() const { return seg == SegTag::O; }
  bool operator==(const FullLabel&) const = default;
};

char seg_char(SegTag s);
std::optional<SegTag> seg_from_char(char c);
bool seg_in_scheme(SegTag s, Scheme scheme);

struct Violation {
  int position;
  std::string message;
};

class LabelSpace {
 public:
  LabelSpace() = default;
  // Types must be nonempty and duplicate-free (config error otherwise).
  static LabelSpace build(Scheme scheme, std::vector<std::string> types);

  Scheme scheme() const { return scheme_; }
  const std::vector<std::string>& types() const { return types_; }

  // Full labels: index 0 is O, then seg-major x type-minor enumeration.
  int num_full() const { return int(full_.size()); }
  const std::vector<FullLabel>& full() const { return full_; }
  int full_index(const FullLabel& y) const;
  FullLabel full_at(int index) const { return full_.at(index); }

  // Seg labels: scheme alphabet with O first (BIO2: O,B,I; BIOES: O,B,I,E,S).
  int num_seg() const { return scheme_ == Scheme::BIO2 ? 3 : 5; }
  int seg_index(SegTag s) const;
  SegTag seg_at(int index) const;

  // Type labels over types + O; O is index |types|.
  int num_typ() const { return int(types_.size()) + 1; }
  int typ_index(int typ) const { return typ == kNoType ? int(types_.size()) : typ; }
  int typ_at(int index) const {
    return index == int(types_.size()) ? kNoType : index;
  }

  std::string render(const FullLabel& y) const;
  std::string render_seg(SegTag s) const;
  std::string render_typ(int typ) const;
  // Parse error on unknown label strings.
  FullLabel parse(const std::string& text) const;
  std::optional<FullLabel> try_parse(const std::string& text) const;
  std::optional<int> type_index_of(const std::string& name) const;

 private:
  Scheme scheme_ = Scheme::BIOES;
  std::vector<std::string> types_;
  std::vector<FullLabel> full_;
  std::map<std::string, int> full_by_text_;
};

// y -> (y_seg, y_typ); O maps to (O, O).
std::pair<SegTag, int> decompose(const FullLabel& y);
// Consistency error on mixed O/non-O pairs; inverse of decompose.
FullLabel compose(SegTag seg, int typ);

// Valid BIO2 in, equivalent BIOES out (validation error otherwise):
// singleton spans become S-, span-final I becomes E-.
std::vector<FullLabel> bio2_to_bioes(const std::vector<FullLabel>& seq);
// Total on the BIOES alphabet: S -> B, E -> I. Inverse of bio2_to_bioes on
// well-formed input; ill-formed model output is mapped without repair.
std::vector<FullLabel> bioes_to_bio2(const std::vector<FullLabel>& seq);

// Same conversions on bare segmentation tags (for seg-only supervision).
std::vector<SegTag> seg_bio2_to_bioes(const std::vector<SegTag>& seq);
std::vector<SegTag> seg_bioes_to_bio2(const std::vector<SegTag>& seq);

// Empty iff seq is well-formed in scheme. BIO2: I must continue a same-type
// span; BIOES: B..E bracketing with type-consistent interiors, S singleton.
std::vector<Violation> validate_sequence(const std::vector<FullLabel>& seq,
                                         Scheme scheme);
std::vector<Violation> validate_seg_sequence(const std::vector<SegTag>& seq,
                                             Scheme scheme);

}  // namespace modcrf

#endif  // MODCRF_LABELS_HPP

#include "modcrf/labels.hpp"

#include <algorithm>
#include <set>

namespace modcrf {

char seg_char(SegTag s) {
  switch (s) {
    case SegTag::O: return 'O';
    case SegTag::B: return 'B';
    case SegTag::I: return 'I';
    case SegTag::E: return 'E';
    case SegTag::S: return 'S';
  }
  return '?';
}

std::optional<SegTag> seg_from_char(char c) {
  switch (c) {
    case 'O': return SegTag::O;
    case 'B': return SegTag::B;
    case 'I': return SegTag::I;
    case 'E': return SegTag::E;
    case 'S': return SegTag::S;
    default: return std::nullopt;
  }
}

bool seg_in_scheme(SegTag s, Scheme scheme) {
  if (scheme == Scheme::BIOES) return true;
  return s == SegTag::O || s == SegTag::B || s == SegTag::I;
}

namespace {

const std::vector<SegTag>& scheme_span_tags(Scheme scheme) {
  static const std::vector<SegTag> bio2 = {SegTag::B, SegTag::I};
  static const std::vector<SegTag> bioes = {SegTag::B, SegTag::I, SegTag::E,
                                            SegTag::S};
  return scheme == Scheme::BIO2 ? bio2 : bioes;
}

}  // namespace

LabelSpace LabelSpace::build(Scheme scheme, std::vector<std::string> types) {
  if (types.empty()) throw UsageError("label space: empty type alphabet");
  std::set<std::string> seen;
  for (const auto& t : types) {
    if (t.empty() || t == "O")
      throw UsageError("label space: invalid type name '" + t + "'");
    if (!seen.insert(t).second)
      throw UsageError("label space: duplicate type '" + t + "'");
  }
  LabelSpace space;
  space.scheme_ = scheme;
  space.types_ = std::move(types);
  space.full_.push_back(FullLabel{SegTag::O, kNoType});
  for (SegTag s : scheme_span_tags(scheme)) {
    for (int t = 0; t < int(space.types_.size()); ++t) {
      space.full_.push_back(FullLabel{s, t});
    }
  }
  for (int i = 0; i < int(space.full_.size()); ++i) {
    space.full_by_text_[space.render(space.full_[i])] = i;
  }
  return space;
}

int LabelSpace::full_index(const FullLabel& y) const {
  auto it = full_by_text_.find(render(y));
  if (it == full_by_text_.end())
    throw UsageError("label not in space: " + render(y));
  return it->second;
}

int LabelSpace::seg_index(SegTag s) const {
  if (!seg_in_scheme(s, scheme_))
    throw UsageError(std::string("seg tag ") + seg_char(s) +
                     " not in active scheme");
  switch (s) {
    case SegTag::O: return 0;
    case SegTag::B: return 1;
    case SegTag::I: return 2;
    case SegTag::E: return 3;
    case SegTag::S: return 4;
  }
  return -1;
}

SegTag LabelSpace::seg_at(int index) const {
  static const SegTag order[5] = {SegTag::O, SegTag::B, SegTag::I, SegTag::E,
                                  SegTag::S};
  if (index < 0 || index >= num_seg())
    throw UsageError("seg index out of range: " + std::to_string(index));
  return order[index];
}

std::string LabelSpace::render(const FullLabel& y) const {
  if (y.is_o()) return "O";
  return std::string(1, seg_char(y.seg)) + "-" + types_.at(size_t(y.typ));
}

std::string LabelSpace::render_seg(SegTag s) const {
  return std::string(1, seg_char(s));
}

std::string LabelSpace::render_typ(int typ) const {
  return typ == kNoType ? "O" : types_.at(size_t(typ));
}

std::optional<FullLabel> LabelSpace::try_parse(const std::string& text) const {
  if (text == "O") return FullLabel{SegTag::O, kNoType};
  if (text.size() < 3 || text[1] != '-') return std::nullopt;
  auto seg = seg_from_char(text[0]);
  if (!seg || *seg == SegTag::O || !seg_in_scheme(*seg, scheme_))
    return std::nullopt;
  auto typ = type_index_of(text.substr(2));
  if (!typ) return std::nullopt;
  return FullLabel{*seg, *typ};
}

FullLabel LabelSpace::parse(const std::string& text) const {
  auto y = try_parse(text);
  if (!y) throw UsageError("cannot parse label '" + text + "'");
  return *y;
}

std::optional<int> LabelSpace::type_index_of(const std::string& name) const {
  auto it = std::find(types_.begin(), types_.end(), name);
  if (it == types_.end()) return std::nullopt;
  return int(it - types_.begin());
}

std::pair<SegTag, int> decompose(const FullLabel& y) {
  return {y.seg, y.typ};
}

FullLabel compose(SegTag seg, int typ) {
  if ((seg == SegTag::O) != (typ == kNoType)) {
    throw UsageError("compose: mixed O/non-O pair");
  }
  return FullLabel{seg, typ};
}

std::vector<FullLabel> bio2_to_bioes(const std::vector<FullLabel>& seq) {
  auto violations = validate_sequence(seq, Scheme::BIO2);
  if (!violations.empty()) {
    throw UsageError("bio2_to_bioes: invalid BIO2 at position " +
                     std::to_string(violations.front().position) + ": " +
                     violations.front().message);
  }
  const int n = int(seq.size());
  std::vector<FullLabel> out(seq);
  for (int t = 0; t < n; ++t) {
    if (seq[t].seg == SegTag::B) {
      const bool last_of_span =
          t + 1 >= n || seq[t + 1].seg != SegTag::I;
      if (last_of_span) out[t].seg = SegTag::S;
    } else if (seq[t].seg == SegTag::I) {
      const bool last_of_span =
          t + 1 >= n || seq[t + 1].seg != SegTag::I;
      if (last_of_span) out[t].seg = SegTag::E;
    }
  }
  return out;
}

std::vector<FullLabel> bioes_to_bio2(const std::vector<FullLabel>& seq) {
  std::vector<FullLabel> out(seq);
  for (auto& y : out) {
    if (y.seg == SegTag::S) y.seg = SegTag::B;
    else if (y.seg == SegTag::E) y.seg = SegTag::I;
  }
  return out;
}

std::vector<SegTag> seg_bio2_to_bioes(const std::vector<SegTag>& seq) {
  const int n = int(seq.size());
  std::vector<SegTag> out(seq);
  for (int t = 0; t < n; ++t) {
    if (seq[t] == SegTag::B) {
      if (t + 1 >= n || seq[t + 1] != SegTag::I) out[t] = SegTag::S;
    } else if (seq[t] == SegTag::I) {
      if (t + 1 >= n || seq[t + 1] != SegTag::I) out[t] = SegTag::E;
    }
  }
  return out;
}

std::vector<SegTag> seg_bioes_to_bio2(const std::vector<SegTag>& seq) {
  std::vector<SegTag> out(seq);
  for (auto& s : out) {
    if (s == SegTag::S) s = SegTag::B;
    else if (s == SegTag::E) s = SegTag::I;
  }
  return out;
}

std::vector<Violation> validate_sequence(const std::vector<FullLabel>& seq,
                                         Scheme scheme) {
  std::vector<Violation> violations;
  auto bad = [&](int pos, std::string msg) {
    violations.push_back(Violation{pos, std::move(msg)});
  };
  const int n = int(seq.size());
  for (int t = 0; t < n; ++t) {
    const FullLabel& y = seq[t];
    if ((y.seg == SegTag::O) != (y.typ == kNoType)) {
      bad(t, "O segmentation requires O type and vice versa");
      continue;
    }
    if (!seg_in_scheme(y.seg, scheme)) {
      bad(t, std::string("tag ") + seg_char(y.seg) + " outside scheme");
      continue;
    }
  }
  if (!violations.empty()) return violations;

  if (scheme == Scheme::BIO2) {
    for (int t = 0; t < n; ++t) {
      if (seq[t].seg != SegTag::I) continue;
      const bool continues =
          t > 0 &&
          (seq[t - 1].seg == SegTag::B || seq[t - 1].seg == SegTag::I) &&
          seq[t - 1].typ == seq[t].typ;
      if (!continues) bad(t, "I does not continue a same-type span");
    }
  } else {
    // BIOES: B (I* E) bracketing, S singleton, type-consistent interiors.
    int t = 0;
    while (t < n) {
      const FullLabel& y = seq[t];
      switch (y.seg) {
        case SegTag::O:
        case SegTag::S:
          ++t;
          break;
        case SegTag::B: {
          int u = t + 1;
          while (u < n && seq[u].seg == SegTag::I) {
            if (seq[u].typ != y.typ) bad(u, "type mismatch inside span");
            ++u;
          }
          if (u >= n || seq[u].seg != SegTag::E) {
            bad(t, "B without matching E");
            t = u;
          } else {
            if (seq[u].typ != y.typ) bad(u, "type mismatch at span end");
            t = u + 1;
          }
          break;
        }
        case SegTag::I:
          bad(t, "I outside B..E bracket");
          ++t;
          break;
        case SegTag::E:
          bad(t, "E without opening B");
          ++t;
          break;
      }
    }
  }
  return violations;
}

std::vector<Violation> validate_seg_sequence(const std::vector<SegTag>& seq,
                                             Scheme scheme) {
  std::vector<FullLabel> full;
  full.reserve(seq.size());
  for (SegTag s : seq) {
    full.push_back(s == SegTag::O ? FullLabel{SegTag::O, kNoType}
                                  : FullLabel{s, 0});
  }
  return validate_sequence(full, scheme);
}

}  // namespace modcrf

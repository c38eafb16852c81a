#include "timesplit/smiles.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <memory>
#include <set>
#include <unordered_set>

#include "timesplit/error.hpp"

namespace timesplit {

namespace {

const std::set<std::string>& known_elements() {
  static const std::set<std::string> table = {
      "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg", "Al", "Si", "P",
      "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn",
      "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh",
      "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd",
      "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W",  "Re",
      "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th",
      "Pa", "U",  "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr"};
  return table;
}

bool is_organic_subset(const std::string& element) {
  static const std::set<std::string> organic = {"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"};
  return organic.count(element) > 0;
}

bool aromatic_capable(const std::string& element) {
  static const std::set<std::string> ok = {"B", "C", "N", "O", "P", "S", "Se", "As"};
  return ok.count(element) > 0;
}

// Standard valence lists used to fill implicit hydrogens.
const std::vector<int>& default_valences(const std::string& element) {
  static const std::map<std::string, std::vector<int>> table = {
      {"B", {3}},       {"C", {4}},       {"N", {3, 5}}, {"O", {2}},  {"P", {3, 5}},
      {"S", {2, 4, 6}}, {"F", {1}},       {"Cl", {1}},   {"Br", {1}}, {"I", {1}}};
  static const std::vector<int> none;
  auto it = table.find(element);
  return it == table.end() ? none : it->second;
}

struct RingOpening {
  int atom = -1;
  std::optional<BondOrder> order;
  std::size_t offset = 0;  // where the digit appeared, for error messages
};

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Molecule run() {
    if (text_.empty()) throw ParseError("empty SMILES", 0);
    while (pos_ < text_.size()) step();
    if (!branch_stack_.empty()) {
      throw ParseError("unclosed branch", text_.size());
    }
    if (pending_bond_) throw ParseError("dangling bond symbol", text_.size());
    if (!open_rings_.empty()) {
      throw ParseError("unclosed ring bond " + std::to_string(open_rings_.begin()->first),
                       text_.size());
    }
    finalize();
    return std::move(mol_);
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  Molecule mol_;
  int prev_atom_ = -1;
  std::optional<BondOrder> pending_bond_;
  std::vector<int> branch_stack_;
  std::map<int, RingOpening> open_rings_;
  std::set<std::pair<int, int>> bond_set_;

  [[noreturn]] void fail(const std::string& what, std::size_t at) const {
    throw ParseError(what, at);
  }

  char peek() const { return text_[pos_]; }
  bool done() const { return pos_ >= text_.size(); }

  void step() {
    const char c = peek();
    switch (c) {
      case '-': case '=': case '#': case ':': case '/': case '\\':
        if (pending_bond_) fail("two bond symbols in a row", pos_);
        if (prev_atom_ < 0) fail("bond symbol before any atom", pos_);
        pending_bond_ = bond_from_symbol(c);
        ++pos_;
        break;
      case '(':
        if (prev_atom_ < 0) fail("branch before any atom", pos_);
        if (pending_bond_) fail("bond symbol before branch open", pos_);
        branch_stack_.push_back(prev_atom_);
        ++pos_;
        break;
      case ')':
        if (branch_stack_.empty()) fail("unmatched ')'", pos_);
        if (pending_bond_) fail("dangling bond symbol before ')'", pos_);
        prev_atom_ = branch_stack_.back();
        branch_stack_.pop_back();
        ++pos_;
        break;
      case '.':
        if (pending_bond_) fail("bond symbol before '.'", pos_);
        if (!branch_stack_.empty()) fail("'.' inside a branch", pos_);
        prev_atom_ = -1;
        ++pos_;
        break;
      case '%': {
        if (pos_ + 2 >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) ||
            !std::isdigit(static_cast<unsigned char>(text_[pos_ + 2]))) {
          fail("'%' ring closure needs two digits", pos_);
        }
        const int number = (text_[pos_ + 1] - '0') * 10 + (text_[pos_ + 2] - '0');
        ring_closure(number, pos_);
        pos_ += 3;
        break;
      }
      case '[':
        add_atom(parse_bracket_atom());
        break;
      default:
        if (std::isdigit(static_cast<unsigned char>(c))) {
          ring_closure(c - '0', pos_);
          ++pos_;
          break;
        }
        add_atom(parse_organic_atom());
        break;
    }
  }

  static BondOrder bond_from_symbol(char c) {
    switch (c) {
      case '=': return BondOrder::double_bond;
      case '#': return BondOrder::triple;
      case ':': return BondOrder::aromatic;
      default: return BondOrder::single;  // '-', '/', '\\' (stereo discarded)
    }
  }

  Atom parse_organic_atom() {
    const std::size_t at = pos_;
    Atom atom;
    const char c = text_[pos_];
    if (c == 'C' && pos_ + 1 < text_.size() && text_[pos_ + 1] == 'l') {
      atom.element = "Cl";
      pos_ += 2;
    } else if (c == 'B' && pos_ + 1 < text_.size() && text_[pos_ + 1] == 'r') {
      atom.element = "Br";
      pos_ += 2;
    } else if (c == 'B' || c == 'C' || c == 'N' || c == 'O' || c == 'P' || c == 'S' || c == 'F' ||
               c == 'I') {
      atom.element = std::string(1, c);
      ++pos_;
    } else if (c == 'b' || c == 'c' || c == 'n' || c == 'o' || c == 'p' || c == 's') {
      atom.element = std::string(1, static_cast<char>(std::toupper(c)));
      atom.aromatic = true;
      ++pos_;
    } else {
      fail(std::string("unexpected character '") + c + "'", at);
    }
    return atom;
  }

  Atom parse_bracket_atom() {
    const std::size_t open_at = pos_;
    ++pos_;  // '['
    Atom atom;

    // isotope
    std::size_t digits = 0;
    int isotope = 0;
    while (!done() && std::isdigit(static_cast<unsigned char>(peek()))) {
      isotope = isotope * 10 + (peek() - '0');
      ++digits;
      ++pos_;
    }
    if (digits > 0) atom.isotope = isotope;

    // element symbol, possibly lowercase aromatic
    if (done()) fail("unterminated bracket atom", open_at);
    char first = peek();
    if (std::islower(static_cast<unsigned char>(first))) {
      atom.aromatic = true;
      std::string sym(1, static_cast<char>(std::toupper(first)));
      ++pos_;
      // two-letter aromatic symbols (se, as)
      if (!done() && std::islower(static_cast<unsigned char>(peek()))) {
        std::string two = sym + std::string(1, peek());
        if (aromatic_capable(two) && known_elements().count(two)) {
          sym = two;
          ++pos_;
        }
      }
      if (!aromatic_capable(sym)) fail("element '" + sym + "' cannot be aromatic", open_at + 1);
      atom.element = sym;
    } else if (std::isupper(static_cast<unsigned char>(first))) {
      std::string sym(1, first);
      ++pos_;
      if (!done() && std::islower(static_cast<unsigned char>(peek()))) {
        std::string two = sym + std::string(1, peek());
        if (known_elements().count(two)) {
          sym = two;
          ++pos_;
        }
      }
      atom.element = sym;
    } else {
      fail("malformed bracket atom", pos_);
    }
    if (!known_elements().count(atom.element)) {
      fail("unknown element '" + atom.element + "'", open_at + 1);
    }

    // chirality, parsed and discarded
    if (!done() && peek() == '@') {
      ++pos_;
      if (!done() && peek() == '@') {
        ++pos_;
      } else if (pos_ + 1 < text_.size() && std::isupper(static_cast<unsigned char>(peek())) &&
                 std::isupper(static_cast<unsigned char>(text_[pos_ + 1]))) {
        pos_ += 2;  // class tag such as TH / AL / SP / TB / OH
        while (!done() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
      }
    }

    // explicit hydrogen count
    if (!done() && peek() == 'H') {
      ++pos_;
      int count = 1;
      if (!done() && std::isdigit(static_cast<unsigned char>(peek()))) {
        count = 0;
        while (!done() && std::isdigit(static_cast<unsigned char>(peek()))) {
          count = count * 10 + (peek() - '0');
          ++pos_;
        }
      }
      atom.explicit_h = count;
    } else {
      atom.explicit_h = 0;  // bracket atoms carry no implicit hydrogens
    }

    // charge
    if (!done() && (peek() == '+' || peek() == '-')) {
      const char sign_char = peek();
      const int sign = sign_char == '+' ? 1 : -1;
      int magnitude = 0;
      while (!done() && peek() == sign_char) {
        ++magnitude;
        ++pos_;
      }
      if (magnitude == 1 && !done() && std::isdigit(static_cast<unsigned char>(peek()))) {
        magnitude = 0;
        while (!done() && std::isdigit(static_cast<unsigned char>(peek()))) {
          magnitude = magnitude * 10 + (peek() - '0');
          ++pos_;
        }
      }
      atom.charge = sign * magnitude;
    }

    // atom class, parsed and discarded
    if (!done() && peek() == ':') {
      ++pos_;
      if (done() || !std::isdigit(static_cast<unsigned char>(peek()))) {
        fail("atom class needs digits", pos_);
      }
      while (!done() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    }

    if (done() || peek() != ']') fail("unterminated bracket atom", open_at);
    ++pos_;  // ']'
    return atom;
  }

  void add_atom(Atom atom) {
    const int index = static_cast<int>(mol_.atoms.size());
    mol_.atoms.push_back(std::move(atom));
    if (prev_atom_ >= 0) {
      add_bond(prev_atom_, index, pending_bond_, pos_);
    } else if (pending_bond_) {
      fail("bond symbol before fragment start", pos_);
    }
    pending_bond_.reset();
    prev_atom_ = index;
  }

  void add_bond(int a, int b, std::optional<BondOrder> order, std::size_t at) {
    if (a == b) fail("self bond", at);
    auto key = std::minmax(a, b);
    if (!bond_set_.insert({key.first, key.second}).second) fail("duplicate bond", at);
    Bond bond;
    bond.a = a;
    bond.b = b;
    if (order) {
      bond.order = *order;
    } else {
      bond.order = (mol_.atoms[a].aromatic && mol_.atoms[b].aromatic) ? BondOrder::aromatic
                                                                      : BondOrder::single;
    }
    mol_.bonds.push_back(bond);
  }

  void ring_closure(int number, std::size_t at) {
    if (prev_atom_ < 0) fail("ring closure before any atom", at);
    auto it = open_rings_.find(number);
    if (it == open_rings_.end()) {
      open_rings_[number] = RingOpening{prev_atom_, pending_bond_, at};
      pending_bond_.reset();
      return;
    }
    RingOpening opening = it->second;
    open_rings_.erase(it);
    if (opening.atom == prev_atom_) fail("ring bond " + std::to_string(number) + " closes on itself", at);
    std::optional<BondOrder> order;
    if (opening.order && pending_bond_ && *opening.order != *pending_bond_) {
      fail("conflicting bond orders on ring bond " + std::to_string(number), at);
    }
    order = opening.order ? opening.order : pending_bond_;
    pending_bond_.reset();
    add_bond(opening.atom, prev_atom_, order, at);
  }

  void finalize() {
    mol_.neighbors.assign(mol_.atoms.size(), {});
    for (std::size_t i = 0; i < mol_.bonds.size(); ++i) {
      const Bond& bond = mol_.bonds[i];
      if (bond.order == BondOrder::aromatic &&
          (!mol_.atoms[bond.a].aromatic || !mol_.atoms[bond.b].aromatic)) {
        throw ValidationError("aromatic bond between non-aromatic atoms");
      }
      mol_.neighbors[bond.a].emplace_back(bond.b, static_cast<int>(i));
      mol_.neighbors[bond.b].emplace_back(bond.a, static_cast<int>(i));
    }
    mark_rings();
  }

  // Bridge detection; every non-bridge bond (and its endpoints) is in a ring.
  void mark_rings() {
    const int n = static_cast<int>(mol_.atoms.size());
    std::vector<int> disc(n, -1), low(n, 0);
    int timer = 0;
    struct Frame {
      int atom, parent_bond;
      std::size_t next = 0;
    };
    for (int root = 0; root < n; ++root) {
      if (disc[root] != -1) continue;
      std::vector<Frame> stack{{root, -1}};
      disc[root] = low[root] = timer++;
      while (!stack.empty()) {
        Frame& frame = stack.back();
        if (frame.next < mol_.neighbors[frame.atom].size()) {
          auto [next_atom, bond_idx] = mol_.neighbors[frame.atom][frame.next++];
          if (bond_idx == frame.parent_bond) continue;
          if (disc[next_atom] == -1) {
            disc[next_atom] = low[next_atom] = timer++;
            stack.push_back({next_atom, bond_idx});
          } else {
            low[frame.atom] = std::min(low[frame.atom], disc[next_atom]);
            mol_.bonds[bond_idx].in_ring = true;  // back edge is always cyclic
          }
        } else {
          const Frame finished = frame;
          stack.pop_back();
          if (!stack.empty()) {
            Frame& parent = stack.back();
            low[parent.atom] = std::min(low[parent.atom], low[finished.atom]);
            if (low[finished.atom] > disc[parent.atom]) {
              // bridge: leave as-is
            } else {
              mol_.bonds[finished.parent_bond].in_ring = true;
            }
          }
        }
      }
    }
    for (const Bond& bond : mol_.bonds) {
      if (bond.in_ring) {
        mol_.atoms[bond.a].in_ring = true;
        mol_.atoms[bond.b].in_ring = true;
      }
    }
  }
};

}  // namespace

Molecule parse_smiles(std::string_view text) { return Parser(text).run(); }

int Molecule::total_hydrogens(int atom) const {
  const Atom& a = atoms[atom];
  if (a.explicit_h) return *a.explicit_h;
  if (!is_organic_subset(a.element)) return 0;
  // Aromatic bonds contribute 1.5; the ceiling of the total is compared
  // against the standard valence ladder.
  int twice_sum = 0;
  for (auto [neighbor, bond_idx] : neighbors[atom]) {
    (void)neighbor;
    switch (bonds[bond_idx].order) {
      case BondOrder::single: twice_sum += 2; break;
      case BondOrder::double_bond: twice_sum += 4; break;
      case BondOrder::triple: twice_sum += 6; break;
      case BondOrder::aromatic: twice_sum += 3; break;
    }
  }
  const int bond_sum = (twice_sum + 1) / 2;  // ceil
  for (int valence : default_valences(a.element)) {
    if (valence >= bond_sum) return valence - bond_sum;
  }
  return 0;
}

// --- writer -----------------------------------------------------------------

namespace {

bool needs_bracket(const Molecule& mol, int idx) {
  const Atom& a = mol.atoms[idx];
  if (a.charge != 0 || a.isotope || a.explicit_h) return true;
  if (!is_organic_subset(a.element)) return true;
  if (a.aromatic && !(a.element == "B" || a.element == "C" || a.element == "N" ||
                      a.element == "O" || a.element == "P" || a.element == "S")) {
    return true;
  }
  return false;
}

std::string atom_token(const Molecule& mol, int idx) {
  const Atom& a = mol.atoms[idx];
  std::string symbol = a.element;
  if (a.aromatic) {
    for (char& c : symbol) c = static_cast<char>(std::tolower(c));
  }
  if (!needs_bracket(mol, idx)) return symbol;

  std::string out = "[";
  if (a.isotope) out += std::to_string(*a.isotope);
  out += symbol;
  const int h = a.explicit_h ? *a.explicit_h : 0;
  if (h == 1) {
    out += "H";
  } else if (h > 1) {
    out += "H" + std::to_string(h);
  }
  if (a.charge == 1) {
    out += "+";
  } else if (a.charge == -1) {
    out += "-";
  } else if (a.charge > 1) {
    out += "+" + std::to_string(a.charge);
  } else if (a.charge < -1) {
    out += "-" + std::to_string(-a.charge);
  }
  out += "]";
  return out;
}

std::string bond_token(const Molecule& mol, const Bond& bond) {
  switch (bond.order) {
    case BondOrder::double_bond: return "=";
    case BondOrder::triple: return "#";
    case BondOrder::aromatic: return "";  // implicit between aromatic atoms
    case BondOrder::single:
      // An unwritten bond between two aromatic atoms would read back as
      // aromatic, so single bonds there must be explicit.
      return (mol.atoms[bond.a].aromatic && mol.atoms[bond.b].aromatic) ? "-" : "";
  }
  return "";
}

class Writer {
 public:
  Writer(const Molecule& mol, Xoshiro256StarStar* rng) : mol_(mol), rng_(rng) {}

  std::string run() {
    const int n = static_cast<int>(mol_.atoms.size());
    std::vector<int> roots(n);
    for (int i = 0; i < n; ++i) roots[i] = i;
    if (rng_) fisher_yates_shuffle(roots, *rng_);

    visited_.assign(n, false);
    bond_used_.assign(mol_.bonds.size(), false);
    std::string out;
    for (int root : roots) {
      if (visited_[root]) continue;
      if (!out.empty()) out += ".";
      plan_component(root);
      out += emit(root, -1);
    }
    return out;
  }

 private:
  const Molecule& mol_;
  Xoshiro256StarStar* rng_;
  std::vector<bool> visited_;
  std::vector<bool> bond_used_;
  // Per atom: tree children as (child atom, bond idx); ring closures as
  // (other atom, bond idx, open?).
  std::map<int, std::vector<std::pair<int, int>>> tree_children_;
  struct RingRef {
    int bond = -1;
    int digit = -1;
    bool open = false;
  };
  std::map<int, std::vector<RingRef*>> ring_refs_;
  std::vector<std::unique_ptr<RingRef>> ring_storage_;
  std::set<int> used_digits_;
  std::map<int, int> digit_of_bond_;

  std::vector<std::pair<int, int>> ordered_neighbors(int atom) {
    auto order = mol_.neighbors[atom];
    if (rng_) {
      fisher_yates_shuffle(order, *rng_);
    }
    return order;
  }

  // First pass: walk the DFS tree once so ring-closure digits are known at
  // both endpoints before any text is produced.
  void plan_component(int root) {
    struct Frame {
      int atom;
      std::vector<std::pair<int, int>> order;
      std::size_t next = 0;
    };
    std::vector<Frame> stack;
    visited_[root] = true;
    stack.push_back({root, ordered_neighbors(root)});
    while (!stack.empty()) {
      Frame& frame = stack.back();
      if (frame.next >= frame.order.size()) {
        stack.pop_back();
        continue;
      }
      auto [next_atom, bond_idx] = frame.order[frame.next++];
      if (bond_used_[bond_idx]) continue;
      bond_used_[bond_idx] = true;
      if (!visited_[next_atom]) {
        visited_[next_atom] = true;
        tree_children_[frame.atom].emplace_back(next_atom, bond_idx);
        stack.push_back({next_atom, ordered_neighbors(next_atom)});
      } else {
        // Back edge: opens at the ancestor (visited earlier in this DFS),
        // closes here.
        auto open_ref = std::make_unique<RingRef>();
        open_ref->bond = bond_idx;
        open_ref->open = true;
        auto close_ref = std::make_unique<RingRef>();
        close_ref->bond = bond_idx;
        close_ref->open = false;
        ring_refs_[next_atom].push_back(open_ref.get());
        ring_refs_[frame.atom].push_back(close_ref.get());
        ring_storage_.push_back(std::move(open_ref));
        ring_storage_.push_back(std::move(close_ref));
      }
    }
  }

  int allocate_digit() {
    for (int d = 1; d < 100; ++d) {
      if (!used_digits_.count(d)) {
        used_digits_.insert(d);
        return d;
      }
    }
    throw Error("to_smiles: more than 99 concurrently open ring bonds");
  }

  std::string digit_text(int d) {
    return d < 10 ? std::to_string(d) : "%" + std::to_string(d);
  }

  // Second pass: emit atoms in the identical traversal order.
  std::string emit(int root, int) {
    std::string out;
    struct Frame {
      int atom;
      std::size_t next = 0;
      bool entered = false;
      std::string closer;  // text appended when the frame finishes
    };
    std::vector<Frame> stack;
    Frame root_frame{};
    root_frame.atom = root;
    stack.push_back(std::move(root_frame));
    while (!stack.empty()) {
      Frame& frame = stack.back();
      if (!frame.entered) {
        frame.entered = true;
        out += atom_token(mol_, frame.atom);
        for (RingRef* ref : ring_refs_[frame.atom]) {
          const Bond& bond = mol_.bonds[ref->bond];
          if (ref->open) {
            ref->digit = allocate_digit();
            digit_of_bond_[ref->bond] = ref->digit;
            out += bond_token(mol_, bond) + digit_text(ref->digit);
          } else {
            const int digit = digit_of_bond_.at(ref->bond);
            out += bond_token(mol_, bond) + digit_text(digit);
            used_digits_.erase(digit);
          }
        }
      }
      auto& children = tree_children_[frame.atom];
      if (frame.next < children.size()) {
        auto [child, bond_idx] = children[frame.next++];
        const bool last = frame.next == children.size();
        std::string prefix = bond_token(mol_, mol_.bonds[bond_idx]);
        Frame child_frame{};
        child_frame.atom = child;
        if (!last) {
          out += "(" + prefix;
          child_frame.closer = ")";
        } else {
          out += prefix;
        }
        stack.push_back(std::move(child_frame));
        continue;
      }
      out += frame.closer;
      stack.pop_back();
    }
    return out;
  }
};

}  // namespace

std::string to_smiles(const Molecule& mol) {
  Writer writer(mol, nullptr);
  return writer.run();
}

std::string to_smiles(const Molecule& mol, Xoshiro256StarStar& rng) {
  Writer writer(mol, &rng);
  return writer.run();
}

}  // namespace timesplit

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "timesplit/rng.hpp"

namespace timesplit {

enum class BondOrder : std::uint8_t { single = 1, double_bond = 2, triple = 3, aromatic = 4 };

struct Atom {
  std::string element;            // symbol, e.g. "C", "Cl"
  int charge = 0;
  std::optional<int> isotope;
  std::optional<int> explicit_h;  // set for bracket atoms
  bool aromatic = false;
  bool in_ring = false;
};

struct Bond {
  int a = 0, b = 0;
  BondOrder order = BondOrder::single;
  bool in_ring = false;
};

// A molecular graph parsed from SMILES. Stereo annotations are accepted on
// input and discarded.
struct Molecule {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  std::vector<std::vector<std::pair<int, int>>> neighbors;  // (atom, bond) per atom

  int degree(int atom) const { return static_cast<int>(neighbors[atom].size()); }

  // Explicit count for bracket atoms, otherwise filled up to the smallest
  // standard valence (aromatic bonds count 1.5, rounded up).
  int total_hydrogens(int atom) const;
};

// Supports the organic subset (B C N O P S F Cl Br I), aromatic lowercase
// atoms, bracket atoms with isotope / charge / H count / atom class, bonds
// - = # :, branches, ring closures (digits and %nn), and dot-separated
// fragments. Throws ParseError with a byte offset on malformed input.
Molecule parse_smiles(std::string_view text);

// Deterministic serialization (atom 0 first, neighbors in index order).
// parse . to_smiles is a fixed point in string space.
std::string to_smiles(const Molecule& mol);

// Random atom order; the result parses back to the same molecular graph.
std::string to_smiles(const Molecule& mol, Xoshiro256StarStar& rng);

}  // namespace timesplit

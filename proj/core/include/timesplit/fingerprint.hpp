#pragma once

#include <cstdint>
#include <vector>

#include "timesplit/smiles.hpp"

namespace timesplit {

// Hashed circular-environment fingerprint.
struct Fingerprint {
  int n_bits = 2048;
  std::vector<std::uint32_t> bits;  // sorted, unique set-bit indices

  bool empty() const { return bits.empty(); }
};

// Circular atom environments hashed with FNV-1a over a canonical byte
// encoding. The radius-0 invariant is (element, degree, charge, total H,
// ring flag, aromatic flag); each iteration folds in the sorted
// (bond order, neighbor hash) pairs. Independent of atom input order.
Fingerprint morgan_fingerprint(const Molecule& mol, int radius = 2, int n_bits = 2048);

// Every per-atom, per-radius environment hash (before folding); exposed for
// the symmetry tests.
std::vector<std::uint64_t> morgan_environment_hashes(const Molecule& mol, int radius = 2);

// |A & B| / |A | B|; defined as 0 when both sets are empty.
double tanimoto(const Fingerprint& a, const Fingerprint& b);

}  // namespace timesplit

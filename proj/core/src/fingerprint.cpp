#include "timesplit/fingerprint.hpp"

#include <algorithm>
#include <set>

#include "timesplit/error.hpp"

namespace timesplit {

namespace {

class Fnv1a {
 public:
  void byte(std::uint8_t b) {
    hash_ ^= b;
    hash_ *= 0x100000001b3ull;
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) byte(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) {
    for (int i = 0; i < 4; ++i) byte(static_cast<std::uint8_t>(static_cast<std::uint32_t>(v) >> (8 * i)));
  }
  void text(const std::string& s) {
    byte(static_cast<std::uint8_t>(s.size()));
    for (char c : s) byte(static_cast<std::uint8_t>(c));
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ull;
};

std::vector<std::uint64_t> initial_invariants(const Molecule& mol) {
  std::vector<std::uint64_t> hashes(mol.atoms.size());
  for (std::size_t i = 0; i < mol.atoms.size(); ++i) {
    const Atom& a = mol.atoms[i];
    Fnv1a h;
    h.text(a.element);
    h.i32(mol.degree(static_cast<int>(i)));
    h.i32(a.charge);
    h.i32(mol.total_hydrogens(static_cast<int>(i)));
    h.byte(a.in_ring ? 1 : 0);
    h.byte(a.aromatic ? 1 : 0);
    hashes[i] = h.value();
  }
  return hashes;
}

}  // namespace

std::vector<std::uint64_t> morgan_environment_hashes(const Molecule& mol, int radius) {
  if (radius < 0) throw Error("morgan_fingerprint: radius must be >= 0");
  std::vector<std::uint64_t> current = initial_invariants(mol);
  std::vector<std::uint64_t> all = current;
  std::vector<std::uint64_t> next(current.size());
  for (int r = 0; r < radius; ++r) {
    for (std::size_t i = 0; i < mol.atoms.size(); ++i) {
      const auto& nbrs = mol.neighbors[i];
      if (nbrs.empty()) {
        next[i] = current[i];  // isolated atoms are fixed points
        continue;
      }
      std::vector<std::pair<std::uint8_t, std::uint64_t>> env;
      env.reserve(nbrs.size());
      for (auto [neighbor, bond_idx] : nbrs) {
        env.emplace_back(static_cast<std::uint8_t>(mol.bonds[bond_idx].order), current[neighbor]);
      }
      std::sort(env.begin(), env.end());
      Fnv1a h;
      h.u64(current[i]);
      for (auto [order, neighbor_hash] : env) {
        h.byte(order);
        h.u64(neighbor_hash);
      }
      next[i] = h.value();
    }
    current = next;
    all.insert(all.end(), current.begin(), current.end());
  }
  return all;
}

Fingerprint morgan_fingerprint(const Molecule& mol, int radius, int n_bits) {
  if (n_bits <= 0) throw Error("morgan_fingerprint: n_bits must be > 0");
  std::set<std::uint32_t> bits;
  for (std::uint64_t h : morgan_environment_hashes(mol, radius)) {
    bits.insert(static_cast<std::uint32_t>(h % static_cast<std::uint64_t>(n_bits)));
  }
  Fingerprint fp;
  fp.n_bits = n_bits;
  fp.bits.assign(bits.begin(), bits.end());
  return fp;
}

double tanimoto(const Fingerprint& a, const Fingerprint& b) {
  if (a.n_bits != b.n_bits) throw Error("tanimoto: fingerprints have different bit lengths");
  std::size_t i = 0, j = 0, both = 0;
  while (i < a.bits.size() && j < b.bits.size()) {
    if (a.bits[i] == b.bits[j]) {
      ++both;
      ++i;
      ++j;
    } else if (a.bits[i] < b.bits[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const std::size_t either = a.bits.size() + b.bits.size() - both;
  if (either == 0) return 0.0;
  return static_cast<double>(both) / static_cast<double>(either);
}

}  // namespace timesplit

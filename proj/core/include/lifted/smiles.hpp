#pragma once

#include <atomic>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lifted/tokenizer.hpp"

namespace lifted {

// Closed SMILES alphabet: organic-subset atoms (two-letter Cl and Br kept
// whole), aromatic atoms, bracket atoms, bonds, branches, ring closures
// (0-9 and %10-%99), dot, wildcard. Ids share the reserved prefix of the
// text vocabulary.
class SmilesVocabulary {
 public:
  static const SmilesVocabulary& instance();

  TokenId id(std::string_view token) const;  // kUnkId when absent
  bool contains(std::string_view token) const;
  std::size_t size() const noexcept { return tokens_.size(); }
  std::span<const std::string> tokens() const noexcept { return tokens_; }

 private:
  SmilesVocabulary();
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

struct SmilesPiece {
  std::string text;
  // False when the scanner met a character outside the alphabet.
  bool known = true;
};

std::vector<SmilesPiece> split_smiles(std::string_view smiles);

// Unknown characters and bracket atoms missing from the vocabulary map to
// [unk] and bump `*unknown` when given.
TokenSequence tokenize_smiles(std::string_view smiles, std::size_t max_len,
                              std::size_t* unknown = nullptr);

// Process-wide count of [unk] emissions by tokenize_smiles.
std::size_t smiles_unknown_total() noexcept;

}  // namespace lifted

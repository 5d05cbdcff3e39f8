#include "lifted/smiles.hpp"

#include <cctype>

#include "lifted/errors.hpp"

namespace lifted {

namespace {

std::atomic<std::size_t> g_unknown{0};

constexpr std::string_view kSingle = "BCNOPSFIbcnosp()=#-+\\/:.~@*$?>";

constexpr std::string_view kBracketAtoms[] = {
    "[H]",    "[2H]",   "[3H]",   "[C]",    "[CH]",   "[CH2]",  "[C-]",   "[CH-]",  "[C@]",
    "[C@@]",  "[C@H]",  "[C@@H]", "[c-]",   "[cH-]",  "[N]",    "[NH]",   "[N+]",   "[N-]",
    "[NH+]",  "[NH-]",  "[NH2+]", "[NH3+]", "[NH4+]", "[N@]",   "[N@@]",  "[N@+]",  "[N@@+]",
    "[n+]",   "[nH]",   "[nH+]",  "[n-]",   "[O]",    "[O+]",   "[O-]",   "[OH-]",  "[OH+]",
    "[o+]",   "[S]",    "[S+]",   "[S-]",   "[SH]",   "[S@]",   "[S@@]",  "[S@+]",  "[s+]",
    "[P]",    "[P+]",   "[PH]",   "[P@]",   "[P@@]",  "[B-]",   "[BH-]",  "[BH3-]", "[Se]",
    "[se]",   "[te]",   "[Si]",   "[As]",   "[F-]",   "[Cl-]",  "[Cl+3]", "[Br-]",  "[I-]",   "[I+]",
    "[Li+]",  "[Na+]",  "[K+]",   "[Mg]",   "[Mg+2]", "[Ca]",   "[Ca+2]", "[Al]",   "[Al+3]",
    "[Zn]",   "[Zn+2]", "[Fe]",   "[Fe+2]", "[Fe+3]", "[Cu]",   "[Cu+2]", "[Co]",   "[Ni]",
    "[Mn]",   "[Pt]",   "[Pt+2]", "[Au]",   "[Ag]",   "[Ag+]",  "[Hg]",   "[Sn]",   "[Gd]",
    "[Gd+3]", "[Tc]",   "[Bi]",   "[Sb]",   "[Ga]",   "[In]",   "[Ti]",   "[Sr]",   "[Ba]",
    "[Ra]",   "[Cs+]",  "[Y]",    "[Lu]",   "[Ge]",   "[Xe]",   "[Cr]",   "[V]",    "[Mo]",
};

}  // namespace

SmilesVocabulary::SmilesVocabulary() {
  auto push = [this](std::string t) {
    ids_.emplace(t, static_cast<TokenId>(tokens_.size()));
    tokens_.push_back(std::move(t));
  };
  push("[pad]");
  push("[unk]");
  for (auto m : kAllModalities) push("[cls]_" + std::string(modality_name(m)));
  push("Cl");
  push("Br");
  for (char c : kSingle) push(std::string(1, c));
  for (char d = '0'; d <= '9'; ++d) push(std::string(1, d));
  for (int r = 10; r <= 99; ++r) push("%" + std::to_string(r));
  for (auto b : kBracketAtoms) push(std::string(b));
}

const SmilesVocabulary& SmilesVocabulary::instance() {
  static const SmilesVocabulary v;
  return v;
}

TokenId SmilesVocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnkId : it->second;
}

bool SmilesVocabulary::contains(std::string_view token) const {
  return ids_.contains(std::string(token));
}

std::vector<SmilesPiece> split_smiles(std::string_view s) {
  std::vector<SmilesPiece> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (c == '[') {
      const auto close = s.find(']', i + 1);
      if (close != std::string_view::npos && close > i + 1) {
        out.push_back({std::string(s.substr(i, close - i + 1)), true});
        i = close + 1;
        continue;
      }
      out.push_back({"[", false});
      ++i;
    } else if ((c == 'C' && i + 1 < s.size() && s[i + 1] == 'l') ||
               (c == 'B' && i + 1 < s.size() && s[i + 1] == 'r')) {
      out.push_back({std::string(s.substr(i, 2)), true});
      i += 2;
    } else if (c == '%' && i + 2 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])) &&
               std::isdigit(static_cast<unsigned char>(s[i + 2]))) {
      out.push_back({std::string(s.substr(i, 3)), true});
      i += 3;
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               kSingle.find(c) != std::string_view::npos) {
      out.push_back({std::string(1, c), true});
      ++i;
    } else {
      out.push_back({std::string(1, c), false});
      ++i;
    }
  }
  return out;
}

TokenSequence tokenize_smiles(std::string_view smiles, std::size_t max_len, std::size_t* unknown) {
  if (max_len < 2) throw ContractError("tokenize_smiles: max_len must be at least 2");
  const auto& vocab = SmilesVocabulary::instance();
  const std::size_t width = max_len - 1;
  TokenSequence seq;
  seq.ids.assign(width, kPadId);
  seq.mask.assign(width, 0);
  std::size_t t = 0;
  std::size_t misses = 0;
  for (const auto& piece : split_smiles(smiles)) {
    if (t == width) break;
    TokenId id = piece.known ? vocab.id(piece.text) : kUnkId;
    if (id == kUnkId) ++misses;
    seq.ids[t] = id;
    seq.mask[t] = 1;
    ++t;
  }
  if (misses) g_unknown += misses;
  if (unknown) *unknown += misses;
  return seq;
}

std::size_t smiles_unknown_total() noexcept { return g_unknown.load(); }

}  // namespace lifted

#include "lifted/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "lifted/errors.hpp"

namespace lifted {

std::size_t TokenSequence::real_tokens() const noexcept {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

Vocabulary::Vocabulary() {
  push("[pad]");
  push("[unk]");
  for (auto m : kAllModalities) push("[cls]_" + std::string(modality_name(m)));
}

void Vocabulary::push(std::string token) {
  ids_.emplace(token, static_cast<TokenId>(tokens_.size()));
  tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::build(std::span<const ModalityText> corpus, std::size_t max_size) {
  std::vector<std::string> texts;
  texts.reserve(corpus.size());
  for (const auto& t : corpus) texts.push_back(t.text);
  return build(texts, max_size);
}

Vocabulary Vocabulary::build(std::span<const std::string> corpus, std::size_t max_size) {
  if (corpus.empty()) throw ContractError("cannot build a vocabulary from an empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& text : corpus) {
    for (auto& w : split_words(text)) ++counts[std::move(w)];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v;
  for (std::size_t i = 0; i < ranked.size() && i < max_size; ++i) {
    if (!v.contains(ranked[i].first)) v.push(ranked[i].first);
  }
  return v;
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw ContractError("token id " + std::to_string(id) + " outside vocabulary");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(std::string_view token) const {
  return ids_.contains(std::string(token));
}

nlohmann::json Vocabulary::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < tokens_.size(); ++i) j[tokens_[i]] = i;
  return j;
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw LoadError("vocabulary JSON must be an object");
  std::vector<std::string> by_id(j.size());
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto id = it.value().get<std::size_t>();
    if (id >= by_id.size() || !by_id[id].empty()) throw LoadError("vocabulary ids are not dense");
    by_id[id] = it.key();
  }
  Vocabulary v;
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (i >= by_id.size() || by_id[i] != v.tokens_[i]) {
      throw LoadError("vocabulary reserved ids differ from this build");
    }
  }
  for (std::size_t i = v.tokens_.size(); i < by_id.size(); ++i) v.push(by_id[i]);
  return v;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write vocabulary " + path.string());
  out << to_json().dump() << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open vocabulary " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("malformed vocabulary " + path.string() + ": " + e.what());
  }
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) out.push_back(std::move(word));
    word.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      word.push_back(static_cast<char>(std::tolower(c)));
    } else if (std::isspace(c)) {
      flush();
    } else {
      flush();
      out.emplace_back(1, static_cast<char>(c));
    }
  }
  flush();
  return out;
}

TokenSequence tokenize_text(std::string_view text, const Vocabulary& vocab, std::size_t max_len) {
  if (max_len < 2) throw ContractError("tokenize_text: max_len must be at least 2");
  const std::size_t width = max_len - 1;
  TokenSequence seq;
  seq.ids.assign(width, kPadId);
  seq.mask.assign(width, 0);
  std::size_t t = 0;
  for (const auto& w : split_words(text)) {
    if (t == width) break;
    seq.ids[t] = vocab.id(w);
    seq.mask[t] = 1;
    ++t;
  }
  return seq;
}

}  // namespace lifted

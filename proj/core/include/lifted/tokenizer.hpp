#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "lifted/data_model.hpp"

namespace lifted {

using TokenId = std::int32_t;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnkId = 1;
// [cls]_k occupies kClsBase + k for k = 0..K.
inline constexpr TokenId kClsBase = 2;
inline constexpr TokenId kFirstRegularId = kClsBase + static_cast<TokenId>(kNumModalities);

constexpr TokenId cls_id(Modality m) { return kClsBase + static_cast<TokenId>(index_of(m)); }

struct TokenSequence {
  std::vector<TokenId> ids;
  // 1 on real tokens, 0 on padding.
  std::vector<std::uint8_t> mask;

  std::size_t length() const noexcept { return ids.size(); }
  std::size_t real_tokens() const noexcept;
};

// Word-level vocabulary shared by every text modality.
class Vocabulary {
 public:
  Vocabulary();

  // Frequency-ranked lowercased tokens, ties broken lexicographically.
  // `max_size` bounds the number of regular (non-reserved) tokens.
  static Vocabulary build(std::span<const ModalityText> corpus, std::size_t max_size);
  static Vocabulary build(std::span<const std::string> corpus, std::size_t max_size);

  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;
  bool contains(std::string_view token) const;
  std::size_t size() const noexcept { return tokens_.size(); }

  // {token: id}
  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  void push(std::string token);
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

// Lowercased runs of letters/digits; every other non-space character stands
// alone. Bytes >= 0x80 count as letters.
std::vector<std::string> split_words(std::string_view text);

// Fixed length max_len - 1 (position 0 is reserved for [cls]_k inside the
// encoder). Long inputs keep their head.
TokenSequence tokenize_text(std::string_view text, const Vocabulary& vocab, std::size_t max_len);

}  // namespace lifted

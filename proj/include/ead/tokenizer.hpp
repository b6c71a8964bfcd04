#pragma once

#include <string>
#include <string_view>

#include "ead/provider.hpp"

namespace ead {

/// One token per byte. Only for feeding text prompts to synthetic demo models.
struct ByteTokenizer {
  static constexpr std::size_t kVocabSize = 256;

  static std::uint64_t fingerprint() { return vocab_fingerprint("byte-level:256"); }

  static Context encode(std::string_view text) {
    Context out;
    out.reserve(text.size());
    for (char c : text) out.push_back(static_cast<unsigned char>(c));
    return out;
  }

  static std::string decode(std::span<const TokenId> ids) {
    std::string out;
    out.reserve(ids.size());
    for (TokenId t : ids) out.push_back(static_cast<char>(t & 0xff));
    return out;
  }
};

}  // namespace ead

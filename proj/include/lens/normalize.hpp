#pragma once

#include <string>
#include <string_view>

namespace lens {

// VQA answer normalization: lowercase, punctuation removed (periods kept
// inside decimals), number words mapped to digits, articles dropped, common
// contractions restored, whitespace collapsed.
std::string normalize_answer(std::string_view answer);

}  // namespace lens

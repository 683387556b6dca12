#pragma once

#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace icf {

// Splits text into lowercased maximal alphanumeric runs; everything else is
// a separator.  "Pt. gets up" -> {"pt", "gets", "up"}.
std::vector<std::string> tokenize_words(std::string_view text);

// Bundled fixed English stopword list (179 entries).  The version tag is
// recorded in manifests so that results are traceable to the exact list.
const std::unordered_set<std::string>& english_stopwords();
inline constexpr const char* kStopwordsVersion = "english-179-v1";

}  // namespace icf

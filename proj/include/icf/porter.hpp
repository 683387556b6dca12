#pragma once

#include <string>
#include <string_view>

namespace icf {

// Porter's suffix-stripping stemmer for English.  Input is expected to be
// lowercase; words of length <= 2 are returned unchanged.
std::string porter_stem(std::string_view word);

}  // namespace icf

#pragma once

#include <string>
#include <string_view>

namespace nctk {

// Porter's 1980 suffix-stripping algorithm, as published (no later
// departures). Expects a lowercase word; characters outside a-z count as
// consonants.
std::string porter_stem(std::string_view word);

}  // namespace nctk

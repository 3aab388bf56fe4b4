#pragma once

#include <map>
#include <string>
#include <vector>

// Published test vectors. Files are "key = value" lines grouped into cases
// separated by blank lines; '#' starts a comment. Byte strings are lowercase
// hex, counters and pseudonyms decimal.

namespace pseudoaka::vectors {

using Case = std::map<std::string, std::string>;

/// File name -> contents, for every published vector file.
std::map<std::string, std::string> generate();

std::vector<Case> parse(const std::string& text);

} // namespace pseudoaka::vectors

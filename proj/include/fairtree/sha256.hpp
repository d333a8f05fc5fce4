#pragma once

#include <cstdint>
#include <string>

namespace fairtree {

// SHA-256 of a byte string / file, as a lowercase hex digest. Used by the
// load report so fetched dataset files can be pinned.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file_hex(const std::string& path);

}  // namespace fairtree

#pragma once

#include <cstdint>
#include <string>

namespace icf {

// Reads a whole file into memory; throws DataError if unreadable.
std::string read_file_bytes(const std::string& path);

// Creates the parent directory of `path` (recursively) if it is missing.
void ensure_parent_directory(const std::string& path);

// Writes via a temporary file in the same directory, then renames, so
// readers never observe a half-written file. Creates missing parent
// directories.
void atomic_write_file(const std::string& path, const std::string& content);

// FNV-1a 64 of the file contents, as "fnv1a64:<16 hex digits>".
std::string file_content_hash(const std::string& path);

}  // namespace icf

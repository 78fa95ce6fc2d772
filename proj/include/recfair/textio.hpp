#pragma once

#include <string>

namespace recfair {

/// Shortest decimal string that parses back to exactly x ("nan"/"inf" for
/// non-finite values). Keeps CSV and JSON output byte-stable across runs.
std::string format_double(double x);

/// Writes content atomically enough for our purposes (truncate + write).
/// Throws DataError on failure.
void write_text_file(const std::string& path, const std::string& content);

/// Reads a whole file. Throws DataError when the file cannot be opened.
std::string read_text_file(const std::string& path);

}  // namespace recfair

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace vcmbench {

struct ProcessResult {
  int exit_code = -1;  // negative: killed by signal -exit_code
  std::string output;  // interleaved stdout and stderr
};

// Looks up `name` in $VCMBENCH_CODEC_DIR (colon separated) and then $PATH.
// Names containing a slash are returned unchanged. Throws CodecError.
std::filesystem::path resolve_executable(const std::string& name);

// Runs argv without a shell. stdout and stderr go to `log_path`, whose
// contents are also returned. Throws CodecError if the process cannot start.
ProcessResult run_process(const std::vector<std::string>& argv, const std::filesystem::path& log_path);

// Hex SHA-256 digests.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
// Writes through a temporary sibling and renames, so readers never see a
// partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);

}  // namespace vcmbench

#pragma once

// `dynenh` command-line front end. Exit status: 0 success, 1 usage error,
// 2 runtime failure.

#include "dynenh/dataio.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dynenh::cli {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

int run(int argc, char** argv);

/// `<root>/<YYYYmmdd-HHMMSS>-<tag>`, suffixed -2, -3, ... when taken.
std::filesystem::path create_run_dir(const std::filesystem::path& root, std::string_view tag);

/// Exclusive writer lock on a run directory; throws if already held.
class DirLock {
public:
    explicit DirLock(const std::filesystem::path& dir);
    ~DirLock();
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    std::filesystem::path path_;
};

/// Git-style content hash: SHA-1 over the blob hashes of every dataset file
/// (sorted by relative path) and of the resolved config text.
std::string inputs_hash(const DatasetManifest& manifest, const std::string& config_text);

/// Hex SHA-1 of a git blob object holding `bytes`.
std::string git_blob_sha1(std::string_view bytes);

/// summary.csv from every metrics_<split>.csv in the run directory.
void write_summary(const std::filesystem::path& run_dir);

/// Line chart of loss_total per epoch, one polyline per training phase.
void write_loss_svg(const std::filesystem::path& log_csv, const std::filesystem::path& svg);

}  // namespace dynenh::cli

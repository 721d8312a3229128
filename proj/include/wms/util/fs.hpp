#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wms {

/// Any failure of the underlying filesystem. Carries the path and errno text.
class StorageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace fs {

using Path = std::filesystem::path;

[[noreturn]] void throw_errno(std::string_view what, const Path& path);

/// Process-wide switch. Tests that only care about logical crash points may
/// turn fsync off; the protocols stay the same.
void set_durable(bool on);
bool durable();

void fsync_fd(int fd, const Path& path_for_errors);
void fsync_dir(const Path& dir);

/// Writes `bytes` to `path` with O_EXCL, flushes it and the parent directory.
/// Throws StorageError if the file already exists.
void write_new_file(const Path& path, std::string_view bytes);

/// Writes to a temporary sibling, flushes, then renames over `path`.
void replace_file(const Path& path, std::string_view bytes);

std::string read_file(const Path& path);

/// Atomic rename. Returns false if the source vanished (lost a race).
bool rename_if_exists(const Path& from, const Path& to);

/// Returns false if the file did not exist.
bool unlink_if_exists(const Path& path);

void ensure_dir(const Path& dir);

/// Regular file names in `dir`, unsorted. A missing directory yields an empty list.
std::vector<std::string> list_names(const Path& dir);

/// Advisory exclusive lock (flock) on a file or directory, released on destruction.
class FileLock {
public:
    explicit FileLock(const Path& path, bool create = false);
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;
    FileLock(FileLock&& other) noexcept;
    FileLock& operator=(FileLock&& other) noexcept;
    ~FileLock();

    int fd() const { return fd_; }

private:
    int fd_ = -1;
};

} // namespace fs
} // namespace wms

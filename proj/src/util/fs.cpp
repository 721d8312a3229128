#include "wms/util/fs.hpp"

#include "wms/util/random.hpp"

#include <atomic>
#include <cerrno>
#include <cstring>

#include <dirent.h>
#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

namespace wms::fs {

namespace {

std::atomic<bool> g_durable{true};

void write_all(int fd, std::string_view bytes, const Path& path)
{
    while (!bytes.empty()) {
        ssize_t n = ::write(fd, bytes.data(), bytes.size());
        if (n < 0) {
            if (errno == EINTR)
                continue;
            throw_errno("write", path);
        }
        bytes.remove_prefix(static_cast<size_t>(n));
    }
}

class Fd {
public:
    explicit Fd(int fd) : fd_(fd) {}
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    ~Fd()
    {
        if (fd_ >= 0)
            ::close(fd_);
    }
    int get() const { return fd_; }

private:
    int fd_;
};

} // namespace

void throw_errno(std::string_view what, const Path& path)
{
    throw StorageError(std::string(what) + " " + path.string() + ": " + std::strerror(errno));
}

void set_durable(bool on) { g_durable.store(on); }
bool durable() { return g_durable.load(); }

void fsync_fd(int fd, const Path& path)
{
    if (!durable())
        return;
    if (::fsync(fd) != 0)
        throw_errno("fsync", path);
}

void fsync_dir(const Path& dir)
{
    if (!durable())
        return;
    Fd fd(::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC));
    if (fd.get() < 0)
        throw_errno("open dir", dir);
    if (::fsync(fd.get()) != 0)
        throw_errno("fsync dir", dir);
}

void write_new_file(const Path& path, std::string_view bytes)
{
    {
        Fd fd(::open(path.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0644));
        if (fd.get() < 0)
            throw_errno("create", path);
        write_all(fd.get(), bytes, path);
        fsync_fd(fd.get(), path);
    }
    fsync_dir(path.parent_path());
}

void replace_file(const Path& path, std::string_view bytes)
{
    Path tmp = path;
    tmp += ".tmp-" + random_hex(8);
    write_new_file(tmp, bytes);
    if (::rename(tmp.c_str(), path.c_str()) != 0) {
        int saved = errno;
        ::unlink(tmp.c_str());
        errno = saved;
        throw_errno("rename", path);
    }
    fsync_dir(path.parent_path());
}

std::string read_file(const Path& path)
{
    Fd fd(::open(path.c_str(), O_RDONLY | O_CLOEXEC));
    if (fd.get() < 0)
        throw_errno("open", path);
    std::string out;
    char buf[16384];
    for (;;) {
        ssize_t n = ::read(fd.get(), buf, sizeof buf);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            throw_errno("read", path);
        }
        if (n == 0)
            break;
        out.append(buf, static_cast<size_t>(n));
    }
    return out;
}

bool rename_if_exists(const Path& from, const Path& to)
{
    if (::rename(from.c_str(), to.c_str()) == 0)
        return true;
    if (errno == ENOENT)
        return false;
    throw_errno("rename", from);
}

bool unlink_if_exists(const Path& path)
{
    if (::unlink(path.c_str()) == 0)
        return true;
    if (errno == ENOENT)
        return false;
    throw_errno("unlink", path);
}

void ensure_dir(const Path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw StorageError("mkdir " + dir.string() + ": " + ec.message());
}

std::vector<std::string> list_names(const Path& dir)
{
    std::vector<std::string> names;
    DIR* d = ::opendir(dir.c_str());
    if (!d) {
        if (errno == ENOENT)
            return names;
        throw_errno("opendir", dir);
    }
    while (dirent* e = ::readdir(d)) {
        std::string_view n = e->d_name;
        if (n == "." || n == "..")
            continue;
        if (e->d_type != DT_REG && e->d_type != DT_UNKNOWN)
            continue;
        names.emplace_back(n);
    }
    ::closedir(d);
    return names;
}

FileLock::FileLock(const Path& path, bool create)
{
    int flags = O_RDONLY | O_CLOEXEC;
    if (create)
        flags = O_RDWR | O_CREAT | O_CLOEXEC;
    fd_ = ::open(path.c_str(), flags, 0644);
    if (fd_ < 0)
        throw_errno("open lock", path);
    while (::flock(fd_, LOCK_EX) != 0) {
        if (errno == EINTR)
            continue;
        int saved = errno;
        ::close(fd_);
        errno = saved;
        throw_errno("flock", path);
    }
}

FileLock::FileLock(FileLock&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

FileLock& FileLock::operator=(FileLock&& other) noexcept
{
    if (this != &other) {
        if (fd_ >= 0)
            ::close(fd_);
        fd_ = other.fd_;
        other.fd_ = -1;
    }
    return *this;
}

FileLock::~FileLock()
{
    if (fd_ >= 0)
        ::close(fd_);
}

} // namespace wms::fs

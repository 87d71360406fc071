#pragma once

#include <cerrno>
#include <cstring>
#include <string>
#include <system_error>
#include <vector>

#include <csignal>
#include <algorithm>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "jitvp/errors.hpp"

namespace jitvp {

struct CommandResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

namespace detail {

inline void close_fd(int& fd) {
    if (fd >= 0) {
        ::close(fd);
        fd = -1;
    }
}

}  // namespace detail

// Runs argv[0] with the given arguments, feeding stdin_data (empty: /dev/null)
// and capturing stdout and stderr. No shell is involved.
inline CommandResult run_command(const std::vector<std::string>& argv,
                                 const std::string& cwd = {},
                                 const std::string& stdin_data = {}) {
    if (argv.empty()) throw Error("run_command: empty argv");

    int in_pipe[2] = {-1, -1};
    int out_pipe[2] = {-1, -1};
    int err_pipe[2] = {-1, -1};
    const bool feed_stdin = !stdin_data.empty();
    // O_CLOEXEC everywhere: a concurrent fork in another thread must not
    // inherit these ends, or children would never observe EOF.
    if ((feed_stdin && ::pipe2(in_pipe, O_CLOEXEC) != 0) || ::pipe2(out_pipe, O_CLOEXEC) != 0 ||
        ::pipe2(err_pipe, O_CLOEXEC) != 0)
        throw std::system_error(errno, std::generic_category(), "pipe");

    pid_t pid = ::fork();
    if (pid < 0) throw std::system_error(errno, std::generic_category(), "fork");

    if (pid == 0) {
        // Child.
        if (!cwd.empty() && ::chdir(cwd.c_str()) != 0) ::_exit(127);
        if (feed_stdin) {
            ::dup2(in_pipe[0], STDIN_FILENO);
            ::close(in_pipe[0]);
            ::close(in_pipe[1]);
        } else {
            int devnull = ::open("/dev/null", O_RDONLY);
            if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
        }
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::dup2(err_pipe[1], STDERR_FILENO);
        ::close(out_pipe[0]);
        ::close(out_pipe[1]);
        ::close(err_pipe[0]);
        ::close(err_pipe[1]);

        std::vector<char*> cargv;
        cargv.reserve(argv.size() + 1);
        for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
        cargv.push_back(nullptr);
        ::execvp(cargv[0], cargv.data());
        ::_exit(127);
    }

    // Parent.
    if (feed_stdin) detail::close_fd(in_pipe[0]);
    detail::close_fd(out_pipe[1]);
    detail::close_fd(err_pipe[1]);
    int write_fd = feed_stdin ? in_pipe[1] : -1;
    std::size_t written = 0;
    if (write_fd >= 0) {
        ::signal(SIGPIPE, SIG_IGN);
        // Nonblocking writes: a large blocking write would wedge against a
        // child that is itself blocked on its full stdout pipe.
        ::fcntl(write_fd, F_SETFL, O_NONBLOCK);
    }

    CommandResult result;
    char buf[65536];
    struct Stream {
        int fd;
        std::string* sink;
        bool open;
    };
    Stream streams[2] = {{out_pipe[0], &result.out, true}, {err_pipe[0], &result.err, true}};

    while (streams[0].open || streams[1].open || write_fd >= 0) {
        pollfd fds[3];
        nfds_t n = 0;
        for (auto& s : streams) {
            if (s.open) {
                fds[n].fd = s.fd;
                fds[n].events = POLLIN;
                ++n;
            }
        }
        if (write_fd >= 0) {
            fds[n].fd = write_fd;
            fds[n].events = POLLOUT;
            ++n;
        }
        int rc = ::poll(fds, n, -1);
        if (rc < 0) {
            if (errno == EINTR) continue;
            break;
        }
        for (nfds_t i = 0; i < n; ++i) {
            if (write_fd >= 0 && fds[i].fd == write_fd &&
                (fds[i].revents & (POLLOUT | POLLHUP | POLLERR))) {
                ssize_t sent = ::write(write_fd, stdin_data.data() + written,
                                       std::min<std::size_t>(stdin_data.size() - written, 65536));
                if (sent > 0) written += static_cast<std::size_t>(sent);
                if ((sent < 0 && errno != EINTR && errno != EAGAIN) ||
                    written == stdin_data.size()) {
                    ::close(write_fd);
                    write_fd = -1;
                }
                continue;
            }
            if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
            for (auto& s : streams) {
                if (s.open && s.fd == fds[i].fd) {
                    ssize_t got = ::read(s.fd, buf, sizeof buf);
                    if (got > 0) {
                        s.sink->append(buf, static_cast<std::size_t>(got));
                    } else if (got == 0 || (got < 0 && errno != EINTR)) {
                        detail::close_fd(s.fd);
                        s.open = false;
                    }
                }
            }
        }
    }
    if (write_fd >= 0) ::close(write_fd);

    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {}
    if (WIFEXITED(status))
        result.exit_code = WEXITSTATUS(status);
    else if (WIFSIGNALED(status))
        result.exit_code = 128 + WTERMSIG(status);
    return result;
}

}  // namespace jitvp

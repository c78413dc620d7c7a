// SPDX-License-Identifier: Apache-2.0
#include "codesynth/sandbox.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sched.h>
#include <signal.h>
#include <sys/prctl.h>
#include <sys/resource.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <mutex>
#include <sstream>
#include <thread>

#include "codesynth/error.hpp"

extern char** environ;

namespace codesynth {
namespace {

using Clock = std::chrono::steady_clock;

// Orphaned grandchildren reparent to this process so they can be reaped.
void become_subreaper() {
  static std::once_flag once;
  std::call_once(once, [] { ::prctl(PR_SET_CHILD_SUBREAPER, 1); });
}

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& o) noexcept : fd_(o.release()) {}
  Fd& operator=(Fd&& o) noexcept {
    reset(o.release());
    return *this;
  }
  ~Fd() { reset(); }
  int get() const noexcept { return fd_; }
  int release() noexcept { return std::exchange(fd_, -1); }
  void reset(int fd = -1) noexcept {
    if (fd_ >= 0) ::close(fd_);
    fd_ = fd;
  }

 private:
  int fd_ = -1;
};

std::pair<Fd, Fd> make_pipe() {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) throw Error(ErrorCode::kIoError, std::string("pipe2: ") + std::strerror(errno));
  return {Fd(fds[0]), Fd(fds[1])};
}

bool executable_file(const std::filesystem::path& p) {
  struct stat st{};
  return ::stat(p.c_str(), &st) == 0 && S_ISREG(st.st_mode) && ::access(p.c_str(), X_OK) == 0;
}

// Reads whatever is available; returns false on EOF.
bool pump(int fd, std::string& out, std::size_t cap) {
  char buf[4096];
  while (true) {
    const ssize_t n = ::read(fd, buf, sizeof buf);
    if (n > 0) {
      const std::size_t room = cap > out.size() ? cap - out.size() : 0;
      out.append(buf, std::min<std::size_t>(room, static_cast<std::size_t>(n)));
      continue;
    }
    if (n == 0) return false;
    if (errno == EINTR) continue;
    return true;  // EAGAIN
  }
}

// Async-signal-safe; used between fork and exec.
void write_file(const char* path, const char* text) {
  const int fd = ::open(path, O_WRONLY);
  if (fd < 0) return;
  (void)!::write(fd, text, std::strlen(text));
  ::close(fd);
}

void reap_group(pid_t pgid) {
  ::kill(-pgid, SIGKILL);
  int status = 0;
  while (::waitpid(-pgid, &status, 0) > 0) {
  }
}

}  // namespace

void SandboxPolicy::validate() const {
  if (!(wall_timeout_seconds > 0.0) || !std::isfinite(wall_timeout_seconds)) {
    throw Error(ErrorCode::kInvalidArgument, "sandbox wall timeout must be positive");
  }
  if (working_dir.empty()) throw Error(ErrorCode::kInvalidArgument, "sandbox working dir is not set");
}

std::optional<std::filesystem::path> find_executable(const std::string& name) {
  if (name.empty()) return std::nullopt;
  if (name.find('/') != std::string::npos) {
    return executable_file(name) ? std::optional<std::filesystem::path>(std::filesystem::absolute(name)) : std::nullopt;
  }
  const char* path = std::getenv("PATH");
  std::stringstream dirs(path ? path : "/usr/local/bin:/usr/bin:/bin");
  for (std::string dir; std::getline(dirs, dir, ':');) {
    if (dir.empty()) continue;
    auto candidate = std::filesystem::path(dir) / name;
    if (executable_file(candidate)) return candidate;
  }
  return std::nullopt;
}

ProcessResult run_sandboxed(const std::vector<std::string>& argv, const SandboxPolicy& policy,
                            Clock::time_point deadline) {
  policy.validate();
  if (argv.empty()) throw Error(ErrorCode::kInvalidArgument, "empty command");
  become_subreaper();

  // Everything the child touches is prepared before fork.
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);
  const std::string home = "HOME=" + policy.working_dir.string();
  const std::string tmp = "TMPDIR=" + policy.working_dir.string();
  std::vector<std::string> env_storage;
  for (char** e = environ; *e; ++e) {
    if (std::strncmp(*e, "HOME=", 5) == 0 || std::strncmp(*e, "TMPDIR=", 7) == 0) continue;
    env_storage.emplace_back(*e);
  }
  env_storage.push_back(home);
  env_storage.push_back(tmp);
  std::vector<char*> envp;
  for (auto& e : env_storage) envp.push_back(e.data());
  envp.push_back(nullptr);
  const std::string wd = policy.working_dir.string();
  const bool isolate_net = policy.network_disabled;
  const std::string uid_map = std::to_string(::getuid()) + " " + std::to_string(::getuid()) + " 1";
  const std::string gid_map = std::to_string(::getgid()) + " " + std::to_string(::getgid()) + " 1";

  auto [out_r, out_w] = make_pipe();
  auto [exec_r, exec_w] = make_pipe();
  const auto start = Clock::now();

  const pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorCode::kIoError, std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::setpgid(0, 0);
    ::prctl(PR_SET_PDEATHSIG, SIGKILL);
    const int devnull = ::open("/dev/null", O_RDONLY);
    if (devnull >= 0) ::dup2(devnull, 0);
    ::dup2(out_w.get(), 1);
    ::dup2(out_w.get(), 2);
    int err = 0;
    if (::chdir(wd.c_str()) != 0) {
      err = errno;
      (void)!::write(exec_w.get(), &err, sizeof err);
      ::_exit(127);
    }
    if (isolate_net && ::unshare(CLONE_NEWNET) != 0 && ::unshare(CLONE_NEWUSER | CLONE_NEWNET) == 0) {
      // Unprivileged fallback: map our own ids so file access is unchanged.
      write_file("/proc/self/setgroups", "deny");
      write_file("/proc/self/uid_map", uid_map.c_str());
      write_file("/proc/self/gid_map", gid_map.c_str());
    }
    struct rlimit no_core{0, 0};
    ::setrlimit(RLIMIT_CORE, &no_core);
    ::execve(args[0], args.data(), envp.data());
    err = errno;
    (void)!::write(exec_w.get(), &err, sizeof err);
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  out_w.reset();
  exec_w.reset();

  int child_errno = 0;
  ssize_t n;
  do {
    n = ::read(exec_r.get(), &child_errno, sizeof child_errno);
  } while (n < 0 && errno == EINTR);
  if (n == sizeof child_errno) {
    reap_group(pid);
    throw Error(ErrorCode::kToolMissing, argv[0] + ": " + std::strerror(child_errno));
  }

  ::fcntl(out_r.get(), F_SETFL, O_NONBLOCK);
  ProcessResult result;
  bool eof = false;
  int status = 0;
  while (true) {
    const pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    const auto now = Clock::now();
    if (now >= deadline) {
      result.timed_out = true;
      ::kill(-pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      break;
    }
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
    const int wait_ms = static_cast<int>(std::clamp<long long>(remaining, 1, 20));
    if (eof) {
      std::this_thread::sleep_for(std::chrono::milliseconds(wait_ms));
      continue;
    }
    pollfd pfd{out_r.get(), POLLIN, 0};
    if (::poll(&pfd, 1, wait_ms) > 0) eof = !pump(out_r.get(), result.output, policy.max_output_bytes);
  }
  // Leader is gone; take the rest of the group with it, then drain.
  reap_group(pid);
  const auto drain_deadline = Clock::now() + std::chrono::milliseconds(200);
  while (!eof && Clock::now() < drain_deadline) {
    pollfd pfd{out_r.get(), POLLIN, 0};
    if (::poll(&pfd, 1, 20) > 0) eof = !pump(out_r.get(), result.output, policy.max_output_bytes);
  }

  result.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.signal = WTERMSIG(status);
  }
  return result;
}

}  // namespace codesynth

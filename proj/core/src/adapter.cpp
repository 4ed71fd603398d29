#include "rnamf/adapter.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <pthread.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>

#include "rnamf/error.hpp"

namespace rnamf {

namespace {

class Fd {
 public:
  explicit Fd(int fd = -1) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }
  int get() const { return fd_; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_;
};

std::string describe(const AdapterSpec& spec) { return "adapter '" + spec.command + "'"; }

void kill_group(pid_t pid) {
  ::kill(-pid, SIGKILL);
  ::kill(pid, SIGKILL);
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
}

}  // namespace

double run_adapter(const AdapterSpec& spec, int level, const Eigen::VectorXd& x) {
  if (spec.command.empty()) throw AdapterError("adapter command is empty");
  io::Json request;
  request["level"] = level;
  request["x"] = std::vector<double>(x.data(), x.data() + x.size());
  const std::string line = request.dump() + "\n";

  int in_pipe[2], out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw AdapterError("pipe failed: " + std::string(std::strerror(errno)));
  Fd in_r(in_pipe[0]), in_w(in_pipe[1]);
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) throw AdapterError("pipe failed: " + std::string(std::strerror(errno)));
  Fd out_r(out_pipe[0]), out_w(out_pipe[1]);

  const pid_t pid = ::fork();
  if (pid < 0) throw AdapterError("fork failed: " + std::string(std::strerror(errno)));
  if (pid == 0) {
    ::setpgid(0, 0);
    ::signal(SIGPIPE, SIG_DFL);
    ::dup2(in_r.get(), STDIN_FILENO);
    ::dup2(out_w.get(), STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", spec.command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  in_r.reset();
  out_w.reset();

  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(spec.timeout_s);
  auto remaining_ms = [&] {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    return static_cast<int>(std::max<long long>(0, left.count()));
  };
  auto timeout = [&] {
    kill_group(pid);
    throw AdapterError(describe(spec) + " timed out after " + io::format_double(spec.timeout_s) + " s");
  };

  // Request; a child that exits without reading is reported by its status.
  sigset_t pipe_set, old_set;
  sigemptyset(&pipe_set);
  sigaddset(&pipe_set, SIGPIPE);
  ::pthread_sigmask(SIG_BLOCK, &pipe_set, &old_set);
  std::size_t written = 0;
  bool broken = false;
  while (written < line.size()) {
    pollfd p{in_w.get(), POLLOUT, 0};
    const int r = ::poll(&p, 1, remaining_ms());
    if (r == 0) {
      ::pthread_sigmask(SIG_SETMASK, &old_set, nullptr);
      timeout();
    }
    if (r < 0 && errno == EINTR) continue;
    const ssize_t n = ::write(in_w.get(), line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      broken = errno == EPIPE;
      break;
    }
    written += static_cast<std::size_t>(n);
  }
  if (broken) {
    const timespec zero{0, 0};
    ::sigtimedwait(&pipe_set, nullptr, &zero);
  }
  ::pthread_sigmask(SIG_SETMASK, &old_set, nullptr);
  in_w.reset();

  std::string output;
  char buf[4096];
  for (;;) {
    pollfd p{out_r.get(), POLLIN, 0};
    const int r = ::poll(&p, 1, remaining_ms());
    if (r == 0) timeout();
    if (r < 0) {
      if (errno == EINTR) continue;
      kill_group(pid);
      throw AdapterError(describe(spec) + ": poll failed");
    }
    const ssize_t n = ::read(out_r.get(), buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    output.append(buf, static_cast<std::size_t>(n));
    if (output.size() > (1u << 20)) {
      kill_group(pid);
      throw AdapterError(describe(spec) + ": output exceeds 1 MiB");
    }
  }

  int status = 0;
  for (;;) {
    const pid_t w = ::waitpid(pid, &status, WNOHANG);
    if (w == pid) break;
    if (w < 0 && errno != EINTR) throw AdapterError(describe(spec) + ": waitpid failed");
    if (remaining_ms() == 0) timeout();
    ::usleep(1000);
  }
  if (WIFSIGNALED(status)) throw AdapterError(describe(spec) + " killed by signal " + std::to_string(WTERMSIG(status)));
  if (WEXITSTATUS(status) != 0)
    throw AdapterError(describe(spec) + " exited with status " + std::to_string(WEXITSTATUS(status)));

  const auto first = output.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw AdapterError(describe(spec) + " produced no output");
  const auto eol = output.find('\n', first);
  const std::string reply = output.substr(first, eol == std::string::npos ? std::string::npos : eol - first);
  if (eol != std::string::npos && output.find_first_not_of(" \t\r\n", eol) != std::string::npos)
    throw AdapterError(describe(spec) + " printed more than one line");
  io::Json j;
  try {
    j = io::Json::parse(reply);
  } catch (const io::Json::parse_error&) {
    throw AdapterError(describe(spec) + " printed non-JSON output: " + reply.substr(0, 200));
  }
  if (!j.is_object() || !j.contains("y") || !j["y"].is_number())
    throw AdapterError(describe(spec) + ": expected {\"y\": number}, got " + reply.substr(0, 200));
  const double y = j["y"].get<double>();
  if (!std::isfinite(y)) throw AdapterError(describe(spec) + " returned a non-finite value");
  return y;
}

CachedSimulator::CachedSimulator(std::vector<AdapterSpec> specs) : specs_(std::move(specs)) {
  if (specs_.empty()) throw ArgumentError("at least one adapter is required");
}

std::string CachedSimulator::key(int level, const Eigen::VectorXd& x) {
  std::string k = std::to_string(level) + ":";
  for (Eigen::Index i = 0; i < x.size(); ++i) k += (i ? "," : "") + io::format_double(x[i]);
  return k;
}

double CachedSimulator::operator()(int level, const Eigen::VectorXd& x) {
  const std::string k = key(level, x);
  if (const auto it = cache_.find(k); it != cache_.end()) {
    ++hits_;
    return it->second.y;
  }
  std::size_t idx = 0;
  if (specs_.size() > 1) {
    if (level < 1 || level > static_cast<int>(specs_.size()))
      throw AdapterError("no adapter for level " + std::to_string(level));
    idx = static_cast<std::size_t>(level - 1);
  }
  ++invocations_;
  const double y = run_adapter(specs_[idx], level, x);
  cache_.emplace(k, Entry{level, x, y});
  return y;
}

void CachedSimulator::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return;
  const io::Json j = io::parse_json(io::read_file(path), path.string());
  if (!j.is_object() || !j.contains("entries") || !j["entries"].is_array())
    throw ParseError(path.string() + ": expected {\"entries\": [...]}");
  for (const auto& e : j["entries"]) {
    if (!e.is_object() || !e.contains("level") || !e.contains("x") || !e.contains("y") || !e["level"].is_number_integer() ||
        !e["x"].is_array() || !e["y"].is_number())
      throw ParseError(path.string() + ": malformed cache entry");
    Eigen::VectorXd x(static_cast<Eigen::Index>(e["x"].size()));
    for (std::size_t i = 0; i < e["x"].size(); ++i) {
      if (!e["x"][i].is_number()) throw ParseError(path.string() + ": malformed cache entry");
      x[static_cast<Eigen::Index>(i)] = e["x"][i].get<double>();
    }
    const int level = e["level"].get<int>();
    cache_.insert_or_assign(key(level, x), Entry{level, x, e["y"].get<double>()});
  }
}

void CachedSimulator::save(const std::filesystem::path& path) const {
  io::Json entries = io::Json::array();
  for (const auto& [k, e] : cache_) {
    entries.push_back({{"level", e.level}, {"x", std::vector<double>(e.x.data(), e.x.data() + e.x.size())}, {"y", e.y}});
  }
  io::write_atomic(path, io::Json{{"entries", entries}}.dump(1) + "\n");
}

}  // namespace rnamf

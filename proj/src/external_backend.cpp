#include "seqft/external_backend.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <string>

#include "seqft/error.hpp"
#include "seqft/wire.hpp"

namespace seqft {

namespace {

std::atomic<std::uint64_t> g_request_counter{0};

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    reset();
    fd_ = std::exchange(o.fd_, -1);
    return *this;
  }
  ~Fd() { reset(); }

  int get() const noexcept { return fd_; }
  void reset() noexcept {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

struct Pipe {
  Fd read;
  Fd write;
};

Pipe make_pipe() {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) {
    throw Error(ErrorCode::worker_launch_failed, std::string("pipe: ") + std::strerror(errno));
  }
  return {Fd(fds[0]), Fd(fds[1])};
}

struct WorkerOutput {
  std::string line;
  int status = 0;
};

WorkerOutput run_worker(const TrainerEndpoint& endpoint, const std::string& input) {
  if (endpoint.command.empty()) throw Error(ErrorCode::worker_launch_failed, "empty worker command");

  auto to_child = make_pipe();
  auto from_child = make_pipe();
  auto exec_status = make_pipe();

  std::vector<char*> argv;
  for (const auto& a : endpoint.command) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  const std::string workdir = endpoint.workdir.string();

  const pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorCode::worker_launch_failed, std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::dup2(to_child.read.get(), STDIN_FILENO);
    ::dup2(from_child.write.get(), STDOUT_FILENO);
    if (!workdir.empty() && ::chdir(workdir.c_str()) != 0) {
      const int err = errno;
      [[maybe_unused]] auto n = ::write(exec_status.write.get(), &err, sizeof err);
      ::_exit(127);
    }
    ::execvp(argv[0], argv.data());
    const int err = errno;
    [[maybe_unused]] auto n = ::write(exec_status.write.get(), &err, sizeof err);
    ::_exit(127);
  }

  to_child.read.reset();
  from_child.write.reset();
  exec_status.write.reset();

  int child_errno = 0;
  if (::read(exec_status.read.get(), &child_errno, sizeof child_errno) == sizeof child_errno) {
    ::waitpid(pid, nullptr, 0);
    throw Error(ErrorCode::worker_launch_failed,
                "cannot launch '" + endpoint.command.front() + "': " + std::strerror(child_errno));
  }

  const auto kill_and_reap = [&] {
    ::kill(pid, SIGKILL);
    ::waitpid(pid, nullptr, 0);
  };

  // The request is one short line; a failed write means the worker exited early.
  ::signal(SIGPIPE, SIG_IGN);
  std::size_t written = 0;
  while (written < input.size()) {
    const auto n = ::write(to_child.write.get(), input.data() + written, input.size() - written);
    if (n <= 0) break;
    written += static_cast<std::size_t>(n);
  }
  to_child.write.reset();

  const auto deadline = std::chrono::steady_clock::now() + endpoint.timeout;
  WorkerOutput out;
  char buf[4096];
  bool have_line = false;
  while (!have_line) {
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) {
      kill_and_reap();
      throw Error(ErrorCode::worker_timeout, "worker exceeded " +
                                                 std::to_string(endpoint.timeout.count()) + " ms");
    }
    pollfd pfd{from_child.read.get(), POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
    if (ready < 0 && errno == EINTR) continue;
    if (ready == 0) continue;
    const auto n = ::read(from_child.read.get(), buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    out.line.append(buf, static_cast<std::size_t>(n));
    if (const auto nl = out.line.find('\n'); nl != std::string::npos) {
      out.line.resize(nl);
      have_line = true;
    }
  }
  from_child.read.reset();

  int status = 0;
  if (have_line) {
    // A worker may linger after answering; give it the remaining time to exit.
    for (;;) {
      const pid_t r = ::waitpid(pid, &status, WNOHANG);
      if (r == pid) break;
      if (std::chrono::steady_clock::now() >= deadline) {
        kill_and_reap();
        status = 0;
        break;
      }
      ::usleep(1000);
    }
  } else {
    ::waitpid(pid, &status, 0);
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      throw Error(ErrorCode::worker_failed, "worker exited without a response (status " +
                                                std::to_string(status) + ")");
    }
    if (out.line.empty()) throw Error(ErrorCode::malformed_response, "worker produced no output");
  }
  out.status = status;
  return out;
}

}  // namespace

TrainResult external_train(const TrainRequest& request, const TrainerEndpoint& endpoint) {
  request.validate();
  std::error_code ec;
  std::filesystem::create_directories(endpoint.workdir, ec);

  const auto id = g_request_counter.fetch_add(1);
  const auto state_name = "init_" + std::to_string(::getpid()) + "_" + std::to_string(id) + ".state";
  const auto state_path = std::filesystem::absolute(endpoint.workdir / state_name);
  write_state(*request.init.state, state_path);
  struct Remove {
    std::filesystem::path path;
    ~Remove() {
      std::error_code ignored;
      std::filesystem::remove(path, ignored);
    }
  } cleanup{state_path};

  WireRequest wire{request.task_id, request.budget,        request.eval_steps,
                   request.seed,    request.init.lineage, state_path.string()};
  const auto output = run_worker(endpoint, to_line(encode_request(wire)));
  const auto response = decode_response(parse_line(output.line));
  return to_train_result(response, request, std::filesystem::absolute(endpoint.workdir));
}

ExternalBackend::ExternalBackend(TaskRegistry tasks, TrainerEndpoint endpoint, ParameterState root)
    : tasks_(std::move(tasks)), endpoint_(std::move(endpoint)), root_(std::move(root)) {}

TrainResult ExternalBackend::train(const TrainRequest& request) {
  const auto& task = tasks_.at(request.task_id);
  auto result = external_train(request, endpoint_);
  // Re-check the curve against the task's metric floor.
  result.curve = LearningCurve(result.curve.points(), task.metric.metric_id, task.metric.lower_bound);
  return result;
}

}  // namespace seqft

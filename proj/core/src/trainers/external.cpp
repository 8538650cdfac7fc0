// Copyright 2026 The GPBT Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

#include "gpbt/trainers.hpp"
#include "json.hpp"

namespace gpbt {

using nlohmann::json;

/// Worker process connected through a socketpair on its stdin/stdout.
class ExternalTrainer::Process {
 public:
  Process(const std::string& command, const std::vector<std::string>& args) {
    int fds[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) {
      throw TrainerError(std::string("socketpair failed: ") + std::strerror(errno));
    }
    pid_ = ::fork();
    if (pid_ < 0) {
      ::close(fds[0]);
      ::close(fds[1]);
      throw TrainerError(std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid_ == 0) {
      ::close(fds[0]);
      ::dup2(fds[1], STDIN_FILENO);
      ::dup2(fds[1], STDOUT_FILENO);
      ::close(fds[1]);
      std::vector<char*> argv;
      argv.push_back(const_cast<char*>(command.c_str()));
      for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
      argv.push_back(nullptr);
      ::execvp(command.c_str(), argv.data());
      ::_exit(127);
    }
    ::close(fds[1]);
    fd_ = fds[0];
  }

  ~Process() {
    if (fd_ >= 0) ::close(fd_);
    if (pid_ > 0 && !reaped_) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
    }
  }

  Process(const Process&) = delete;
  Process& operator=(const Process&) = delete;

  bool write_line(const std::string& line) {
    std::string data = line + '\n';
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      off += static_cast<std::size_t>(n);
    }
    return true;
  }

  /// nullopt on end of stream; throws TrainerError on timeout.
  std::optional<std::string> read_line(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      if (auto pos = buffer_.find('\n'); pos != std::string::npos) {
        std::string line = buffer_.substr(0, pos);
        buffer_.erase(0, pos + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (remaining.count() <= 0) throw TrainerError("external trainer timed out");
      pollfd pfd{fd_, POLLIN, 0};
      const int rc = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(remaining.count(), 1 << 30)));
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw TrainerError(std::string("poll failed: ") + std::strerror(errno));
      }
      if (rc == 0) continue;
      char chunk[4096];
      const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TrainerError(std::string("read failed: ") + std::strerror(errno));
      }
      if (n == 0) return std::nullopt;
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  /// Waits for exit and returns the exit status (128 + signal for signals).
  int reap(std::chrono::milliseconds grace) {
    if (reaped_) return status_;
    const auto deadline = std::chrono::steady_clock::now() + grace;
    int st = 0;
    for (;;) {
      const pid_t r = ::waitpid(pid_, &st, WNOHANG);
      if (r == pid_) break;
      if (r < 0 && errno != EINTR) {
        reaped_ = true;
        return status_ = -1;
      }
      if (std::chrono::steady_clock::now() > deadline) {
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, &st, 0);
        break;
      }
      ::usleep(1000);
    }
    reaped_ = true;
    status_ = WIFEXITED(st) ? WEXITSTATUS(st) : 128 + (WIFSIGNALED(st) ? WTERMSIG(st) : 0);
    return status_;
  }

 private:
  int fd_ = -1;
  pid_t pid_ = -1;
  bool reaped_ = false;
  int status_ = 0;
  std::string buffer_;
};

namespace {

json parse_reply(const std::string& line) {
  json reply;
  try {
    reply = json::parse(line);
  } catch (const json::exception&) {
    throw ProtocolError("malformed reply from external trainer: '" + line + "'");
  }
  if (!reply.is_object() || !reply.contains("ok") || !reply["ok"].is_boolean()) {
    throw ProtocolError("malformed reply from external trainer: '" + line + "'");
  }
  if (!reply["ok"].get<bool>()) {
    const auto msg = reply.contains("error") && reply["error"].is_string()
                         ? reply["error"].get<std::string>()
                         : std::string("unspecified error");
    throw TrainerError("external trainer error: " + msg);
  }
  return reply;
}

std::string state_token(const json& reply, const std::string& line) {
  if (!reply.contains("state") || reply["state"].is_null() || reply["state"].is_structured()) {
    throw ProtocolError("reply is missing a state token: '" + line + "'");
  }
  return reply["state"].dump();
}

json token_json(const TrainerState& state) {
  if (state.token.empty()) throw TrainerError("state carries no external token");
  return json::parse(state.token);
}

}  // namespace

ExternalTrainer::ExternalTrainer(std::string command, std::vector<std::string> args,
                                 SearchSpace space, std::chrono::milliseconds timeout)
    : command_(std::move(command)),
      args_(std::move(args)),
      space_(std::move(space)),
      timeout_(timeout) {}

ExternalTrainer::~ExternalTrainer() {
  try {
    shutdown();
  } catch (...) {
  }
}

void ExternalTrainer::shutdown() {
  std::lock_guard lock(mutex_);
  if (!process_) return;
  auto proc = std::move(process_);
  proc->write_line(R"({"cmd":"shutdown"})");
  const int status = proc->reap(std::chrono::seconds(5));
  if (status != 0) {
    throw TrainerError("external trainer exited with status " + std::to_string(status));
  }
}

std::string ExternalTrainer::exchange(const std::string& request) {
  std::lock_guard lock(mutex_);
  if (!process_) process_ = std::make_unique<Process>(command_, args_);
  const bool sent = process_->write_line(request);
  std::optional<std::string> line;
  if (sent) line = process_->read_line(timeout_);
  if (!line) {
    const int status = process_->reap(std::chrono::seconds(1));
    process_.reset();
    throw TrainerError("external trainer '" + command_ + "' exited with status " +
                       std::to_string(status) + " before replying");
  }
  return *line;
}

TrainerState ExternalTrainer::init(std::uint64_t seed) {
  json dims = json::array();
  for (const auto& d : space_.dims()) {
    dims.push_back({{"name", d.name},
                    {"lower", d.lower},
                    {"upper", d.upper},
                    {"scale", std::string(to_string(d.scale))}});
  }
  const json request = {{"cmd", "init"}, {"seed", seed}, {"space", dims}};
  std::string line;
  try {
    line = exchange(request.dump());
  } catch (const ProtocolError&) {
    throw;
  } catch (const TrainerError& e) {
    throw TrainerError(std::string("external trainer handshake failed: ") + e.what());
  }
  TrainerState state;
  state.token = state_token(parse_reply(line), line);
  return state;
}

void ExternalTrainer::step(TrainerState& state, const HpVector& hp, std::size_t iterations) {
  if (hp.size() != space_.size()) throw TrainerError("hp arity does not match the space");
  json hp_obj = json::object();
  for (std::size_t i = 0; i < space_.size(); ++i) hp_obj[space_[i].name] = hp[i];
  const json request = {
      {"cmd", "step"}, {"state", token_json(state)}, {"hp", hp_obj}, {"iters", iterations}};
  const auto line = exchange(request.dump());
  state.token = state_token(parse_reply(line), line);
  state.steps += iterations;
}

Evaluation ExternalTrainer::evaluate(const TrainerState& state) {
  const json request = {{"cmd", "eval"}, {"state", token_json(state)}};
  const auto line = exchange(request.dump());
  const auto reply = parse_reply(line);
  if (!reply.contains("val") || !reply["val"].is_number() || !reply.contains("test") ||
      !reply["test"].is_number()) {
    throw ProtocolError("eval reply needs numeric 'val' and 'test': '" + line + "'");
  }
  return {reply["val"].get<double>(), reply["test"].get<double>()};
}

TrainerState ExternalTrainer::fork(const TrainerState& state, std::uint64_t) {
  const json request = {{"cmd", "fork"}, {"state", token_json(state)}};
  const auto line = exchange(request.dump());
  TrainerState copy = state;
  copy.token = state_token(parse_reply(line), line);
  return copy;
}

}  // namespace gpbt

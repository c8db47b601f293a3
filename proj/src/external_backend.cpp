/*
 * Copyright 2026 The PocketRAG Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <csignal>
#include <cerrno>
#include <cstring>
#include <json.hpp>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "prag/engine.hpp"
#include "prag/errors.hpp"

namespace prag {

ExternalProcessBackend::ExternalProcessBackend(std::vector<std::string> argv, std::size_t context_limit)
    : argv_(std::move(argv)), context_limit_(context_limit) {
  if (argv_.empty()) throw ConfigError("engine.backend_command is empty");
}

ExternalProcessBackend::~ExternalProcessBackend() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    // Closing stdin is the shutdown signal; reap, escalating if it lingers.
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) return;
      ::usleep(10000);
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
  }
}

void ExternalProcessBackend::spawn() {
  std::signal(SIGPIPE, SIG_IGN);
  int in_pipe[2];
  int out_pipe[2];
  if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0) throw std::runtime_error("pipe failed: " + std::string(std::strerror(errno)));
  const pid_t pid = ::fork();
  if (pid < 0) throw std::runtime_error("fork failed: " + std::string(std::strerror(errno)));
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    std::vector<char*> args;
    for (auto& a : argv_) args.push_back(a.data());
    args.push_back(nullptr);
    ::execvp(args[0], args.data());
    std::_Exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

void ExternalProcessBackend::send(const std::string& line) {
  std::string msg = line + "\n";
  std::size_t off = 0;
  while (off < msg.size()) {
    const auto n = ::write(to_child_, msg.data() + off, msg.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error("runner write failed: " + std::string(std::strerror(errno)));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string ExternalProcessBackend::receive() {
  for (;;) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      auto line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    char chunk[4096];
    const auto n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw std::runtime_error("runner closed its output");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void ExternalProcessBackend::start(const Prompt& /*prompt*/, std::uint64_t /*seed*/) {
  if (pid_ < 0) spawn();
}

void ExternalProcessBackend::prefill(std::span<const std::string> block, KvStore& /*kv*/) {
  nlohmann::json j;
  j["op"] = "prefill";
  j["tokens"] = std::vector<std::string>(block.begin(), block.end());
  send(j.dump());
}

DecodeStep ExternalProcessBackend::decode_step(KvStore& /*kv*/) {
  send(R"({"op":"decode"})");
  const auto line = receive();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const std::exception& e) {
    throw FormatError("runner sent malformed line: " + std::string(e.what()));
  }
  DecodeStep step;
  step.token = j.value("token", std::string{});
  step.eos = j.value("eos", false);
  return step;
}

}  // namespace prag

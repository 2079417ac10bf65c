#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <httplib.h>
#include <json.hpp>

#include "sepinv/inference.hpp"
#include "sepinv/program.hpp"

namespace sepinv {

using nlohmann::ordered_json;

std::string encode_request(const InferenceRequest& req) {
  ordered_json j;
  j["assertions"] = ordered_json::array();
  for (const auto& a : req.assertions) j["assertions"].push_back(a.str());
  j["banned"] = ordered_json::array();
  for (const auto& b : req.banned) j["banned"].push_back(canonicalize(b).str());
  j["max_candidates"] = req.max_candidates;
  return j.dump();
}

InferenceRequest decode_request(const std::string& body, const PredicateRegistry* preds) {
  ordered_json j;
  try {
    j = ordered_json::parse(body);
  } catch (const ordered_json::parse_error& e) {
    throw InferenceError(std::string("malformed request: ") + e.what());
  }
  if (!j.is_object() || !j.contains("assertions") || !j["assertions"].is_array() || !j.contains("banned") ||
      !j["banned"].is_array() || !j.contains("max_candidates") || !j["max_candidates"].is_number_integer())
    throw InferenceError("request does not match the wire schema");
  InferenceRequest req;
  try {
    for (const auto& a : j["assertions"]) req.assertions.push_back(parse_assertion(a.get<std::string>(), preds));
    for (const auto& b : j["banned"]) {
      Assertion a = parse_assertion(b.get<std::string>(), preds);
      if (a.disjuncts.size() != 1) throw InferenceError("banned entry is not a conjunct");
      req.banned.push_back(canonicalize(a.disjuncts.front()));
    }
  } catch (const ParseError& e) {
    throw InferenceError(std::string("request assertion: ") + e.what());
  } catch (const ordered_json::exception& e) {
    throw InferenceError(std::string("request does not match the wire schema: ") + e.what());
  }
  req.max_candidates = j["max_candidates"].get<int>();
  return req;
}

std::string encode_response(const std::vector<Candidate>& candidates) {
  ordered_json j;
  j["candidates"] = ordered_json::array();
  for (const auto& c : candidates) j["candidates"].push_back({{"conjunct", c.str()}, {"score", c.score}});
  j["version"] = 1;
  return j.dump();
}

DecodedResponse decode_response(const std::string& body, const PredicateRegistry& preds) {
  ordered_json j;
  try {
    j = ordered_json::parse(body);
  } catch (const ordered_json::parse_error& e) {
    throw InferenceError(std::string("malformed response: ") + e.what());
  }
  if (!j.is_object() || !j.contains("candidates") || !j["candidates"].is_array() || !j.contains("version") ||
      j["version"] != 1)
    throw InferenceError("response does not match the wire schema");
  DecodedResponse out;
  for (const auto& c : j["candidates"]) {
    if (!c.is_object() || !c.contains("conjunct") || !c["conjunct"].is_string() || !c.contains("score") ||
        !c["score"].is_number() || c["score"].get<double>() < 0) {
      ++out.warnings;
      continue;
    }
    try {
      Assertion a = parse_assertion(c["conjunct"].get<std::string>(), &preds);
      if (a.disjuncts.size() != 1) {
        ++out.warnings;
        continue;
      }
      out.candidates.push_back({canonicalize(a.disjuncts.front()), c["score"].get<double>()});
    } catch (const ParseError&) {
      ++out.warnings;
    }
  }
  if (out.candidates.empty() && out.warnings > 0) throw InferenceError("every candidate in the response is invalid");
  return out;
}

RemoteBackend::RemoteBackend(std::string url, const PredicateRegistry& preds, std::chrono::milliseconds timeout)
    : preds_(preds), timeout_(timeout) {
  const std::string scheme = "http://";
  if (url.rfind(scheme, 0) == 0) url = url.substr(scheme.size());
  if (auto slash = url.find('/'); slash != std::string::npos) url = url.substr(0, slash);
  if (auto colon = url.rfind(':'); colon != std::string::npos) {
    host_ = url.substr(0, colon);
    port_ = std::stoi(url.substr(colon + 1));
  } else {
    host_ = url;
  }
  if (host_.empty()) throw InferenceError("bad endpoint url");
}

std::vector<Candidate> RemoteBackend::query(const InferenceRequest& req) {
  httplib::Client cli(host_, port_);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  cli.set_write_timeout(secs.count(), usecs.count());
  auto res = cli.Post("/infer", encode_request(req), "application/json");
  if (!res) throw InferenceError("request to " + host_ + ":" + std::to_string(port_) + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw InferenceError("server answered HTTP " + std::to_string(res->status));
  DecodedResponse d = decode_response(res->body, preds_);
  warnings_ += d.warnings;
  return std::move(d.candidates);
}

SubprocessBackend::SubprocessBackend(std::string command, const PredicateRegistry& preds,
                                     std::chrono::milliseconds timeout)
    : command_(std::move(command)), preds_(preds), timeout_(timeout) {}

SubprocessBackend::~SubprocessBackend() { stop(); }

void SubprocessBackend::start() {
  int in[2], out[2];
  if (pipe(in) != 0) throw InferenceError(std::string("pipe: ") + std::strerror(errno));
  if (pipe(out) != 0) {
    close(in[0]);
    close(in[1]);
    throw InferenceError(std::string("pipe: ") + std::strerror(errno));
  }
  pid_t pid = fork();
  if (pid < 0) throw InferenceError(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    dup2(in[0], STDIN_FILENO);
    dup2(out[1], STDOUT_FILENO);
    close(in[0]);
    close(in[1]);
    close(out[0]);
    close(out[1]);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in[0]);
  close(out[1]);
  pid_ = pid;
  to_child_ = in[1];
  from_child_ = out[0];
  buffer_.clear();
}

void SubprocessBackend::stop() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    int status = 0;
    if (waitpid(pid_, &status, WNOHANG) == 0) {
      kill(pid_, SIGTERM);
      waitpid(pid_, &status, 0);
    }
  }
  pid_ = -1;
}

std::string SubprocessBackend::read_line() {
  auto deadline = std::chrono::steady_clock::now() + timeout_;
  while (true) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw InferenceError("subprocess backend timed out");
    pollfd p{from_child_, POLLIN, 0};
    int r = poll(&p, 1, static_cast<int>(left.count()));
    if (r < 0 && errno == EINTR) continue;
    if (r < 0) throw InferenceError(std::string("poll: ") + std::strerror(errno));
    if (r == 0) continue;
    char chunk[4096];
    ssize_t got = read(from_child_, chunk, sizeof chunk);
    if (got < 0 && errno == EINTR) continue;
    if (got <= 0) throw InferenceError("subprocess backend closed its output");
    buffer_.append(chunk, static_cast<std::size_t>(got));
  }
}

std::vector<Candidate> SubprocessBackend::query(const InferenceRequest& req) {
  if (pid_ < 0) start();
  std::string line = encode_request(req) + "\n";
  signal(SIGPIPE, SIG_IGN);
  for (std::size_t done = 0; done < line.size();) {
    ssize_t w = write(to_child_, line.data() + done, line.size() - done);
    if (w < 0 && errno == EINTR) continue;
    if (w <= 0) {
      stop();
      throw InferenceError("subprocess backend is not accepting input");
    }
    done += static_cast<std::size_t>(w);
  }
  std::string reply;
  try {
    reply = read_line();
  } catch (const InferenceError&) {
    stop();
    throw;
  }
  DecodedResponse d = decode_response(reply, preds_);
  warnings_ += d.warnings;
  return std::move(d.candidates);
}

}  // namespace sepinv

#pragma once

// Conjunct-inference backends: the built-in fold-mining heuristic and
// clients for an external server speaking the JSON wire protocol.

#include <chrono>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "sepinv/assertion.hpp"
#include "sepinv/entailment.hpp"

namespace sepinv {

struct InferenceRequest {
  std::vector<Assertion> assertions;
  std::vector<SymbolicHeap> banned;  // canonical
  int max_candidates = 16;
};

struct Candidate {
  SymbolicHeap conjunct;  // canonical, no disjunction
  double score = 0;

  std::string str() const { return conjunct.str(); }
};

class InferenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string name() const = 0;
  /// Ranked candidates; banned conjuncts are removed by `infer` afterwards.
  virtual std::vector<Candidate> query(const InferenceRequest& req) = 0;
};

/// Runs the backend and applies the banned filter locally.
std::vector<Candidate> infer(Backend& backend, const InferenceRequest& req);

bool is_banned(const SymbolicHeap& conjunct, const std::vector<SymbolicHeap>& banned);

class HeuristicBackend : public Backend {
 public:
  explicit HeuristicBackend(const Prover& prover, double tau = 0.6) : prover_(prover), tau_(tau) {}
  std::string name() const override { return "heuristic"; }
  std::vector<Candidate> query(const InferenceRequest& req) override;

 private:
  const Prover& prover_;
  double tau_;
};

/// Always answers with the same list. Useful as a null or scripted backend.
class FixedBackend : public Backend {
 public:
  explicit FixedBackend(std::vector<Candidate> answer) : answer_(std::move(answer)) {}
  std::string name() const override { return "fixed"; }
  std::vector<Candidate> query(const InferenceRequest&) override { return answer_; }

 private:
  std::vector<Candidate> answer_;
};

// Wire protocol, version 1.

std::string encode_request(const InferenceRequest& req);
InferenceRequest decode_request(const std::string& body, const PredicateRegistry* preds = nullptr);
std::string encode_response(const std::vector<Candidate>& candidates);

struct DecodedResponse {
  std::vector<Candidate> candidates;
  int warnings = 0;  // unparseable conjuncts dropped
};

/// Throws InferenceError on malformed JSON, a wrong schema or when every
/// candidate is invalid.
DecodedResponse decode_response(const std::string& body, const PredicateRegistry& preds);

class RemoteBackend : public Backend {
 public:
  /// `url` is `http://host:port`; requests go to POST /infer.
  RemoteBackend(std::string url, const PredicateRegistry& preds,
                std::chrono::milliseconds timeout = std::chrono::seconds(30));
  std::string name() const override { return "remote"; }
  std::vector<Candidate> query(const InferenceRequest& req) override;
  int warnings() const { return warnings_; }

 private:
  std::string host_;
  int port_ = 80;
  const PredicateRegistry& preds_;
  std::chrono::milliseconds timeout_;
  int warnings_ = 0;
};

/// Line-delimited JSON over the stdin/stdout of a child process started
/// with `/bin/sh -c command`. The child is kept alive between queries.
class SubprocessBackend : public Backend {
 public:
  SubprocessBackend(std::string command, const PredicateRegistry& preds,
                    std::chrono::milliseconds timeout = std::chrono::seconds(30));
  ~SubprocessBackend() override;
  SubprocessBackend(const SubprocessBackend&) = delete;
  SubprocessBackend& operator=(const SubprocessBackend&) = delete;

  std::string name() const override { return "subprocess"; }
  std::vector<Candidate> query(const InferenceRequest& req) override;
  int warnings() const { return warnings_; }

 private:
  void start();
  void stop();
  std::string read_line();

  std::string command_;
  const PredicateRegistry& preds_;
  std::chrono::milliseconds timeout_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  int warnings_ = 0;
};

}  // namespace sepinv

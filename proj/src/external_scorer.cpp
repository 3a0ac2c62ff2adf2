#include "gpbeam/external_scorer.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "json.hpp"

namespace gpbeam {

ExternalScorer::ExternalScorer(const std::string& command,
                               std::set<std::string> nt_labels, StrategyId strategy,
                               SignatureConfig signature)
    : nt_labels_(std::move(nt_labels)), strategy_(strategy), signature_(signature) {
  int to_pipe[2], from_pipe[2];
  if (pipe(to_pipe) != 0 || pipe(from_pipe) != 0)
    throw std::runtime_error("external scorer: pipe failed");
  pid_ = fork();
  if (pid_ < 0) throw std::runtime_error("external scorer: fork failed");
  if (pid_ == 0) {
    dup2(to_pipe[0], STDIN_FILENO);
    dup2(from_pipe[1], STDOUT_FILENO);
    close(to_pipe[0]);
    close(to_pipe[1]);
    close(from_pipe[0]);
    close(from_pipe[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), nullptr);
    _exit(127);
  }
  close(to_pipe[0]);
  close(from_pipe[1]);
  to_child_ = fdopen(to_pipe[1], "w");
  from_child_ = fdopen(from_pipe[0], "r");
  if (!to_child_ || !from_child_)
    throw std::runtime_error("external scorer: fdopen failed");
}

ExternalScorer::~ExternalScorer() {
  if (to_child_) std::fclose(to_child_);
  if (from_child_) std::fclose(from_child_);
  if (pid_ > 0) {
    int status = 0;
    waitpid(pid_, &status, 0);
  }
}

std::map<std::string, double> ExternalScorer::roundtrip(
    const std::string& signature, const std::vector<std::string>& legal,
    const std::string& query) const {
  std::lock_guard<std::mutex> lock(mutex_);
  long id = next_id_++;
  nlohmann::json req = {{"id", id},
                        {"stack_signature", signature},
                        {"legal_actions", legal},
                        {"query", query}};
  std::string line = req.dump();
  line += '\n';
  if (std::fputs(line.c_str(), to_child_) == EOF || std::fflush(to_child_) != 0)
    throw std::runtime_error("external scorer: write failed");

  for (;;) {
    if (auto it = pending_.find(id); it != pending_.end()) {
      std::string body = std::move(it->second);
      pending_.erase(it);
      nlohmann::json reply = nlohmann::json::parse(body);
      return reply.at("logprobs").get<std::map<std::string, double>>();
    }
    char buf[65536];
    if (!std::fgets(buf, sizeof buf, from_child_))
      throw std::runtime_error("external scorer: child closed the stream");
    nlohmann::json reply = nlohmann::json::parse(buf);
    long got = reply.at("id").get<long>();
    if (got == id) return reply.at("logprobs").get<std::map<std::string, double>>();
    pending_[got] = buf;
  }
}

std::map<Action, double> ExternalScorer::action_logprob_dist(
    const ParserState& state, StrategyId strategy,
    const DerivationLimits& limits) const {
  LegalKinds kinds = legal_action_kinds(state, strategy, limits);
  std::vector<std::pair<std::string, Action>> support;
  if (kinds.nt)
    for (const std::string& label : nt_labels_)
      support.emplace_back("NT(" + label + ")", Action::nt(label));
  if (kinds.shift) support.emplace_back("SHIFT", Action::shift(""));
  if (kinds.reduce) support.emplace_back("REDUCE", Action::reduce());
  if (support.empty())
    throw std::invalid_argument("action_logprob_dist: no legal action (terminal state)");

  std::vector<std::string> legal;
  for (const auto& [key, a] : support) legal.push_back(key);
  auto logprobs = roundtrip(state_signature(state, signature_), legal, "actions");

  std::map<Action, double> dist;
  double total = 0.0;
  for (const auto& [key, a] : support) {
    auto it = logprobs.find(key);
    if (it == logprobs.end())
      throw std::runtime_error("external scorer reply lacks outcome " + key);
    dist[a] = it->second;
    total += std::exp(it->second);
  }
  if (std::abs(total - 1.0) > 1e-6)
    throw std::runtime_error("external scorer actions reply is not normalized");
  return dist;
}

std::map<std::string, double> ExternalScorer::word_logprob_dist(
    const ParserState& state) const {
  if (!legal_action_kinds(state, strategy_, DerivationLimits{}).shift)
    throw std::invalid_argument("word_logprob_dist: SHIFT is not legal here");
  return roundtrip(state_signature(state, signature_), {}, "word");
}

}  // namespace gpbeam

#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "seqft/backend.hpp"

namespace seqft {

/// A launchable worker: argv plus the directory where state files live.
struct TrainerEndpoint {
  std::vector<std::string> command;
  std::filesystem::path workdir;
  std::chrono::milliseconds timeout{60000};
};

/// Runs one worker process for `request`: writes the init state, sends one
/// request line on stdin, reads one response line from stdout.
TrainResult external_train(const TrainRequest& request, const TrainerEndpoint& endpoint);

class ExternalBackend final : public Backend {
 public:
  ExternalBackend(TaskRegistry tasks, TrainerEndpoint endpoint, ParameterState root);

  TrainResult train(const TrainRequest& request) override;
  const ParameterState& root_state() const override { return root_; }
  const TaskRegistry& tasks() const override { return tasks_; }

 private:
  TaskRegistry tasks_;
  TrainerEndpoint endpoint_;
  ParameterState root_;
};

}  // namespace seqft

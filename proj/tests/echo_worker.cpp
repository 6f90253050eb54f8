// Test double for the external trainer protocol. Reads one request line and
// answers with a fixed curve; argv[1] selects a well-formed or broken reply.

#include <chrono>
#include <iostream>
#include <string>
#include <thread>

#include <json.hpp>

#include "echo_curve.hpp"
#include "seqft/parameter_state.hpp"

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "ok";
  std::string line;
  if (!std::getline(std::cin, line)) return 4;
  const auto request = nlohmann::json::parse(line);

  if (mode == "silent") return 3;
  if (mode == "sleep") {
    std::this_thread::sleep_for(std::chrono::seconds(10));
    return 0;
  }
  if (mode == "garbage") {
    std::cout << "this is not json\n";
    return 0;
  }

  const auto steps = request.at("eval_steps").get<std::vector<std::int64_t>>();
  const auto init = seqft::read_state(request.at("init").at("state_ref").get<std::string>());
  const std::string out_ref = "echo_out_" + request.at("task_id").get<std::string>() + ".state";
  seqft::write_state(init, out_ref);

  nlohmann::json curve = nlohmann::json::array();
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (mode == "missing0" && steps[i] == 0) continue;
    curve.push_back({steps[i], seqft::testing::echo_value(steps[i], i)});
  }
  if (mode == "nonmonotone" && curve.size() >= 3) std::swap(curve[1], curve[2]);
  if (mode == "nan") curve[curve.size() - 1][1] = nullptr;
  if (mode == "short") curve.erase(curve.size() - 1);

  nlohmann::json response{{"curve", curve},
                          {"probe", {{"loss0", 0.5}, {"loss5", 0.25}, {"metric0", 0.5}, {"metric5", 0.75}}},
                          {"state_ref", out_ref}};
  std::string text = response.dump();
  if (mode == "nan_token") {
    // Emit a bare NaN literal as some JSON writers do.
    const auto close = text.find("]]");
    const auto comma = text.rfind(',', close);
    text = text.substr(0, comma + 1) + "NaN" + text.substr(close);
  }
  std::cout << text << "\n";
  return 0;
}

#include "seqft/wire.hpp"

#include <cmath>
#include <limits>

#include "seqft/error.hpp"

namespace seqft {

namespace {

using nlohmann::json;

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::malformed_response, what);
}

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) malformed(std::string("missing field '") + key + "'");
  return j.at(key);
}

double number_or_nan(const json& v, const char* what) {
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!v.is_number()) malformed(std::string(what) + " is not a number");
  return v.get<double>();
}

std::string replace_bare_non_finite(std::string_view line) {
  std::string out;
  out.reserve(line.size());
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_string) {
      out += c;
      if (c == '\\' && i + 1 < line.size()) {
        out += line[++i];
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
      out += c;
      continue;
    }
    const auto rest = line.substr(i);
    if (rest.starts_with("NaN")) {
      out += "null";
      i += 2;
    } else if (rest.starts_with("-Infinity")) {
      out += "null";
      i += 8;
    } else if (rest.starts_with("Infinity")) {
      out += "null";
      i += 7;
    } else {
      out += c;
    }
  }
  return out;
}

}  // namespace

json encode_request(const WireRequest& request) {
  return {{"task_id", request.task_id},
          {"budget", request.budget},
          {"eval_steps", request.eval_steps},
          {"seed", request.seed},
          {"init", {{"lineage", request.lineage}, {"state_ref", request.state_ref}}}};
}

WireRequest decode_request(const json& j) {
  WireRequest r;
  try {
    r.task_id = j.at("task_id").get<std::string>();
    r.budget = j.at("budget").get<std::int64_t>();
    r.eval_steps = j.at("eval_steps").get<std::vector<std::int64_t>>();
    r.seed = j.value("seed", std::uint64_t{0});
    r.lineage = j.at("init").at("lineage").get<std::vector<std::string>>();
    r.state_ref = j.at("init").at("state_ref").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema_mismatch, std::string("bad train request: ") + e.what());
  }
  return r;
}

json encode_response(const WireResponse& response) {
  json curve = json::array();
  for (const auto& p : response.curve.points()) curve.push_back(json::array({p.step, p.value}));
  json j{{"curve", std::move(curve)},
         {"probe",
          {{"loss0", response.probe.loss0},
           {"loss5", response.probe.loss5},
           {"metric0", response.probe.metric0},
           {"metric5", response.probe.metric5}}},
         {"state_ref", response.state_ref}};
  if (response.best_step) j["best_step"] = *response.best_step;
  if (response.final_state_ref) j["final_state_ref"] = *response.final_state_ref;
  return j;
}

WireResponse decode_response(const json& j) {
  if (!j.is_object()) malformed("response is not an object");
  const auto& curve = field(j, "curve");
  if (!curve.is_array()) malformed("curve is not an array");

  std::vector<LearningCurve::Point> points;
  points.reserve(curve.size());
  for (const auto& entry : curve) {
    if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number_integer()) {
      malformed("curve entries must be [integer step, value]");
    }
    points.push_back({entry[0].get<std::int64_t>(), number_or_nan(entry[1], "curve value")});
  }

  WireResponse r;
  r.curve = LearningCurve(std::move(points), "loss", -std::numeric_limits<double>::infinity());
  if (r.curve.empty() || r.curve.first_step() != 0) {
    throw Error(ErrorCode::missing_step_zero, "response curve has no step-0 evaluation");
  }

  const auto& probe = field(j, "probe");
  r.probe.loss0 = number_or_nan(field(probe, "loss0"), "probe.loss0");
  r.probe.loss5 = number_or_nan(field(probe, "loss5"), "probe.loss5");
  r.probe.metric0 = number_or_nan(field(probe, "metric0"), "probe.metric0");
  r.probe.metric5 = number_or_nan(field(probe, "metric5"), "probe.metric5");
  for (double v : {r.probe.loss0, r.probe.loss5, r.probe.metric0, r.probe.metric5}) {
    if (!std::isfinite(v)) throw Error(ErrorCode::non_finite_value, "non-finite probe value");
  }

  const auto& ref = field(j, "state_ref");
  if (!ref.is_string()) malformed("state_ref is not a string");
  r.state_ref = ref.get<std::string>();
  if (j.contains("best_step") && !j["best_step"].is_null()) {
    if (!j["best_step"].is_number_integer()) malformed("best_step is not an integer");
    r.best_step = j["best_step"].get<std::int64_t>();
  }
  if (j.contains("final_state_ref") && !j["final_state_ref"].is_null()) {
    if (!j["final_state_ref"].is_string()) malformed("final_state_ref is not a string");
    r.final_state_ref = j["final_state_ref"].get<std::string>();
  }
  return r;
}

json parse_line(std::string_view line) {
  try {
    return json::parse(line);
  } catch (const json::parse_error&) {
  }
  try {
    return json::parse(replace_bare_non_finite(line));
  } catch (const json::parse_error& e) {
    malformed(std::string("unparseable line: ") + e.what());
  }
}

std::string to_line(const json& j) { return j.dump() + '\n'; }

TrainResult to_train_result(const WireResponse& response, const TrainRequest& request,
                            const std::filesystem::path& workdir) {
  const auto resolve = [&](const std::string& ref) {
    std::filesystem::path p(ref);
    return p.is_absolute() ? p : workdir / p;
  };

  TrainResult result;
  result.curve = response.curve;
  result.probe = response.probe;
  result.best_state = read_state(resolve(response.state_ref));
  result.final_state =
      response.final_state_ref ? read_state(resolve(*response.final_state_ref)) : result.best_state;
  if (response.best_step) {
    result.best_step = *response.best_step;
  } else {
    const auto& pts = result.curve.points();
    std::size_t best = 0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      if (pts[i].value <= pts[best].value) best = i;
    }
    result.best_step = pts[best].step;
  }
  result.validate(request);
  return result;
}

}  // namespace seqft

#include "seqft/parameter_state.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include <json.hpp>

#include "seqft/error.hpp"

namespace seqft {

namespace {

constexpr std::array<std::string_view, kNumParamGroups> kGroupNames{
    "softmax", "embedding", "layers_1", "layers_2", "layers_3", "layers_4"};

std::uint64_t to_little_endian(std::uint64_t v) noexcept {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0x00000000000000ffULL) << 56) | ((v & 0x000000000000ff00ULL) << 40) |
        ((v & 0x0000000000ff0000ULL) << 24) | ((v & 0x00000000ff000000ULL) << 8) |
        ((v & 0x000000ff00000000ULL) >> 8) | ((v & 0x0000ff0000000000ULL) >> 24) |
        ((v & 0x00ff000000000000ULL) >> 40) | ((v & 0xff00000000000000ULL) >> 56);
  }
  return v;
}

}  // namespace

std::string_view group_name(ParamGroup group) noexcept {
  return kGroupNames[static_cast<std::size_t>(group)];
}

std::optional<ParamGroup> parse_group(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kNumParamGroups; ++i) {
    if (kGroupNames[i] == name) return kParamGroups[i];
  }
  return std::nullopt;
}

void write_state(const ParameterState& state, const std::filesystem::path& path) {
  nlohmann::json header;
  header["format"] = "seqft-state";
  header["version"] = 1;
  header["groups"] = nlohmann::json::array();
  for (auto g : kParamGroups) {
    header["groups"].push_back({{"id", group_name(g)}, {"length", state[g].size()}});
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write state file " + path.string());
  out << header.dump() << '\n';
  for (auto g : kParamGroups) {
    for (double v : state[g]) {
      const auto bits = to_little_endian(std::bit_cast<std::uint64_t>(v));
      char buf[8];
      std::memcpy(buf, &bits, 8);
      out.write(buf, 8);
    }
  }
  if (!out) throw Error(ErrorCode::io_error, "short write to " + path.string());
}

ParameterState read_state(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot read state file " + path.string());
  std::string line;
  std::getline(in, line);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::schema_mismatch, "bad state header in " + path.string() + ": " + e.what());
  }
  if (!header.contains("groups") || !header["groups"].is_array()) {
    throw Error(ErrorCode::schema_mismatch, "state header lacks a group list");
  }
  ParameterState state;
  std::array<bool, kNumParamGroups> seen{};
  for (const auto& entry : header["groups"]) {
    const auto id = entry.at("id").get<std::string>();
    const auto group = parse_group(id);
    if (!group) throw Error(ErrorCode::schema_mismatch, "unknown parameter group '" + id + "'");
    const auto length = entry.at("length").get<std::int64_t>();
    if (length < 0) throw Error(ErrorCode::schema_mismatch, "negative group length");
    auto& vec = state[*group];
    vec.resize(length);
    for (Eigen::Index i = 0; i < length; ++i) {
      char buf[8];
      if (!in.read(buf, 8)) throw Error(ErrorCode::io_error, "truncated state file " + path.string());
      std::uint64_t bits;
      std::memcpy(&bits, buf, 8);
      vec[i] = std::bit_cast<double>(to_little_endian(bits));
    }
    seen[static_cast<std::size_t>(*group)] = true;
  }
  for (bool s : seen) {
    if (!s) throw Error(ErrorCode::schema_mismatch, "state file is missing a parameter group");
  }
  return state;
}

}  // namespace seqft

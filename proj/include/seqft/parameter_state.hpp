#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>

#include <Eigen/Core>

namespace seqft {

/// Parameter groups: softmax, embedding, and the transformer layers collapsed
/// into four groups by depth.
enum class ParamGroup : std::uint8_t { softmax, embedding, layers_1, layers_2, layers_3, layers_4 };

inline constexpr std::size_t kNumParamGroups = 6;
inline constexpr std::array<ParamGroup, kNumParamGroups> kParamGroups{
    ParamGroup::softmax,  ParamGroup::embedding, ParamGroup::layers_1,
    ParamGroup::layers_2, ParamGroup::layers_3,  ParamGroup::layers_4};

std::string_view group_name(ParamGroup group) noexcept;
std::optional<ParamGroup> parse_group(std::string_view name) noexcept;

template <typename Scalar>
struct BasicParameterState {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::array<Vector, kNumParamGroups> groups;

  static BasicParameterState zeros(Eigen::Index dim_per_group) {
    BasicParameterState s;
    for (auto& g : s.groups) g = Vector::Zero(dim_per_group);
    return s;
  }

  Vector& operator[](ParamGroup g) { return groups[static_cast<std::size_t>(g)]; }
  const Vector& operator[](ParamGroup g) const { return groups[static_cast<std::size_t>(g)]; }

  bool same_layout(const BasicParameterState& other) const noexcept {
    for (std::size_t i = 0; i < kNumParamGroups; ++i) {
      if (groups[i].size() != other.groups[i].size()) return false;
    }
    return true;
  }

  bool all_finite() const noexcept {
    for (const auto& g : groups) {
      if (!g.allFinite()) return false;
    }
    return true;
  }

  Scalar squared_distance(const BasicParameterState& other) const {
    Scalar total(0);
    for (std::size_t i = 0; i < kNumParamGroups; ++i) {
      total += (groups[i] - other.groups[i]).squaredNorm();
    }
    return total;
  }

  friend bool operator==(const BasicParameterState& a, const BasicParameterState& b) {
    if (!a.same_layout(b)) return false;
    for (std::size_t i = 0; i < kNumParamGroups; ++i) {
      if (a.groups[i] != b.groups[i]) return false;
    }
    return true;
  }
};

using ParameterState = BasicParameterState<double>;

/// State file: a one-line JSON header listing group ids and lengths, then the
/// groups as little-endian IEEE-754 doubles in header order.
void write_state(const ParameterState& state, const std::filesystem::path& path);
ParameterState read_state(const std::filesystem::path& path);

}  // namespace seqft

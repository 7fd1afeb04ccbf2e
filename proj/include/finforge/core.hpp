#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace finforge {

enum class ErrorCode {
  invalid_argument,
  not_found,
  conflict,
  precondition,
  malformed,
  timeout,
  unavailable,
  internal,
};

std::string_view to_string(ErrorCode code);

/// Every failure in the engine surfaces as an Error carrying a stable code.
/// The gateway maps codes onto HTTP status classes and CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string detail = {})
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

/// Opaque string identifier tagged by the entity it names.
template <class Tag>
class StrongId {
 public:
  StrongId() = default;
  explicit StrongId(std::string value) : value_(std::move(value)) {}

  const std::string& str() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }

  auto operator<=>(const StrongId&) const = default;

 private:
  std::string value_;
};

using TaskId = StrongId<struct TaskIdTag>;
using AxiomId = StrongId<struct AxiomIdTag>;
using PointId = StrongId<struct PointIdTag>;
using TemplateId = StrongId<struct TemplateIdTag>;
using ItemId = StrongId<struct ItemIdTag>;
using ScenarioId = StrongId<struct ScenarioIdTag>;

/// Name table for an enum; specialize with a `names` array indexed by value.
template <class E>
struct EnumNames;

template <class E>
concept NamedEnum = requires { EnumNames<E>::names; EnumNames<E>::kind; };

template <NamedEnum E>
std::string_view enum_name(E value) {
  const auto idx = static_cast<std::size_t>(value);
  if (idx >= EnumNames<E>::names.size()) {
    throw Error(ErrorCode::internal, "enum value out of range");
  }
  return EnumNames<E>::names[idx];
}

template <NamedEnum E>
E parse_enum(std::string_view text) {
  const auto& names = EnumNames<E>::names;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == text) return static_cast<E>(i);
  }
  throw Error(ErrorCode::invalid_argument,
              "unknown " + std::string(EnumNames<E>::kind) + ": '" +
                  std::string(text) + "'");
}

/// mt19937_64 (output sequence fixed by the standard) with hand-rolled
/// conversions, since std distributions differ between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform index in [0, n); n must be positive.
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer; used to derive independent per-item seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// UTC wall clock in ISO-8601 form.
std::string utc_now_iso();

using Clock = std::function<std::string()>;

}  // namespace finforge

template <class Tag>
struct std::hash<finforge::StrongId<Tag>> {
  std::size_t operator()(const finforge::StrongId<Tag>& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};

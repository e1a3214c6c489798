#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace daycare {

// Error hierarchy. The CLI maps each class onto a process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

/// Malformed input files or data that contradicts model assumptions.
class DataError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class CapacityViolation : public Error {
 public:
  using Error::Error;
};

/// The repair loop could not reach a matching without blocking coalitions.
class NoStableMatching : public Error {
 public:
  using Error::Error;
};

/// Unreadable inputs or unwritable outputs at the filesystem level.
class IoError : public Error {
 public:
  using Error::Error;
};

template <class Tag>
struct Id {
  std::int64_t value{};

  constexpr auto operator<=>(const Id&) const = default;
};

using FacilityId = Id<struct FacilityTag>;
using ChildId = Id<struct ChildTag>;
using FamilyId = Id<struct FamilyTag>;

inline constexpr FacilityId kHome{0};

inline constexpr int kNumGrades = 6;

class Grade {
 public:
  constexpr Grade() = default;
  explicit Grade(int value) : value_(value) {
    if (value < 0 || value >= kNumGrades) {
      throw DomainError("grade " + std::to_string(value) + " outside [0,5]");
    }
  }
  constexpr int value() const { return value_; }
  constexpr auto operator<=>(const Grade&) const = default;

 private:
  int value_ = 0;
};

enum class FacilityKind { Licensed, Nonlicensed, Kindergarten, Home };

std::string_view to_string(FacilityKind kind);
FacilityKind facility_kind_from_string(std::string_view text);

enum class SiblingStatus { NoSiblings, Simultaneous, Incumbent };

inline constexpr std::array<SiblingStatus, 3> kSiblingStatuses = {
    SiblingStatus::NoSiblings, SiblingStatus::Simultaneous, SiblingStatus::Incumbent};

std::string_view to_string(SiblingStatus status);

inline constexpr int kNumCovariates = 5;

/// Column order of Z_f everywhere: files, Theta, parameter tables.
inline constexpr std::array<std::string_view, kNumCovariates> kCovariateNames = {
    "mother_full_time", "mother_part_time", "low_ses", "single_mother", "parental_leave"};

enum Covariate : int {
  kMotherFullTime = 0,
  kMotherPartTime = 1,
  kLowSes = 2,
  kSingleMother = 3,
  kParentalLeave = 4,
};

using Covariates = std::array<bool, kNumCovariates>;

}  // namespace daycare

template <class Tag>
struct std::hash<daycare::Id<Tag>> {
  std::size_t operator()(const daycare::Id<Tag>& id) const noexcept {
    return std::hash<std::int64_t>{}(id.value);
  }
};

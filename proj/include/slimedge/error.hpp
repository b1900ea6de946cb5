#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace slimedge {

enum class errc {
  duplicate_view,
  missing_view,
  non_positive_perf,
  non_positive_memory,
  importance_not_normalized,
  accuracy_floor_above_base,
  out_of_range_pruning,
  non_positive_time,
  infeasible_cap,
  unknown_sample,
  empty_class,
  insufficient_data,
  population_too_small,
  invalid_argument,
  io_error,
  parse_error,
};

constexpr std::string_view to_string(errc code) noexcept {
  switch (code) {
    case errc::duplicate_view: return "DuplicateView";
    case errc::missing_view: return "MissingView";
    case errc::non_positive_perf: return "NonPositivePerf";
    case errc::non_positive_memory: return "NonPositiveMemory";
    case errc::importance_not_normalized: return "ImportanceNotNormalized";
    case errc::accuracy_floor_above_base: return "AccuracyFloorAboveBase";
    case errc::out_of_range_pruning: return "OutOfRangePruning";
    case errc::non_positive_time: return "NonPositiveTime";
    case errc::infeasible_cap: return "InfeasibleCap";
    case errc::unknown_sample: return "UnknownSample";
    case errc::empty_class: return "EmptyClass";
    case errc::insufficient_data: return "InsufficientData";
    case errc::population_too_small: return "PopulationTooSmall";
    case errc::invalid_argument: return "InvalidArgument";
    case errc::io_error: return "IoError";
    case errc::parse_error: return "ParseError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above; the
/// message names the offending field or device.
class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

}  // namespace slimedge

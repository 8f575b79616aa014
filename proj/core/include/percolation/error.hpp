#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace perc {

enum class ErrorCode {
  kParameter,
  kFormat,
  kNotFound,
  kDuplicate,
  kConsistency,
  kInvalidRequest,
  kNoNeighbors,
  kNoPath,
  kProtocol,
  kState,
  kNoCapacity,
  kAllPathsDown,
  kConstraintViolation,
  kInsufficientPackets,
  kLogic,
  kConfig,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Malformed input, optionally located by byte offset or line number.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::optional<std::uint64_t> offset = std::nullopt,
              std::optional<std::uint64_t> line = std::nullopt)
      : Error(ErrorCode::kFormat, what), offset_(offset), line_(line) {}

  std::optional<std::uint64_t> offset() const noexcept { return offset_; }
  std::optional<std::uint64_t> line() const noexcept { return line_; }

 private:
  std::optional<std::uint64_t> offset_;
  std::optional<std::uint64_t> line_;
};

}  // namespace perc

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace isac_atr {

// Exit codes reported by the command-line tool; each error family maps to one.
enum class ErrorCode : int {
  kConfig = 2,
  kIo = 3,
  kFormat = 4,
  kInfeasible = 5,
  kDiverged = 6,
  kSizing = 7,
  kInternal = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Requested dimensions exceed the memory budget.
class SizingError : public Error {
 public:
  explicit SizingError(const std::string& what) : Error(ErrorCode::kSizing, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCode::kConfig, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCode::kIo, what) {}
};

// Bad magic, version mismatch, truncation or checksum failure.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(ErrorCode::kFormat, what) {}
};

class DivisionError : public Error {
 public:
  DivisionError(std::size_t row, std::size_t col)
      : Error(ErrorCode::kConfig, "zero divisor at subcarrier " + std::to_string(row) + ", symbol " +
                                      std::to_string(col)),
        row_(row),
        col_(col) {}
  std::size_t row() const noexcept { return row_; }
  std::size_t col() const noexcept { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error(ErrorCode::kConfig, what) {}
};

// Backward called without a matching forward.
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& what) : Error(ErrorCode::kInternal, what) {}
};

class SplitError : public Error {
 public:
  explicit SplitError(const std::string& what) : Error(ErrorCode::kConfig, what) {}
};

// Spatial dimensions collapse before the last conv block, or the config is over budget.
class InfeasibleError : public Error {
 public:
  explicit InfeasibleError(const std::string& what) : Error(ErrorCode::kInfeasible, what) {}
};

class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t epoch, const std::string& what)
      : Error(ErrorCode::kDiverged, what), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

}  // namespace isac_atr

#pragma once

#include <cassert>
#include <optional>
#include <string>
#include <utility>
#include <variant>

namespace manta {

/// Error value carried by Result. `code` is a stable machine-readable tag
/// ("unknown_topic", "schema_mismatch", ...); `message` is human detail.
struct Error {
  std::string code;
  std::string message;
};

inline Error make_error(std::string code, std::string message = {}) {
  return Error{std::move(code), std::move(message)};
}

/// Minimal expected-like type. Outcomes that callers are expected to handle
/// (rejected publishes, infeasible plans, ...) travel through Result rather
/// than exceptions.
template <typename T>
class [[nodiscard]] Result {
 public:
  Result(T value) : data_(std::move(value)) {}
  Result(Error err) : data_(std::move(err)) {}

  bool ok() const { return std::holds_alternative<T>(data_); }
  explicit operator bool() const { return ok(); }

  const T& value() const& {
    assert(ok());
    return std::get<T>(data_);
  }
  T& value() & {
    assert(ok());
    return std::get<T>(data_);
  }
  T&& take() && {
    assert(ok());
    return std::get<T>(std::move(data_));
  }

  const Error& error() const {
    assert(!ok());
    return std::get<Error>(data_);
  }

 private:
  std::variant<T, Error> data_;
};

template <>
class [[nodiscard]] Result<void> {
 public:
  Result() = default;
  Result(Error err) : err_(std::move(err)) {}

  bool ok() const { return !err_.has_value(); }
  explicit operator bool() const { return ok(); }

  const Error& error() const {
    assert(err_);
    return *err_;
  }

 private:
  std::optional<Error> err_;
};

inline Result<void> ok_result() { return Result<void>{}; }

}  // namespace manta

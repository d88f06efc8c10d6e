#pragma once

#include <stdexcept>
#include <string>

namespace crmagent {

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// A labeled field expected in a model response was missing or unreadable.
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& field)
      : std::runtime_error("missing or malformed field: " + field), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// A score fell outside the {1, 3, 5} scale.
struct ScaleError : std::runtime_error {
  explicit ScaleError(long long value)
      : std::runtime_error("score outside {1,3,5} scale: " + std::to_string(value)),
        value_(value) {}
  long long value() const { return value_; }

 private:
  long long value_;
};

struct EmptyRewriteError : std::runtime_error {
  EmptyRewriteError() : std::runtime_error("rewrite response is empty") {}
};

struct MetricUndefined : std::runtime_error {
  explicit MetricUndefined(const std::string& what) : std::runtime_error(what) {}
};

/// Transport-level provider failure, raised after the retry budget is spent.
struct ProviderError : std::runtime_error {
  explicit ProviderError(const std::string& what) : std::runtime_error(what) {}
};

struct PreconditionError : std::invalid_argument {
  explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

struct RewriteFailed : std::runtime_error {
  RewriteFailed(std::string target_key, const std::string& cause, bool transport = false)
      : std::runtime_error("rewrite failed for " + target_key + ": " + cause),
        target_key_(std::move(target_key)),
        cause_(cause),
        transport_(transport) {}
  const std::string& target_key() const { return target_key_; }
  const std::string& cause() const { return cause_; }
  bool transport() const { return transport_; }

 private:
  std::string target_key_;
  std::string cause_;
  bool transport_;
};

struct EvalFailed : std::runtime_error {
  EvalFailed(std::string target_key, const std::string& cause, bool transport = false)
      : std::runtime_error("evaluation failed for " + target_key + ": " + cause),
        target_key_(std::move(target_key)),
        cause_(cause),
        transport_(transport) {}
  const std::string& target_key() const { return target_key_; }
  const std::string& cause() const { return cause_; }
  bool transport() const { return transport_; }

 private:
  std::string target_key_;
  std::string cause_;
  bool transport_;
};

}  // namespace crmagent

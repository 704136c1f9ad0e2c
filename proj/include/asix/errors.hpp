#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "asix/types.hpp"

namespace asix {

/// Bad input data. The CLI maps these to exit code 2.
class DataError : public std::runtime_error {
 public:
  static constexpr int kExitCode = 2;
  using std::runtime_error::runtime_error;
};

/// Bad invocation. The CLI maps these to exit code 1.
class UsageError : public std::runtime_error {
 public:
  static constexpr int kExitCode = 1;
  using std::runtime_error::runtime_error;
};

class EmptyInput : public DataError {
 public:
  explicit EmptyInput(const std::string& what) : DataError("empty input: " + what) {}
};

class MalformedLine : public DataError {
 public:
  MalformedLine(std::size_t lineno, const std::string& reason)
      : DataError("line " + std::to_string(lineno) + ": " + reason), lineno_(lineno) {}
  std::size_t lineno() const { return lineno_; }

 private:
  std::size_t lineno_;
};

class LoopDetected : public DataError {
 public:
  explicit LoopDetected(ASNumber as)
      : DataError("routing loop through AS" + as.str()), as_(as) {}
  ASNumber as() const { return as_; }

 private:
  ASNumber as_;
};

class UnknownLink : public DataError {
 public:
  UnknownLink(ASNumber a, ASNumber b)
      : DataError("no link AS" + a.str() + " -> AS" + b.str()), from_(a), to_(b) {}
  ASNumber from() const { return from_; }
  ASNumber to() const { return to_; }

 private:
  ASNumber from_, to_;
};

class UnknownAS : public DataError {
 public:
  explicit UnknownAS(ASNumber as) : DataError("AS" + as.str() + " not in graph"), as_(as) {}
  ASNumber as() const { return as_; }

 private:
  ASNumber as_;
};

class NoRoute : public DataError {
 public:
  NoRoute(ASNumber src, ASNumber dst)
      : DataError("no route AS" + src.str() + " -> AS" + dst.str()) {}
};

class OverlappingPrefixes : public DataError {
 public:
  OverlappingPrefixes(IXId first, IXId second, const std::string& block)
      : DataError("IX" + first.str() + " and IX" + second.str() + " overlap on " + block),
        first_(first),
        second_(second) {}
  IXId first() const { return first_; }
  IXId second() const { return second_; }

 private:
  IXId first_, second_;
};

class NoSnapshotBefore : public DataError {
 public:
  explicit NoSnapshotBefore(long long t)
      : DataError("no relay snapshot at or before " + std::to_string(t)) {}
};

class NoEligibleRelay : public DataError {
 public:
  explicit NoEligibleRelay(const std::string& role)
      : DataError("no eligible relay for role " + role) {}
};

class MissingPathData : public DataError {
 public:
  explicit MissingPathData(const std::string& side)
      : DataError("no path data for " + side + " side") {}
};

}  // namespace asix

#pragma once

#include <stdexcept>
#include <string>

namespace qvle {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ZeroVectorError : public Error {
 public:
  ZeroVectorError() : Error("zero vector: L2 norm below 1e-30") {}
};

class DimMismatchError : public Error {
 public:
  DimMismatchError(std::size_t a, std::size_t b)
      : Error("dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("parse error at line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class DanglingIdError : public Error {
 public:
  explicit DanglingIdError(const std::string& id)
      : Error("dangling id: " + id), id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

class DuplicateIdError : public Error {
 public:
  explicit DuplicateIdError(const std::string& id)
      : Error("duplicate id: " + id), id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

class EmptyBatchError : public Error {
 public:
  EmptyBatchError() : Error("empty batch") {}
};

class BadDimsError : public Error {
 public:
  explicit BadDimsError(const std::string& what) : Error("bad dims: " + what) {}
};

class CandidateCountMismatchError : public Error {
 public:
  explicit CandidateCountMismatchError(const std::string& what)
      : Error("candidate count mismatch: " + what) {}
};

class NonFiniteError : public Error {
 public:
  explicit NonFiniteError(const std::string& where)
      : Error("non-finite value in " + where) {}
};

class ManifestMismatchError : public Error {
 public:
  explicit ManifestMismatchError(const std::string& what)
      : Error("manifest mismatch: " + what) {}
};

class EmbedderFailureError : public Error {
 public:
  explicit EmbedderFailureError(const std::string& id)
      : Error("embedder failure for instance: " + id), id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

class EmptyIndexError : public Error {
 public:
  EmptyIndexError() : Error("search on empty index") {}
};

class EmptyInstanceError : public Error {
 public:
  EmptyInstanceError() : Error("instance has no parts") {}
};

class InfeasibleSeparationError : public Error {
 public:
  explicit InfeasibleSeparationError(const std::string& what)
      : Error("infeasible separation: " + what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io error: " + what) {}
};

}  // namespace qvle

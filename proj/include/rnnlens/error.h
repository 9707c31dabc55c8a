#ifndef RNNLENS_ERROR_H_
#define RNNLENS_ERROR_H_

#include <stdexcept>
#include <string>

namespace rnnlens {

// Base class for every error raised by the library. Callers that only care
// about "something went wrong" catch this; the subclasses let the CLI and
// the HTTP layer pick exit codes and status codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent configuration (unknown keys, bad enum values,
// out-of-range numbers).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller passed an argument outside the operation's precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Matrix or vector dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Input data could not be parsed (TSV lines, lexicon entries).
class ParseError : public Error {
 public:
  using Error::Error;
};

// A word or unit was queried that has no recorded observations.
class NoObservations : public Error {
 public:
  using Error::Error;
};

// Token ids do not fit the model's vocabulary.
class VocabularyMismatch : public Error {
 public:
  using Error::Error;
};

// A requested model, word or file does not exist.
class NotFound : public Error {
 public:
  using Error::Error;
};

// Checkpoint written by an incompatible format version.
class CheckpointVersionError : public Error {
 public:
  using Error::Error;
};

// Checkpoint is not valid JSON or misses required fields.
class CheckpointCorrupt : public Error {
 public:
  using Error::Error;
};

// Loss became non-finite during training.
class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

// Numerical routine (SVD) failed to produce a usable result.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace rnnlens

#endif  // RNNLENS_ERROR_H_

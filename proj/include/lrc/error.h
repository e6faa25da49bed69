// include/lrc/error.h

// Copyright 2026  The lrcnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef LRC_ERROR_H_
#define LRC_ERROR_H_

#include <stdexcept>
#include <string>

namespace lrc {

// Base of every error thrown by the library.  The CLI maps NumericalError
// (and subclasses) to exit code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Tensor / matrix dimensions do not compose.
class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InfeasibleError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Errors raised while reading LRCM / LRCT / TOYD files.
class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};
class MagicError : public FormatError {
 public:
  using FormatError::FormatError;
};
class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};
class TruncatedError : public FormatError {
 public:
  using FormatError::FormatError;
};
class ShapeMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class SingularityError : public NumericalError {
 public:
  SingularityError(const std::string& what, int rank, int dim)
      : NumericalError(what), rank_(rank), dim_(dim) {}
  int rank() const { return rank_; }
  int dim() const { return dim_; }

 private:
  int rank_;
  int dim_;
};

class DivergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class TrainingError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace lrc

#endif  // LRC_ERROR_H_

// Copyright 2026 The cootest Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef COOTEST__ERROR_HPP_
#define COOTEST__ERROR_HPP_

#include <stdexcept>
#include <string>

namespace cootest
{

/// Base of every error raised by the harness.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or directory.
class FormatError : public Error
{
public:
  using Error::Error;
};

/// A value violates a documented invariant or precondition.
class InvalidArgument : public Error
{
public:
  using Error::Error;
};

/// An operator cannot be applied to the given scene (e.g. missing history).
class PreconditionError : public Error
{
public:
  using Error::Error;
};

}  // namespace cootest

#endif  // COOTEST__ERROR_HPP_

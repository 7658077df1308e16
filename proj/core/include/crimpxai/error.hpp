/*
 * Copyright 2026 The crimpxai Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CRIMPXAI_ERROR_HPP_
#define CRIMPXAI_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace crimpxai {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument or violated precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents. The message carries path and line where known.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace crimpxai

#endif  // CRIMPXAI_ERROR_HPP_

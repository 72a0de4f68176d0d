/*
 * flairhi - FLAIR hyperintensity enhancement toolkit
 *
 * Copyright 2026 the flairhi authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FLAIRHI_ERRORS_HPP
#define FLAIRHI_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace flairhi {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Grid dimensions of two objects do not match.
class ShapeError : public Error {
public:
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

/// Input is outside an operation's domain (empty mask, degenerate range,
/// out-of-bounds index, invalid parameter).
class DomainError : public Error {
public:
  explicit DomainError(const std::string& msg) : Error(msg) {}
};

/// A file does not conform to its declared format. Messages carry the byte
/// offset of the offending field where known.
class FormatError : public Error {
public:
  explicit FormatError(const std::string& msg) : Error(msg) {}
};

/// Operating-system level I/O failure (open, read, write, rename).
class IoError : public Error {
public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

/// Invalid configuration or generator specification.
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

} // namespace flairhi

#endif

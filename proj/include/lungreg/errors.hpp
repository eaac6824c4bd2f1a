/******************************************************************************
 * Copyright 2026 The lungreg Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *	http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *****************************************************************************/
#pragma once

#include <stdexcept>
#include <string>

namespace lungreg {

/// Raised when the registration objective stops being finite.
class NonFiniteLossError : public std::runtime_error {
public:
    NonFiniteLossError(const std::string &what, int level, int iteration)
        : std::runtime_error(what), level_(level), iteration_(iteration) {}

    int level() const { return level_; }
    int iteration() const { return iteration_; }

private:
    int level_;
    int iteration_;
};

enum class FormatErrorKind {
    MissingKey,
    SizeMismatch,
    UnsupportedType,
    ByteOrder,
    Malformed,
    Io,
};

/// File-format and I/O failures. The message carries the offending path.
class FormatError : public std::runtime_error {
public:
    FormatError(FormatErrorKind kind, const std::string &what)
        : std::runtime_error(what), kind_(kind) {}

    FormatErrorKind kind() const { return kind_; }

private:
    FormatErrorKind kind_;
};

} // namespace lungreg

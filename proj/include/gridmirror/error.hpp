// Copyright 2026 The gridmirror Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"

namespace gm {

// Error codes travel verbatim over the wire and out of the CLI.
namespace errc {
// catalog
inline constexpr const char* kAlreadyExistsConflict = "AlreadyExistsConflict";
inline constexpr const char* kInvalidName = "InvalidName";
inline constexpr const char* kUnknownLfn = "UnknownLfn";
inline constexpr const char* kNamingViolation = "NamingViolation";
inline constexpr const char* kInvalidPattern = "InvalidPattern";
inline constexpr const char* kInvalidKey = "InvalidKey";
inline constexpr const char* kInvalidValue = "InvalidValue";
inline constexpr const char* kTooManyAttributes = "TooManyAttributes";
inline constexpr const char* kIoFailure = "IoFailure";
inline constexpr const char* kCorruptSnapshot = "CorruptSnapshot";
// storage element
inline constexpr const char* kUnauthorized = "Unauthorized";
inline constexpr const char* kUnknownVo = "UnknownVo";
inline constexpr const char* kAlreadyExists = "AlreadyExists";
inline constexpr const char* kDiskFull = "DiskFull";
inline constexpr const char* kNotFound = "NotFound";
inline constexpr const char* kNotStaged = "NotStaged";
inline constexpr const char* kNotArchived = "NotArchived";
inline constexpr const char* kTransferFailed = "TransferFailed";
inline constexpr const char* kChecksumMismatch = "ChecksumMismatch";
inline constexpr const char* kDestinationDiskFull = "DestinationDiskFull";
inline constexpr const char* kSourceUnreachable = "SourceUnreachable";
// info service
inline constexpr const char* kInvalidAdvertisement = "InvalidAdvertisement";
inline constexpr const char* kUnknownSe = "UnknownSe";
inline constexpr const char* kVoNotSupported = "VoNotSupported";
// mirror daemon
inline constexpr const char* kRemoteUnreachable = "RemoteUnreachable";
inline constexpr const char* kVoNotServed = "VoNotServed";
inline constexpr const char* kAlreadyRegistered = "AlreadyRegistered";
inline constexpr const char* kNothingToPublish = "NothingToPublish";
inline constexpr const char* kUnknownOrigin = "UnknownOrigin";
// replica manager
inline constexpr const char* kResolveFailed = "ResolveFailed";
inline constexpr const char* kRegistrationFailed = "RegistrationFailed";
inline constexpr const char* kNoSourceAvailable = "NoSourceAvailable";
// harness
inline constexpr const char* kScenarioFailed = "ScenarioFailed";
// envelope / plumbing
inline constexpr const char* kBadRequest = "BadRequest";
inline constexpr const char* kUnreachable = "Unreachable";
inline constexpr const char* kInvalidConfig = "InvalidConfig";
inline constexpr const char* kInternal = "InternalError";
}  // namespace errc

/// An operation failure carrying a stable code, a human message and an
/// optional structured detail object that is relayed over the wire.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message, nlohmann::json detail = nullptr)
        : std::runtime_error(message), code_(std::move(code)), detail_(std::move(detail)) {}

    const std::string& code() const noexcept { return code_; }
    const nlohmann::json& detail() const noexcept { return detail_; }

private:
    std::string code_;
    nlohmann::json detail_;
};

/// The peer could not be reached or the message was lost.
class TransportError : public Error {
public:
    explicit TransportError(const std::string& message) : Error(errc::kUnreachable, message) {}
};

}  // namespace gm

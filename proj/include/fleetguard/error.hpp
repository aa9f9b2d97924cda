#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace fleetguard {

enum class Errc {
    // telemetry
    EmptyRange,
    NegativeInterval,
    ParseError,
    UnknownEnum,
    // matrix profile / detector
    InvalidConfig,
    LengthMismatch,
    InsufficientLength,
    ConfigMismatch,
    MissingThreshold,
    // keystore / tsa
    DuplicateKey,
    UnknownKey,
    BadImprintLength,
    CryptoFailure,
    BadPassphrase,
    DecodeError,
    // update protocol
    ExpiryInPast,
    PreconditionViolated,
    RecoveryRefused,
    // identity
    DuplicateDevice,
    UnknownDevice,
    Blacklisted,
    SecretMismatch,
    AlreadyClaimed,
    NotClaimed,
    InvalidSession,
    InvalidState,
    SecretReused,
    // deception
    ImageTooSmall,
    PlacementOutOfBounds,
    PortInUse,
    PoolTooSmall,
    NotRotationBoundary,
    RegionOutOfBounds,
    // transport / simulation
    MtuTooSmall,
    PayloadTooLarge,
    MissingFragment,
    MalformedFrame,
    ConfigError,
    UnknownAttackKind,
    Io,
};

std::string_view to_string(Errc code);

/// Base exception for every library failure. `code()` is the stable
/// machine-readable part; the message is for humans.
class Error : public std::runtime_error
{
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message)
        , code_(code)
    {
    }

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

/// Malformed CSV row. `row()` is 1-based and counts data rows only.
class ParseError : public Error
{
public:
    ParseError(std::size_t row, const std::string& message)
        : Error(Errc::ParseError, "row " + std::to_string(row) + ": " + message)
        , row_(row)
    {
    }

    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

/// Invalid scenario configuration; `path()` points at the offending field,
/// e.g. `devices[3].id`.
class ConfigError : public Error
{
public:
    ConfigError(std::string path, const std::string& message, Errc code = Errc::ConfigError)
        : Error(code, path + ": " + message)
        , path_(std::move(path))
    {
    }

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

}  // namespace fleetguard

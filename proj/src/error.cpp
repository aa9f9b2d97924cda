#include "fleetguard/error.hpp"

namespace fleetguard {

std::string_view to_string(Errc code)
{
    switch (code) {
        case Errc::EmptyRange: return "EmptyRange";
        case Errc::NegativeInterval: return "NegativeInterval";
        case Errc::ParseError: return "ParseError";
        case Errc::UnknownEnum: return "UnknownEnum";
        case Errc::InvalidConfig: return "InvalidConfig";
        case Errc::LengthMismatch: return "LengthMismatch";
        case Errc::InsufficientLength: return "InsufficientLength";
        case Errc::ConfigMismatch: return "ConfigMismatch";
        case Errc::MissingThreshold: return "MissingThreshold";
        case Errc::DuplicateKey: return "DuplicateKey";
        case Errc::UnknownKey: return "UnknownKey";
        case Errc::BadImprintLength: return "BadImprintLength";
        case Errc::CryptoFailure: return "CryptoFailure";
        case Errc::BadPassphrase: return "BadPassphrase";
        case Errc::DecodeError: return "DecodeError";
        case Errc::ExpiryInPast: return "ExpiryInPast";
        case Errc::PreconditionViolated: return "PreconditionViolated";
        case Errc::RecoveryRefused: return "RecoveryRefused";
        case Errc::DuplicateDevice: return "DuplicateDevice";
        case Errc::UnknownDevice: return "UnknownDevice";
        case Errc::Blacklisted: return "Blacklisted";
        case Errc::SecretMismatch: return "SecretMismatch";
        case Errc::AlreadyClaimed: return "AlreadyClaimed";
        case Errc::NotClaimed: return "NotClaimed";
        case Errc::InvalidSession: return "InvalidSession";
        case Errc::InvalidState: return "InvalidState";
        case Errc::SecretReused: return "SecretReused";
        case Errc::ImageTooSmall: return "ImageTooSmall";
        case Errc::PlacementOutOfBounds: return "PlacementOutOfBounds";
        case Errc::PortInUse: return "PortInUse";
        case Errc::PoolTooSmall: return "PoolTooSmall";
        case Errc::NotRotationBoundary: return "NotRotationBoundary";
        case Errc::RegionOutOfBounds: return "RegionOutOfBounds";
        case Errc::MtuTooSmall: return "MtuTooSmall";
        case Errc::PayloadTooLarge: return "PayloadTooLarge";
        case Errc::MissingFragment: return "MissingFragment";
        case Errc::MalformedFrame: return "MalformedFrame";
        case Errc::ConfigError: return "ConfigError";
        case Errc::UnknownAttackKind: return "UnknownAttackKind";
        case Errc::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace fleetguard

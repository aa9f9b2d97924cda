#pragma once

#include <optional>

#include "fleetguard/error.hpp"

namespace testutil {

/// Error code thrown by `f`, or nullopt if it returned normally.
template <typename F>
std::optional<fleetguard::Errc> errc_of(F&& f)
{
    try {
        f();
    } catch (const fleetguard::Error& e) {
        return e.code();
    }
    return std::nullopt;
}

}  // namespace testutil

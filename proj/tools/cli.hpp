#pragma once

#include <iosfwd>

namespace mind::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitConfig = 2;

/// Fixed header timestamp for runs against a scripted backend, so reruns
/// produce identical bytes.
inline constexpr const char* kScriptedCreatedAt = "2000-01-01T00:00:00Z";

/// Entry point of the `mind` executable with injectable streams.
int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

} // namespace mind::cli

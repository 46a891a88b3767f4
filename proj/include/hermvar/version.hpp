#pragma once

// The build may override both through compile definitions.
#ifndef HERMVAR_VERSION
#define HERMVAR_VERSION "0.1.0"
#endif
#ifndef HERMVAR_GIT_HASH
#define HERMVAR_GIT_HASH "unknown"
#endif

namespace hermvar {
inline constexpr const char* kVersion = HERMVAR_VERSION;
inline constexpr const char* kGitHash = HERMVAR_GIT_HASH;
}  // namespace hermvar

#pragma once

namespace ulang {

inline const char* build_revision() {
#ifdef ULANG_GIT_REV
    return ULANG_GIT_REV;
#else
    return "unknown";
#endif
}

inline const char* version() { return "0.1.0"; }

}  // namespace ulang

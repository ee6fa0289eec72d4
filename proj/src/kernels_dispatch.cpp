#include "foj/kernels.hpp"

#include <cstring>

namespace foj::kernels {

const Kernels* avx2_table();  // defined in kernels_avx2.cpp (may return null)

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Kernels* pick_default() {
    if (cpu_has_avx2() && avx2_table() != nullptr) return avx2_table();
    return &scalar();
}

const Kernels*& current() {
    static const Kernels* k = pick_default();
    return k;
}

}  // namespace

bool avx2_supported() { return cpu_has_avx2() && avx2_table() != nullptr; }

const Kernels& active() { return *current(); }

bool select(const char* name) {
    if (std::strcmp(name, "scalar") == 0) {
        current() = &scalar();
        return true;
    }
    if (std::strcmp(name, "avx2") == 0) {
        if (!avx2_supported()) return false;
        current() = avx2_table();
        return true;
    }
    return false;
}

}  // namespace foj::kernels

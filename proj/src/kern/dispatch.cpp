#include "ssmgen/kern.hpp"

#include <cstdlib>
#include <stdexcept>

namespace ssmgen::kern {
namespace {

const Ops* g_active = nullptr;

const Ops& resolve_auto() {
#if defined(__x86_64__) || defined(_M_X64)
    if (avx2_supported()) return avx2_ops();
#endif
    return scalar_ops();
}

const Ops& resolve_named(const std::string& name) {
    if (name == "scalar") return scalar_ops();
    if (name == "auto") return resolve_auto();
#if defined(__x86_64__) || defined(_M_X64)
    if (name == "avx2") {
        if (!avx2_supported()) throw std::runtime_error("avx2 backend requested but not supported by this CPU");
        return avx2_ops();
    }
#endif
    throw std::runtime_error("unknown kernel backend: " + name);
}

}  // namespace

#if defined(__x86_64__) || defined(_M_X64)
bool avx2_supported() {
    static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return ok;
}
#endif

const Ops& active() {
    if (!g_active) {
        const char* env = std::getenv("SSMGEN_SIMD");
        g_active = env ? &resolve_named(env) : &resolve_auto();
    }
    return *g_active;
}

void force_backend(const std::string& name) { g_active = &resolve_named(name); }

}  // namespace ssmgen::kern

#include "qbatt/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace qbatt::kernels {

namespace {

const KernelTable& select() {
    if (const char* env = std::getenv("QBATT_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return scalar_kernels();
        if (std::strcmp(env, "avx2") == 0) {
            if (const KernelTable* t = avx2_kernels()) return *t;
            throw std::runtime_error("QBATT_KERNELS=avx2 requested but avx2+fma not supported on this CPU");
        }
        if (std::strcmp(env, "neon") == 0) {
            if (const KernelTable* t = neon_kernels()) return *t;
            throw std::runtime_error("QBATT_KERNELS=neon requested but NEON not supported on this build");
        }
        throw std::runtime_error(std::string("unknown QBATT_KERNELS value: ") + env);
    }
    if (const KernelTable* t = avx2_kernels()) return *t;
    if (const KernelTable* t = neon_kernels()) return *t;
    return scalar_kernels();
}

}  // namespace

const KernelTable& active_kernels() {
    static const KernelTable& table = select();
    return table;
}

const char* active_kernel_name() { return active_kernels().name; }

}  // namespace qbatt::kernels

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "v2i/kernels.hpp"

namespace v2i::kernels {

namespace {

constexpr Table kScalar{scalar::convolve, scalar::weighted_index_sum, scalar::sum, scalar::abs_diff_sum,
                        scalar::scale};
#ifdef V2I_HAVE_AVX2_KERNELS
constexpr Table kAvx2{avx2::convolve, avx2::weighted_index_sum, avx2::sum, avx2::abs_diff_sum, avx2::scale};
#endif

Isa detect() {
    Isa best = isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar;
    if (const char* env = std::getenv("V2I_ISA")) {
        const std::string want(env);
        if (want == "scalar") return Isa::scalar;
        if (want == "avx2" && isa_supported(Isa::avx2)) return Isa::avx2;
    }
    return best;
}

std::atomic<Isa>& current() {
    static std::atomic<Isa> isa{detect()};
    return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_supported(Isa isa) {
    if (isa == Isa::scalar) return true;
#if defined(V2I_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void set_isa(Isa isa) {
    if (!isa_supported(isa)) throw std::invalid_argument("ISA not supported on this CPU: " + std::string(isa_name(isa)));
    current().store(isa, std::memory_order_relaxed);
}

const Table& table(Isa isa) {
#ifdef V2I_HAVE_AVX2_KERNELS
    if (isa == Isa::avx2) return kAvx2;
#endif
    (void)isa;
    return kScalar;
}

}  // namespace v2i::kernels

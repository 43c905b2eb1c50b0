#pragma once

// Data-parallel inner loops used by the compute module. Each kernel has a
// portable scalar reference and an AVX2 variant; the variant is picked once at
// runtime from the CPU features (override with V2I_ISA=scalar|avx2).

#include <span>
#include <string_view>

namespace v2i::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);
bool isa_supported(Isa isa);

/// ISA used by the dispatched entry points below.
Isa active_isa();
/// Switches the dispatched ISA; throws std::invalid_argument if unsupported.
void set_isa(Isa isa);

struct Table {
    /// out[k] = sum_i a[i] * b[k - i]; out.size() must be a.size() + b.size() - 1.
    void (*convolve)(std::span<const double> a, std::span<const double> b, std::span<double> out);
    /// sum_i p[i] * (i + offset)
    double (*weighted_index_sum)(std::span<const double> p, double offset);
    double (*sum)(std::span<const double> x);
    /// sum_i |a[i] - b[i]|
    double (*abs_diff_sum)(std::span<const double> a, std::span<const double> b);
    /// x[i] *= s
    void (*scale)(std::span<double> x, double s);
};

const Table& table(Isa isa);

inline void convolve(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    table(active_isa()).convolve(a, b, out);
}
inline double weighted_index_sum(std::span<const double> p, double offset) {
    return table(active_isa()).weighted_index_sum(p, offset);
}
inline double sum(std::span<const double> x) { return table(active_isa()).sum(x); }
inline double abs_diff_sum(std::span<const double> a, std::span<const double> b) {
    return table(active_isa()).abs_diff_sum(a, b);
}
inline void scale(std::span<double> x, double s) { table(active_isa()).scale(x, s); }

namespace scalar {
void convolve(std::span<const double> a, std::span<const double> b, std::span<double> out);
double weighted_index_sum(std::span<const double> p, double offset);
double sum(std::span<const double> x);
double abs_diff_sum(std::span<const double> a, std::span<const double> b);
void scale(std::span<double> x, double s);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define V2I_HAVE_AVX2_KERNELS 1
namespace avx2 {
void convolve(std::span<const double> a, std::span<const double> b, std::span<double> out);
double weighted_index_sum(std::span<const double> p, double offset);
double sum(std::span<const double> x);
double abs_diff_sum(std::span<const double> a, std::span<const double> b);
void scale(std::span<double> x, double s);
}  // namespace avx2
#endif

}  // namespace v2i::kernels

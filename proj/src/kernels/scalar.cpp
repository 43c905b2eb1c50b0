#include <cmath>

#include "v2i/kernels.hpp"

namespace v2i::kernels::scalar {

void convolve(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    for (double& v : out) v = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double ai = a[i];
        double* dst = out.data() + i;
        for (std::size_t j = 0; j < b.size(); ++j) dst[j] = dst[j] + ai * b[j];
    }
}

double weighted_index_sum(std::span<const double> p, double offset) {
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) acc += p[i] * (static_cast<double>(i) + offset);
    return acc;
}

double sum(std::span<const double> x) {
    double acc = 0.0;
    for (double v : x) acc += v;
    return acc;
}

double abs_diff_sum(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::fabs(a[i] - b[i]);
    return acc;
}

void scale(std::span<double> x, double s) {
    for (double& v : x) v *= s;
}

}  // namespace v2i::kernels::scalar

#include "pescourse/simd/kernels.hpp"

#include "kernels_internal.hpp"

namespace pescourse::simd {

namespace {

void bm25_weights_scalar(const Bm25Kernel& p, std::span<const std::uint32_t> tf,
                         std::span<const std::uint32_t> doc_len, std::span<double> out) {
    const double k1_plus_one = p.k1 + 1.0;
    const double one_minus_b = 1.0 - p.b;
    for (std::size_t i = 0; i < tf.size(); ++i) {
        const double f = static_cast<double>(tf[i]);
        const double len = static_cast<double>(doc_len[i]);
        const double norm = p.k1 * (one_minus_b + p.b * (len / p.avg_doc_length));
        out[i] = p.term_weight * ((f * k1_plus_one) / (f + norm));
    }
}

double dot_scalar(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double sum_scalar(std::span<const double> x) {
    double acc = 0.0;
    for (double v : x) acc += v;
    return acc;
}

double sum_sq_dev_scalar(std::span<const double> x, double mean) {
    double acc = 0.0;
    for (double v : x) {
        const double d = v - mean;
        acc += d * d;
    }
    return acc;
}

}  // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{"scalar", bm25_weights_scalar, dot_scalar, sum_scalar, sum_sq_dev_scalar};
    return table;
}

}  // namespace pescourse::simd

#include "kernels_internal.hpp"

#if defined(__AVX2__)
#include <immintrin.h>
#endif

namespace pescourse::simd::detail {

#if defined(__AVX2__)

namespace {

// Same operation order as the scalar kernel and no FMA contraction, so the
// per-lane results are bit-identical to the reference.
void bm25_weights_avx2(const Bm25Kernel& p, std::span<const std::uint32_t> tf,
                       std::span<const std::uint32_t> doc_len, std::span<double> out) {
    const std::size_t n = tf.size();
    const __m256d k1 = _mm256_set1_pd(p.k1);
    const __m256d b = _mm256_set1_pd(p.b);
    const __m256d avg = _mm256_set1_pd(p.avg_doc_length);
    const __m256d k1_plus_one = _mm256_set1_pd(p.k1 + 1.0);
    const __m256d one_minus_b = _mm256_set1_pd(1.0 - p.b);
    const __m256d weight = _mm256_set1_pd(p.term_weight);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m128i tf4 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(tf.data() + i));
        const __m128i len4 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(doc_len.data() + i));
        // Counts are far below 2^31, so the signed conversion is exact.
        const __m256d f = _mm256_cvtepi32_pd(tf4);
        const __m256d len = _mm256_cvtepi32_pd(len4);
        const __m256d norm = _mm256_mul_pd(k1, _mm256_add_pd(one_minus_b, _mm256_mul_pd(b, _mm256_div_pd(len, avg))));
        const __m256d w = _mm256_div_pd(_mm256_mul_pd(f, k1_plus_one), _mm256_add_pd(f, norm));
        _mm256_storeu_pd(out.data() + i, _mm256_mul_pd(weight, w));
    }
    for (; i < n; ++i) {
        const double f = static_cast<double>(tf[i]);
        const double len = static_cast<double>(doc_len[i]);
        const double norm = p.k1 * ((1.0 - p.b) + p.b * (len / p.avg_doc_length));
        out[i] = p.term_weight * ((f * (p.k1 + 1.0)) / (f + norm));
    }
}

double horizontal_sum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i)));
        acc1 = _mm256_add_pd(acc1,
                             _mm256_mul_pd(_mm256_loadu_pd(a.data() + i + 4), _mm256_loadu_pd(b.data() + i + 4)));
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i)));
    }
    double acc = horizontal_sum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum_avx2(std::span<const double> x) {
    const std::size_t n = x.size();
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x.data() + i));
    double total = horizontal_sum(acc);
    for (; i < n; ++i) total += x[i];
    return total;
}

double sum_sq_dev_avx2(std::span<const double> x, double mean) {
    const std::size_t n = x.size();
    const __m256d m = _mm256_set1_pd(mean);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x.data() + i), m);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    double total = horizontal_sum(acc);
    for (; i < n; ++i) {
        const double d = x[i] - mean;
        total += d * d;
    }
    return total;
}

}  // namespace

const KernelTable* avx2_table() {
    static const KernelTable table{"avx2", bm25_weights_avx2, dot_avx2, sum_avx2, sum_sq_dev_avx2};
    return &table;
}

#else

const KernelTable* avx2_table() { return nullptr; }

#endif

}  // namespace pescourse::simd::detail

#pragma once

// Data-parallel inner loops shared by retrieval, reranking and evaluation.
// Every kernel has a scalar reference implementation; wider variants are
// selected once at runtime and must agree with the reference (bit-exactly
// for bm25_weights, within reassociation error for the reductions).

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace pescourse::simd {

struct Bm25Kernel {
    double k1;
    double b;
    double avg_doc_length;
    /// weight(t) * IDF(t), folded by the caller.
    double term_weight;
};

struct KernelTable {
    std::string_view name;

    /// out[i] = term_weight * tf[i]*(k1+1) / (tf[i] + k1*(1 - b + b*len[i]/avg)).
    void (*bm25_weights)(const Bm25Kernel& p, std::span<const std::uint32_t> tf,
                         std::span<const std::uint32_t> doc_len, std::span<double> out);

    double (*dot)(std::span<const double> a, std::span<const double> b);

    double (*sum)(std::span<const double> x);

    /// sum((x[i] - mean)^2)
    double (*sum_sq_dev)(std::span<const double> x, double mean);
};

const KernelTable& scalar_kernels();

/// Null when the CPU or the build lacks AVX2.
const KernelTable* avx2_kernels();

/// The table used by the library. Chosen on first call: AVX2 when the CPU
/// supports it, else scalar. PESCOURSE_SIMD=scalar forces the reference path.
const KernelTable& active_kernels();

}  // namespace pescourse::simd

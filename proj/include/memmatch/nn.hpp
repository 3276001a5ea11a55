#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace memmatch {

/// Dense row-major matrix of doubles. All model math runs in 64-bit;
/// persisted formats downcast to f32 at the serialization boundary.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
    double* row(int r) { return a.data() + static_cast<size_t>(r) * cols; }
    const double* row(int r) const { return a.data() + static_cast<size_t>(r) * cols; }
    size_t size() const { return a.size(); }
    void zero() { std::fill(a.begin(), a.end(), 0.0); }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

// out = A * B  (A: m x k, B: k x n)
inline void matmul(const Matrix& A, const Matrix& B, Matrix& out) {
    if (A.cols != B.rows) throw std::invalid_argument("matmul: inner dimension mismatch");
    out = Matrix(A.rows, B.cols);
    for (int i = 0; i < A.rows; ++i) {
        const double* arow = A.row(i);
        double* orow = out.row(i);
        for (int k = 0; k < A.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = B.row(k);
            for (int j = 0; j < B.cols; ++j) orow[j] += aik * brow[j];
        }
    }
}

// out += A^T * B  (A: k x m, B: k x n, out: m x n)
inline void matmul_tn_acc(const Matrix& A, const Matrix& B, Matrix& out) {
    if (A.rows != B.rows) throw std::invalid_argument("matmul_tn: dimension mismatch");
    if (out.rows != A.cols || out.cols != B.cols) throw std::invalid_argument("matmul_tn: bad out shape");
    for (int k = 0; k < A.rows; ++k) {
        const double* arow = A.row(k);
        const double* brow = B.row(k);
        for (int i = 0; i < A.cols; ++i) {
            const double aki = arow[i];
            if (aki == 0.0) continue;
            double* orow = out.row(i);
            for (int j = 0; j < B.cols; ++j) orow[j] += aki * brow[j];
        }
    }
}

// out += A * B^T  (A: m x k, B: n x k, out: m x n)
inline void matmul_nt_acc(const Matrix& A, const Matrix& B, Matrix& out) {
    if (A.cols != B.cols) throw std::invalid_argument("matmul_nt: dimension mismatch");
    if (out.rows != A.rows || out.cols != B.rows) throw std::invalid_argument("matmul_nt: bad out shape");
    for (int i = 0; i < A.rows; ++i) {
        const double* arow = A.row(i);
        double* orow = out.row(i);
        for (int j = 0; j < B.rows; ++j) {
            const double* brow = B.row(j);
            double s = 0.0;
            for (int k = 0; k < A.cols; ++k) s += arow[k] * brow[k];
            orow[j] += s;
        }
    }
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// SplitMix64. Self-contained so that streams are identical across
/// standard libraries and platforms; std::uniform_* would not be.
struct Rng {
    uint64_t state;

    explicit Rng(uint64_t seed) : state(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // [0, 1)
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // [0, n)
    uint64_t next_below(uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

    /// Derive an independent stream; used to give each sub-generator
    /// (init, shuffle, corpus sampling) its own seed.
    Rng fork(uint64_t salt) {
        Rng r(state ^ (salt * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL));
        r.next_u64();
        return r;
    }
};

template <typename T>
void shuffle_inplace(std::vector<T>& v, Rng& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = rng.next_below(i);
        std::swap(v[i - 1], v[j]);
    }
}

inline void fill_uniform(Matrix& m, Rng& rng, double lo, double hi) {
    for (auto& x : m.a) x = rng.uniform(lo, hi);
}

}  // namespace memmatch

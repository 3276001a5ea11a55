#pragma once

#include <cstdint>
#include <vector>

#include "memmatch/nn.hpp"

namespace memmatch {

/// Width-1 convolution output, one row per filter; columns past n_real
/// are padding and excluded from pooling.
struct FeatureMaps {
    Matrix h;  // M x N
    int n_real = 0;

    int filters() const { return h.rows; }
};

struct MemoryVector {
    std::vector<double> g;
    std::vector<int> argmax;  // smallest position attaining each row max
    int level = 0;
    int64_t seq_id = -1;

    int filters() const { return static_cast<int>(g.size()); }
};

struct DifferenceVector {
    std::vector<double> delta;  // all entries >= 0
    int level = 0;
    int64_t query_id = -1;
    int64_t support_id = -1;
};

/// H = W * x + b applied column-wise; the mask (n_real) carries forward.
FeatureMaps feature_maps(const Matrix& x, const Matrix& w, const std::vector<double>& b, int n_real);

/// Max over non-padded positions per filter; ties take the first position.
MemoryVector memory_vector(const FeatureMaps& maps);

DifferenceVector difference(const MemoryVector& gq, const MemoryVector& gs);

double euclidean(const MemoryVector& gq, const MemoryVector& gs);
double euclidean_f32(const float* a, const float* b, int m);

/// Routes dg through the recorded argmax positions: accumulates dW and db
/// and produces dX (D x n_real).
void memory_backward(const std::vector<double>& dg, const MemoryVector& pooled, const Matrix& x,
                     const Matrix& w, Matrix& dW, std::vector<double>& db, Matrix& dX);

std::vector<float> to_f32(const std::vector<double>& v);

}  // namespace memmatch

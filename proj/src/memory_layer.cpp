#include "memmatch/memory_layer.hpp"

#include <cmath>
#include <stdexcept>

namespace memmatch {

FeatureMaps feature_maps(const Matrix& x, const Matrix& w, const std::vector<double>& b, int n_real) {
    if (w.cols != x.rows) throw std::invalid_argument("feature_maps: filter/input dimension mismatch");
    if (static_cast<int>(b.size()) != w.rows) throw std::invalid_argument("feature_maps: bias size mismatch");
    FeatureMaps maps;
    maps.n_real = n_real;
    maps.h = Matrix(w.rows, x.cols);
    for (int m = 0; m < w.rows; ++m) {
        const double* wrow = w.row(m);
        double* hrow = maps.h.row(m);
        for (int j = 0; j < x.cols; ++j) {
            double s = b[static_cast<size_t>(m)];
            for (int r = 0; r < x.rows; ++r) s += wrow[r] * x.at(r, j);
            hrow[j] = s;
        }
    }
    return maps;
}

MemoryVector memory_vector(const FeatureMaps& maps) {
    if (maps.n_real < 1) throw std::invalid_argument("memory_vector: all positions padded");
    MemoryVector out;
    out.g.resize(static_cast<size_t>(maps.filters()));
    out.argmax.resize(static_cast<size_t>(maps.filters()));
    for (int m = 0; m < maps.filters(); ++m) {
        const double* hrow = maps.h.row(m);
        double best = hrow[0];
        int best_j = 0;
        for (int j = 1; j < maps.n_real; ++j)
            if (hrow[j] > best) {
                best = hrow[j];
                best_j = j;
            }
        out.g[static_cast<size_t>(m)] = best;
        out.argmax[static_cast<size_t>(m)] = best_j;
    }
    return out;
}

DifferenceVector difference(const MemoryVector& gq, const MemoryVector& gs) {
    if (gq.level != gs.level) throw std::invalid_argument("difference: level mismatch");
    if (gq.filters() != gs.filters()) throw std::invalid_argument("difference: dimension mismatch");
    DifferenceVector d;
    d.level = gq.level;
    d.query_id = gq.seq_id;
    d.support_id = gs.seq_id;
    d.delta.resize(gq.g.size());
    for (size_t m = 0; m < gq.g.size(); ++m) d.delta[m] = std::fabs(gq.g[m] - gs.g[m]);
    return d;
}

double euclidean(const MemoryVector& gq, const MemoryVector& gs) {
    if (gq.filters() != gs.filters()) throw std::invalid_argument("euclidean: dimension mismatch");
    double s = 0.0;
    for (size_t m = 0; m < gq.g.size(); ++m) {
        const double d = gq.g[m] - gs.g[m];
        s += d * d;
    }
    return std::sqrt(s);
}

double euclidean_f32(const float* a, const float* b, int m) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        s += d * d;
    }
    return std::sqrt(s);
}

void memory_backward(const std::vector<double>& dg, const MemoryVector& pooled, const Matrix& x,
                     const Matrix& w, Matrix& dW, std::vector<double>& db, Matrix& dX) {
    const int m_filters = static_cast<int>(dg.size());
    if (dX.rows != x.rows) dX = Matrix(x.rows, x.cols);
    for (int m = 0; m < m_filters; ++m) {
        const double g = dg[static_cast<size_t>(m)];
        if (g == 0.0) continue;
        const int j = pooled.argmax[static_cast<size_t>(m)];
        double* dwrow = dW.row(m);
        const double* wrow = w.row(m);
        for (int r = 0; r < x.rows; ++r) {
            dwrow[r] += g * x.at(r, j);
            dX.at(r, j) += g * wrow[r];
        }
        db[static_cast<size_t>(m)] += g;
    }
}

std::vector<float> to_f32(const std::vector<double>& v) {
    std::vector<float> out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
    return out;
}

}  // namespace memmatch

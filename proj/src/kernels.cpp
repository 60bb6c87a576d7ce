#include "tgt/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tgt::kern {

namespace {

Mode g_mode = Mode::parallel;

// Below this many output elements the pragma is pure overhead.
constexpr std::size_t kGrain = 2048;

}  // namespace

void set_mode(Mode m) { g_mode = m; }
Mode mode() { return g_mode; }

// ---------------------------------------------------------------------------
// Serial reference. Plain loops, no tricks; the parallel versions must match
// these bitwise.
// ---------------------------------------------------------------------------

namespace serial {

void matmul(const double* a, const double* b, double* c, int m, int k,
            int n) {
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
            c[i * n + j] = s;
        }
    }
}

void matmul_acc_left(const double* g, const double* b, double* da, int m,
                     int k, int n) {
    for (int i = 0; i < m; ++i) {
        for (int p = 0; p < k; ++p) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += g[i * n + j] * b[p * n + j];
            da[i * k + p] += s;
        }
    }
}

void matmul_acc_right(const double* a, const double* g, double* db, int m,
                      int k, int n) {
    for (int p = 0; p < k; ++p) {
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int i = 0; i < m; ++i) s += a[i * k + p] * g[i * n + j];
            db[p * n + j] += s;
        }
    }
}

void transpose(const double* x, double* y, int m, int n) {
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) y[j * m + i] = x[i * n + j];
}

void transpose_acc(double* dx, const double* g, int m, int n) {
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) dx[i * n + j] += g[j * m + i];
}

void add(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void relu(const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void affine(const double* x, double s, double t, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * s + t;
}

void acc(double* dst, const double* src, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
}

void acc_scaled(double* dst, const double* src, double s, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] += src[i] * s;
}

void acc_mul(double* dst, const double* g, const double* f, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] += g[i] * f[i];
}

void acc_relu_mask(double* dst, const double* g, const double* x,
                   std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (x[i] > 0.0) dst[i] += g[i];
}

void softmax_lines(const double* x, double* y, int outer, int len,
                   int inner) {
    for (int o = 0; o < outer; ++o) {
        for (int i = 0; i < inner; ++i) {
            const std::size_t base =
                static_cast<std::size_t>(o) * len * inner + i;
            double mx = -std::numeric_limits<double>::infinity();
            for (int l = 0; l < len; ++l)
                mx = std::max(mx, x[base + static_cast<std::size_t>(l) * inner]);
            double sum = 0.0;
            for (int l = 0; l < len; ++l) {
                const std::size_t at = base + static_cast<std::size_t>(l) * inner;
                y[at] = std::exp(x[at] - mx);
                sum += y[at];
            }
            for (int l = 0; l < len; ++l)
                y[base + static_cast<std::size_t>(l) * inner] /= sum;
        }
    }
}

void softmax_backward_lines(const double* y, const double* g, double* dx,
                            int outer, int len, int inner) {
    for (int o = 0; o < outer; ++o) {
        for (int i = 0; i < inner; ++i) {
            const std::size_t base =
                static_cast<std::size_t>(o) * len * inner + i;
            double dot = 0.0;
            for (int l = 0; l < len; ++l) {
                const std::size_t at = base + static_cast<std::size_t>(l) * inner;
                dot += g[at] * y[at];
            }
            for (int l = 0; l < len; ++l) {
                const std::size_t at = base + static_cast<std::size_t>(l) * inner;
                dx[at] += y[at] * (g[at] - dot);
            }
        }
    }
}

void reduce_sum_axis(const double* x, double* y, int outer, int len,
                     int inner) {
    for (int o = 0; o < outer; ++o) {
        for (int i = 0; i < inner; ++i) {
            double s = 0.0;
            for (int l = 0; l < len; ++l)
                s += x[(static_cast<std::size_t>(o) * len + l) * inner + i];
            y[static_cast<std::size_t>(o) * inner + i] = s;
        }
    }
}

void broadcast_acc_axis(double* dx, const double* g, int outer, int len,
                        int inner) {
    for (int o = 0; o < outer; ++o)
        for (int l = 0; l < len; ++l)
            for (int i = 0; i < inner; ++i)
                dx[(static_cast<std::size_t>(o) * len + l) * inner + i] +=
                    g[static_cast<std::size_t>(o) * inner + i];
}

double sum_all(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
}

void gather_rows(const double* table, const int* idx, double* out, int count,
                 int width) {
    for (int r = 0; r < count; ++r)
        for (int c = 0; c < width; ++c)
            out[static_cast<std::size_t>(r) * width + c] =
                table[static_cast<std::size_t>(idx[r]) * width + c];
}

void scatter_rows_acc(double* table, const int* idx, const double* g,
                      int count, int width) {
    for (int r = 0; r < count; ++r)
        for (int c = 0; c < width; ++c)
            table[static_cast<std::size_t>(idx[r]) * width + c] +=
                g[static_cast<std::size_t>(r) * width + c];
}

void copy_block_axis(double* dst, const double* src, int outer, int dst_len,
                     int src_len, int offset, int inner) {
    for (int o = 0; o < outer; ++o)
        for (int l = 0; l < src_len; ++l)
            for (int i = 0; i < inner; ++i)
                dst[(static_cast<std::size_t>(o) * dst_len + offset + l) *
                        inner + i] =
                    src[(static_cast<std::size_t>(o) * src_len + l) * inner + i];
}

void acc_block_axis(double* dsrc, const double* dout, int outer, int dst_len,
                    int src_len, int offset, int inner) {
    for (int o = 0; o < outer; ++o)
        for (int l = 0; l < src_len; ++l)
            for (int i = 0; i < inner; ++i)
                dsrc[(static_cast<std::size_t>(o) * src_len + l) * inner + i] +=
                    dout[(static_cast<std::size_t>(o) * dst_len + offset + l) *
                         inner + i];
}

}  // namespace serial

// ---------------------------------------------------------------------------
// Parallel versions. Work is split across rows (or lines, or columns for the
// scatter) so no two threads touch the same output slot, and the reduction
// order inside each slot matches the serial reference exactly.
// ---------------------------------------------------------------------------

void matmul(const double* a, const double* b, double* c, int m, int k,
            int n) {
    if (g_mode == Mode::serial) return serial::matmul(a, b, c, m, k, n);
    const std::size_t work =
        static_cast<std::size_t>(m) * static_cast<std::size_t>(n);
#pragma omp parallel for schedule(static) if (work >= kGrain)
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
            c[i * n + j] = s;
        }
    }
}

void matmul_acc_left(const double* g, const double* b, double* da, int m,
                     int k, int n) {
    if (g_mode == Mode::serial)
        return serial::matmul_acc_left(g, b, da, m, k, n);
    const std::size_t work =
        static_cast<std::size_t>(m) * static_cast<std::size_t>(k);
#pragma omp parallel for schedule(static) if (work >= kGrain)
    for (int i = 0; i < m; ++i) {
        for (int p = 0; p < k; ++p) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += g[i * n + j] * b[p * n + j];
            da[i * k + p] += s;
        }
    }
}

void matmul_acc_right(const double* a, const double* g, double* db, int m,
                      int k, int n) {
    if (g_mode == Mode::serial)
        return serial::matmul_acc_right(a, g, db, m, k, n);
    const std::size_t work =
        static_cast<std::size_t>(k) * static_cast<std::size_t>(n);
#pragma omp parallel for schedule(static) if (work >= kGrain)
    for (int p = 0; p < k; ++p) {
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int i = 0; i < m; ++i) s += a[i * k + p] * g[i * n + j];
            db[p * n + j] += s;
        }
    }
}

void transpose(const double* x, double* y, int m, int n) {
    if (g_mode == Mode::serial) return serial::transpose(x, y, m, n);
    const std::size_t work =
        static_cast<std::size_t>(m) * static_cast<std::size_t>(n);
#pragma omp parallel for schedule(static) if (work >= kGrain)
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < m; ++i) y[j * m + i] = x[i * n + j];
}

void transpose_acc(double* dx, const double* g, int m, int n) {
    if (g_mode == Mode::serial) return serial::transpose_acc(dx, g, m, n);
    const std::size_t work =
        static_cast<std::size_t>(m) * static_cast<std::size_t>(n);
#pragma omp parallel for schedule(static) if (work >= kGrain)
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) dx[i * n + j] += g[j * m + i];
}

void add(const double* a, const double* b, double* out, std::size_t n) {
    if (g_mode == Mode::serial) return serial::add(a, b, out, n);
#pragma omp parallel for schedule(static) if (n >= kGrain)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        out[i] = a[i] + b[i];
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
    if (g_mode == Mode::serial) return serial::mul(a, b, out, n);
#pragma omp parallel for schedule(static) if (n >= kGrain)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        out[i] = a[i] * b[i];
}

void relu(const double* x, double* out, std::size_t n) {
    if (g_mode == Mode::serial) return serial::relu(x, out, n);
#pragma omp parallel for schedule(static) if (n >= kGrain)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void affine(const double* x, double s, double t, double* out, std::size_t n) {
    if (g_mode == Mode::serial) return serial::affine(x, s, t, out, n);
#pragma omp parallel for schedule(static) if (n >= kGrain)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        out[i] = x[i] * s + t;
}

void acc(double* dst, const double* src, std::size_t n) {
    if (g_mode == Mode::serial) return serial::acc(dst, src, n);
#pragma omp parallel for schedule(static) if (n >= kGrain)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        dst[i] += src[i];
}

void acc_scaled(double* dst, const double* src, double s, std::size_t n) {
    if (g_mode == Mode::serial) return serial::acc_scaled(dst, src, s, n);
#pragma omp parallel for schedule(static) if (n >= kGrain)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        dst[i] += src[i] * s;
}

void acc_mul(double* dst, const double* g, const double* f, std::size_t n) {
    if (g_mode == Mode::serial) return serial::acc_mul(dst, g, f, n);
#pragma omp parallel for schedule(static) if (n >= kGrain)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        dst[i] += g[i] * f[i];
}

void acc_relu_mask(double* dst, const double* g, const double* x,
                   std::size_t n) {
    if (g_mode == Mode::serial) return serial::acc_relu_mask(dst, g, x, n);
#pragma omp parallel for schedule(static) if (n >= kGrain)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        if (x[i] > 0.0) dst[i] += g[i];
}

void softmax_lines(const double* x, double* y, int outer, int len,
                   int inner) {
    if (g_mode == Mode::serial)
        return serial::softmax_lines(x, y, outer, len, inner);
    const std::size_t lines =
        static_cast<std::size_t>(outer) * static_cast<std::size_t>(inner);
#pragma omp parallel for schedule(static) if (lines * len >= kGrain)
    for (std::ptrdiff_t line = 0; line < static_cast<std::ptrdiff_t>(lines);
         ++line) {
        const int o = static_cast<int>(line) / inner;
        const int i = static_cast<int>(line) % inner;
        const std::size_t base = static_cast<std::size_t>(o) * len * inner + i;
        double mx = -std::numeric_limits<double>::infinity();
        for (int l = 0; l < len; ++l)
            mx = std::max(mx, x[base + static_cast<std::size_t>(l) * inner]);
        double sum = 0.0;
        for (int l = 0; l < len; ++l) {
            const std::size_t at = base + static_cast<std::size_t>(l) * inner;
            y[at] = std::exp(x[at] - mx);
            sum += y[at];
        }
        for (int l = 0; l < len; ++l)
            y[base + static_cast<std::size_t>(l) * inner] /= sum;
    }
}

void softmax_backward_lines(const double* y, const double* g, double* dx,
                            int outer, int len, int inner) {
    if (g_mode == Mode::serial)
        return serial::softmax_backward_lines(y, g, dx, outer, len, inner);
    const std::size_t lines =
        static_cast<std::size_t>(outer) * static_cast<std::size_t>(inner);
#pragma omp parallel for schedule(static) if (lines * len >= kGrain)
    for (std::ptrdiff_t line = 0; line < static_cast<std::ptrdiff_t>(lines);
         ++line) {
        const int o = static_cast<int>(line) / inner;
        const int i = static_cast<int>(line) % inner;
        const std::size_t base = static_cast<std::size_t>(o) * len * inner + i;
        double dot = 0.0;
        for (int l = 0; l < len; ++l) {
            const std::size_t at = base + static_cast<std::size_t>(l) * inner;
            dot += g[at] * y[at];
        }
        for (int l = 0; l < len; ++l) {
            const std::size_t at = base + static_cast<std::size_t>(l) * inner;
            dx[at] += y[at] * (g[at] - dot);
        }
    }
}

void reduce_sum_axis(const double* x, double* y, int outer, int len,
                     int inner) {
    if (g_mode == Mode::serial)
        return serial::reduce_sum_axis(x, y, outer, len, inner);
    const std::size_t lines =
        static_cast<std::size_t>(outer) * static_cast<std::size_t>(inner);
#pragma omp parallel for schedule(static) if (lines * len >= kGrain)
    for (std::ptrdiff_t line = 0; line < static_cast<std::ptrdiff_t>(lines);
         ++line) {
        const int o = static_cast<int>(line) / inner;
        const int i = static_cast<int>(line) % inner;
        double s = 0.0;
        for (int l = 0; l < len; ++l)
            s += x[(static_cast<std::size_t>(o) * len + l) * inner + i];
        y[static_cast<std::size_t>(o) * inner + i] = s;
    }
}

void broadcast_acc_axis(double* dx, const double* g, int outer, int len,
                        int inner) {
    if (g_mode == Mode::serial)
        return serial::broadcast_acc_axis(dx, g, outer, len, inner);
    const std::size_t work = static_cast<std::size_t>(outer) * len * inner;
#pragma omp parallel for schedule(static) if (work >= kGrain)
    for (int o = 0; o < outer; ++o)
        for (int l = 0; l < len; ++l)
            for (int i = 0; i < inner; ++i)
                dx[(static_cast<std::size_t>(o) * len + l) * inner + i] +=
                    g[static_cast<std::size_t>(o) * inner + i];
}

double sum_all(const double* x, std::size_t n) {
    // One fixed left-to-right pass regardless of mode; see header.
    return serial::sum_all(x, n);
}

void gather_rows(const double* table, const int* idx, double* out, int count,
                 int width) {
    if (g_mode == Mode::serial)
        return serial::gather_rows(table, idx, out, count, width);
    const std::size_t work =
        static_cast<std::size_t>(count) * static_cast<std::size_t>(width);
#pragma omp parallel for schedule(static) if (work >= kGrain)
    for (int r = 0; r < count; ++r)
        for (int c = 0; c < width; ++c)
            out[static_cast<std::size_t>(r) * width + c] =
                table[static_cast<std::size_t>(idx[r]) * width + c];
}

void scatter_rows_acc(double* table, const int* idx, const double* g,
                      int count, int width) {
    if (g_mode == Mode::serial)
        return serial::scatter_rows_acc(table, idx, g, count, width);
    // Duplicate indices hit the same row, so parallelize over columns; each
    // (row, column) slot is then owned by one thread and rows accumulate in
    // input order, same as the reference.
    const std::size_t work =
        static_cast<std::size_t>(count) * static_cast<std::size_t>(width);
#pragma omp parallel for schedule(static) if (work >= kGrain)
    for (int c = 0; c < width; ++c)
        for (int r = 0; r < count; ++r)
            table[static_cast<std::size_t>(idx[r]) * width + c] +=
                g[static_cast<std::size_t>(r) * width + c];
}

void copy_block_axis(double* dst, const double* src, int outer, int dst_len,
                     int src_len, int offset, int inner) {
    if (g_mode == Mode::serial)
        return serial::copy_block_axis(dst, src, outer, dst_len, src_len,
                                       offset, inner);
    const std::size_t work = static_cast<std::size_t>(outer) * src_len * inner;
#pragma omp parallel for schedule(static) if (work >= kGrain)
    for (int o = 0; o < outer; ++o)
        for (int l = 0; l < src_len; ++l)
            for (int i = 0; i < inner; ++i)
                dst[(static_cast<std::size_t>(o) * dst_len + offset + l) *
                        inner + i] =
                    src[(static_cast<std::size_t>(o) * src_len + l) * inner + i];
}

void acc_block_axis(double* dsrc, const double* dout, int outer, int dst_len,
                    int src_len, int offset, int inner) {
    if (g_mode == Mode::serial)
        return serial::acc_block_axis(dsrc, dout, outer, dst_len, src_len,
                                      offset, inner);
    const std::size_t work = static_cast<std::size_t>(outer) * src_len * inner;
#pragma omp parallel for schedule(static) if (work >= kGrain)
    for (int o = 0; o < outer; ++o)
        for (int l = 0; l < src_len; ++l)
            for (int i = 0; i < inner; ++i)
                dsrc[(static_cast<std::size_t>(o) * src_len + l) * inner + i] +=
                    dout[(static_cast<std::size_t>(o) * dst_len + offset + l) *
                         inner + i];
}

}  // namespace tgt::kern

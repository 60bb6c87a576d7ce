#pragma once

#include <cstddef>

namespace tgt::kern {

// The parallel kernels only split work across disjoint output slots and keep
// a fixed accumulation order within each slot, so results are bitwise
// identical to the serial reference at any thread count. The serial
// namespace below holds independently written naive loops; tests compare the
// two and the benchmark tool times them against each other.
enum class Mode { parallel, serial };

void set_mode(Mode m);
Mode mode();

// c[m*n] = a[m*k] * b[k*n], row major, c overwritten.
void matmul(const double* a, const double* b, double* c, int m, int k, int n);
// da[m*k] += g[m*n] * b[k*n]^T
void matmul_acc_left(const double* g, const double* b, double* da,
                     int m, int k, int n);
// db[k*n] += a[m*k]^T * g[m*n]
void matmul_acc_right(const double* a, const double* g, double* db,
                      int m, int k, int n);

// y[n*m] = x[m*n]^T
void transpose(const double* x, double* y, int m, int n);
// dx[m*n] += g[n*m]^T
void transpose_acc(double* dx, const double* g, int m, int n);

void add(const double* a, const double* b, double* out, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
void relu(const double* x, double* out, std::size_t n);
// out = x * s + t
void affine(const double* x, double s, double t, double* out, std::size_t n);

// dst[i] += src[i]
void acc(double* dst, const double* src, std::size_t n);
// dst[i] += src[i] * s
void acc_scaled(double* dst, const double* src, double s, std::size_t n);
// dst[i] += g[i] * f[i]
void acc_mul(double* dst, const double* g, const double* f, std::size_t n);
// dst[i] += g[i] where x[i] > 0
void acc_relu_mask(double* dst, const double* g, const double* x,
                   std::size_t n);

// Softmax over the middle axis of an (outer, len, inner) view. Entries of
// -inf are legal (attention masks) and get weight exactly 0; each line must
// contain at least one finite entry.
void softmax_lines(const double* x, double* y, int outer, int len, int inner);
// dx[line] += y * (g - sum(g * y)), per line.
void softmax_backward_lines(const double* y, const double* g, double* dx,
                            int outer, int len, int inner);

// y[outer*inner] = sum over the middle axis of x viewed as (outer,len,inner).
void reduce_sum_axis(const double* x, double* y, int outer, int len,
                     int inner);
// dx[o,l,i] += g[o,i]
void broadcast_acc_axis(double* dx, const double* g, int outer, int len,
                        int inner);

// Serial in both modes: a parallel reduction would reorder the summation.
double sum_all(const double* x, std::size_t n);

// out[r] = table[idx[r]], rows of the given width. Indices already checked.
void gather_rows(const double* table, const int* idx, double* out,
                 int count, int width);
// table[idx[r]] += g[r]; duplicate indices accumulate in input order.
void scatter_rows_acc(double* table, const int* idx, const double* g,
                      int count, int width);

// Copy src viewed as (outer, src_len, inner) into dst viewed as
// (outer, dst_len, inner) at the given offset along the middle axis.
void copy_block_axis(double* dst, const double* src, int outer, int dst_len,
                     int src_len, int offset, int inner);
// dsrc[o,l,i] += dout[o,offset+l,i]
void acc_block_axis(double* dsrc, const double* dout, int outer, int dst_len,
                    int src_len, int offset, int inner);

namespace serial {

void matmul(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_acc_left(const double* g, const double* b, double* da,
                     int m, int k, int n);
void matmul_acc_right(const double* a, const double* g, double* db,
                      int m, int k, int n);
void transpose(const double* x, double* y, int m, int n);
void transpose_acc(double* dx, const double* g, int m, int n);
void add(const double* a, const double* b, double* out, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
void relu(const double* x, double* out, std::size_t n);
void affine(const double* x, double s, double t, double* out, std::size_t n);
void acc(double* dst, const double* src, std::size_t n);
void acc_scaled(double* dst, const double* src, double s, std::size_t n);
void acc_mul(double* dst, const double* g, const double* f, std::size_t n);
void acc_relu_mask(double* dst, const double* g, const double* x,
                   std::size_t n);
void softmax_lines(const double* x, double* y, int outer, int len, int inner);
void softmax_backward_lines(const double* y, const double* g, double* dx,
                            int outer, int len, int inner);
void reduce_sum_axis(const double* x, double* y, int outer, int len,
                     int inner);
void broadcast_acc_axis(double* dx, const double* g, int outer, int len,
                        int inner);
double sum_all(const double* x, std::size_t n);
void gather_rows(const double* table, const int* idx, double* out,
                 int count, int width);
void scatter_rows_acc(double* table, const int* idx, const double* g,
                      int count, int width);
void copy_block_axis(double* dst, const double* src, int outer, int dst_len,
                     int src_len, int offset, int inner);
void acc_block_axis(double* dsrc, const double* dout, int outer, int dst_len,
                    int src_len, int offset, int inner);

}  // namespace serial

}  // namespace tgt::kern

// Times the parallel kernels against the serial reference and checks that
// both produce bitwise-identical output. Usage: tgt_bench [size]
#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "tgt/kernels.hpp"
#include "tgt/rng.hpp"

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::vector<double> random_vec(std::size_t n, tgt::Rng& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.real() * 2.0 - 1.0;
    return v;
}

bool bitwise_equal(const std::vector<double>& a,
                   const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

struct Result {
    double serial_s = 0.0;
    double parallel_s = 0.0;
    bool match = false;
};

template <typename Fn>
Result run_both(std::vector<double>& out_serial,
                std::vector<double>& out_parallel, int reps, Fn&& fn) {
    Result r;
    tgt::kern::set_mode(tgt::kern::Mode::serial);
    auto t0 = clock_type::now();
    for (int i = 0; i < reps; ++i) fn(out_serial);
    r.serial_s = seconds_since(t0) / reps;

    tgt::kern::set_mode(tgt::kern::Mode::parallel);
    t0 = clock_type::now();
    for (int i = 0; i < reps; ++i) fn(out_parallel);
    r.parallel_s = seconds_since(t0) / reps;

    r.match = bitwise_equal(out_serial, out_parallel);
    return r;
}

void report(const char* name, const Result& r) {
    std::printf("%-22s serial %10.4f ms   parallel %10.4f ms   x%5.2f   %s\n",
                name, r.serial_s * 1e3, r.parallel_s * 1e3,
                r.parallel_s > 0 ? r.serial_s / r.parallel_s : 0.0,
                r.match ? "bitwise match" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    int n = 384;
    if (argc > 1) {
        try {
            n = std::stoi(argv[1]);
        } catch (const std::exception&) {
            n = 0;
        }
        if (n < 1) {
            std::fprintf(stderr, "usage: tgt_bench [size]\n");
            return 1;
        }
    }
    const int reps = 5;
    tgt::Rng rng(12345);

    std::printf("kernel benchmark, n = %d, %d reps each\n", n, reps);

    const auto a = random_vec(static_cast<std::size_t>(n) * n, rng);
    const auto b = random_vec(static_cast<std::size_t>(n) * n, rng);
    std::vector<double> out_s(static_cast<std::size_t>(n) * n);
    std::vector<double> out_p(out_s.size());

    bool all_match = true;

    {
        auto r = run_both(out_s, out_p, reps, [&](std::vector<double>& out) {
            tgt::kern::matmul(a.data(), b.data(), out.data(), n, n, n);
        });
        report("matmul", r);
        all_match = all_match && r.match;
    }
    {
        auto r = run_both(out_s, out_p, reps, [&](std::vector<double>& out) {
            std::fill(out.begin(), out.end(), 0.0);
            tgt::kern::matmul_acc_left(a.data(), b.data(), out.data(), n, n, n);
        });
        report("matmul_acc_left", r);
        all_match = all_match && r.match;
    }
    {
        auto r = run_both(out_s, out_p, reps, [&](std::vector<double>& out) {
            tgt::kern::softmax_lines(a.data(), out.data(), n, n, 1);
        });
        report("softmax_lines", r);
        all_match = all_match && r.match;
    }
    {
        std::vector<int> idx(static_cast<std::size_t>(n) * 4);
        for (auto& i : idx) i = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        const auto g = random_vec(idx.size() * static_cast<std::size_t>(n), rng);
        auto r = run_both(out_s, out_p, reps, [&](std::vector<double>& out) {
            std::fill(out.begin(), out.end(), 0.0);
            tgt::kern::scatter_rows_acc(out.data(), idx.data(), g.data(),
                                        static_cast<int>(idx.size()), n);
        });
        report("scatter_rows_acc", r);
        all_match = all_match && r.match;
    }
    {
        auto r = run_both(out_s, out_p, reps, [&](std::vector<double>& out) {
            tgt::kern::add(a.data(), b.data(), out.data(), a.size());
        });
        report("add", r);
        all_match = all_match && r.match;
    }

    if (!all_match) {
        std::printf("FAILURE: parallel output diverged from reference\n");
        return 1;
    }
    return 0;
}

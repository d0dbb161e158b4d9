// Timings of the OpenMP kernels against the serial reference implementations
// in temu::ref. Usage: temu_bench [repeats]

#include <chrono>
#include <cstdio>
#include <omp.h>

#include "temu/glacier.hpp"
#include "temu/ref.hpp"
#include "temu/rng.hpp"
#include "temu/tensor.hpp"

using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

temu::Tensor random_tensor(const std::vector<std::size_t>& dims, std::uint64_t seed) {
    temu::Tensor t(dims);
    temu::Rng rng(temu::RngSeed{seed});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.next_double() - 0.5;
    return t;
}

template <class F>
double time_best_of(int repeats, F&& f) {
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = clock_type::now();
        f();
        best = std::min(best, seconds_since(t0));
    }
    return best;
}

void report(const char* name, double serial, double parallel) {
    std::printf("%-28s serial %8.4f s   openmp %8.4f s   speedup %5.2fx\n", name, serial,
                parallel, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
    const int repeats = argc > 1 ? std::atoi(argv[1]) : 3;
    std::printf("threads: %d, repeats: %d\n", omp_get_max_threads(), repeats);

    {
        const auto t = random_tensor({60, 50, 40, 30}, 1);
        Eigen::MatrixXd m(40, 50);
        temu::Rng rng(temu::RngSeed{2});
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.next_double() - 0.5;
        double sink = 0.0;
        const double ts = time_best_of(repeats, [&] { sink += temu::ref::mode_multiply(t, m, 1)[0]; });
        const double tp = time_best_of(repeats, [&] { sink += temu::mode_multiply(t, m, 1)[0]; });
        report("mode_multiply 60x50x40x30", ts, tp);
        std::printf("  checksum %g\n", sink);
    }

    {
        const auto t = random_tensor({24, 20, 18, 16}, 3);
        const auto f = temu::hosvd(t, {8, 8, 8, 8});
        double sink = 0.0;
        const double ts = time_best_of(repeats, [&] { sink += temu::ref::reconstruct(f)[0]; });
        const double tp = time_best_of(repeats, [&] { sink += temu::reconstruct(f)[0]; });
        report("reconstruct rank-8 core", ts, tp);
        std::printf("  checksum %g\n", sink);
    }

    {
        // Glacier tensor assembly at s = 12 (~250k cells).
        const auto gt = temu::build_glacier_tensor(12, temu::RngSeed{7});
        double sink = 0.0;
        const double ts = time_best_of(repeats, [&] {
            sink += temu::ref::build_glacier_tensor_serial(gt.design, temu::GlacierParams{})[0];
        });
        const double tp = time_best_of(repeats, [&] {
            sink += temu::build_glacier_tensor(12, temu::RngSeed{7}).values[0];
        });
        report("glacier tensor s=12", ts, tp);
        std::printf("  checksum %g\n", sink);
    }

    {
        std::vector<double> xs(1 << 22);
        temu::Rng rng(temu::RngSeed{9});
        for (auto& x : xs) x = rng.next_double();
        double sink = 0.0;
        const double ts = time_best_of(repeats, [&] { sink += temu::ref::sum_squares(xs); });
        const double tp = time_best_of(repeats, [&] { sink += temu::blocked_sum_squares(xs); });
        report("sum of squares 4M", ts, tp);
        std::printf("  checksum %g\n", sink);
    }

    return 0;
}

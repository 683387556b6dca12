// Compares the OpenMP matrix kernels against their serial reference
// implementations: verifies bitwise-identical outputs, then reports timings.
//
//   kernel_bench [rows] [inner] [cols] [repeats]

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <vector>

#include "icf/kernels.hpp"
#include "icf/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using icf::Rng;
using icf::kern::Matrix;

Matrix random_matrix(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (auto& v : m.data) v = rng.real(-1.0, 1.0);
  return m;
}

template <typename F>
double time_best_of(int repeats, F&& f) {
  double best = 1e300;
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best,
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                        .count());
  }
  return best;
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  return a.rows == b.rows && a.cols == b.cols &&
         (a.data.empty() ||
          std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0);
}

bool report(const char* name, int repeats, void (*parallel)(const Matrix&, const Matrix&,
                                                            Matrix&),
            void (*serial)(const Matrix&, const Matrix&, Matrix&), const Matrix& lhs,
            const Matrix& rhs) {
  Matrix out_p, out_s;
  const double tp = time_best_of(repeats, [&] { parallel(lhs, rhs, out_p); });
  const double ts = time_best_of(repeats, [&] { serial(lhs, rhs, out_s); });
  const bool match = bitwise_equal(out_p, out_s);
  std::printf("%-12s %12.6f %12.6f %8.2fx  %s\n", name, ts, tp, ts / tp,
              match ? "identical" : "MISMATCH");
  return match;
}

}  // namespace

int main(int argc, char** argv) {
  const int rows = argc > 1 ? std::atoi(argv[1]) : 384;
  const int inner = argc > 2 ? std::atoi(argv[2]) : 256;
  const int cols = argc > 3 ? std::atoi(argv[3]) : 192;
  const int repeats = argc > 4 ? std::atoi(argv[4]) : 5;
  if (rows < 1 || inner < 1 || cols < 1 || repeats < 1) {
    std::fprintf(stderr, "usage: kernel_bench [rows] [inner] [cols] [repeats]\n");
    return 1;
  }

#ifdef _OPENMP
  std::printf("openmp: %d thread(s)\n", omp_get_max_threads());
#else
  std::printf("openmp: disabled at build time\n");
#endif
  std::printf("shapes: rows=%d inner=%d cols=%d, best of %d\n\n", rows, inner, cols, repeats);

  Rng rng(20240601);
  const Matrix a = random_matrix(rows, inner, rng);    // matmul / nt / sqdist lhs
  const Matrix b = random_matrix(inner, cols, rng);    // matmul rhs
  const Matrix an = random_matrix(inner, rows, rng);   // matmul_tn lhs (n x r)
  const Matrix bn = random_matrix(inner, cols, rng);   // matmul_tn rhs (n x c)
  const Matrix bt = random_matrix(cols, inner, rng);   // matmul_nt rhs / sqdist rhs

  std::printf("%-12s %12s %12s %8s  %s\n", "kernel", "serial (s)", "openmp (s)", "speedup",
              "outputs");
  bool ok = true;
  ok &= report("matmul", repeats, icf::kern::matmul, icf::kern::matmul_serial, a, b);
  ok &= report("matmul_tn", repeats, icf::kern::matmul_tn, icf::kern::matmul_tn_serial, an,
               bn);
  ok &= report("matmul_nt", repeats, icf::kern::matmul_nt, icf::kern::matmul_nt_serial, a,
               bt);

  {
    std::vector<double> q(static_cast<std::size_t>(inner), 0.25);
    std::vector<double> dist_p, dist_s;
    const double tp =
        time_best_of(repeats, [&] { icf::kern::row_sqdist(a, q.data(), dist_p); });
    const double ts =
        time_best_of(repeats, [&] { icf::kern::row_sqdist_serial(a, q.data(), dist_s); });
    const bool match =
        dist_p.size() == dist_s.size() &&
        std::memcmp(dist_p.data(), dist_s.data(), dist_p.size() * sizeof(double)) == 0;
    std::printf("%-12s %12.6f %12.6f %8.2fx  %s\n", "row_sqdist", ts, tp, ts / tp,
                match ? "identical" : "MISMATCH");
    ok &= match;
  }

  if (!ok) {
    std::fprintf(stderr, "\nserial and OpenMP kernels disagree\n");
    return 1;
  }
  return 0;
}

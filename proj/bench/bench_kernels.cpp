// Timing comparison of the OpenMP kernels against their serial reference
// implementations: Hamiltonian coefficient assembly over a grid sweep and
// Monte-Carlo path simulation.

#include <chrono>
#include <cstdio>
#include <vector>

#include "erc/feynman_kac.hpp"
#include "erc/hamiltonian.hpp"
#include "erc/parallel.hpp"
#include "erc/problems.hpp"
#include "erc/quadrature.hpp"

namespace {

double wall() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

template <class F>
double time_best_of(int reps, F&& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t0 = wall();
        f();
        best = std::min(best, wall() - t0);
    }
    return best;
}

} // namespace

int main() {
    using namespace erc;
    const ProblemSpec spec = smooth_benchmark();
    const ControlProblem problem = spec.build();
    const ActionQuadrature quad =
        ActionQuadrature::gauss_legendre(problem.action_lo, problem.action_hi, 32);

    std::printf("workers: %d\n\n", par::worker_count());
    std::printf("%-34s %12s %12s %8s\n", "kernel", "serial [s]", "openmp [s]", "speedup");

    {
        const int n = 20000;
        std::vector<double> xs(n), zs(n);
        for (int i = 0; i < n; ++i) {
            xs[i] = -6.0 + 12.0 * i / (n - 1);
            zs[i] = 0.3 * std::sin(0.01 * i);
        }
        HamiltonianTable serial_out, parallel_out;
        const double ts = time_best_of(3, [&] {
            serial_out = assemble_hamiltonian_table_serial(problem, quad, xs, zs, {}, true);
        });
        const double tp = time_best_of(3, [&] {
            parallel_out = assemble_hamiltonian_table(problem, quad, xs, zs, {}, true);
        });
        const bool same = serial_out.h == parallel_out.h && serial_out.h_z == parallel_out.h_z &&
                          serial_out.density == parallel_out.density;
        std::printf("%-34s %12.4f %12.4f %7.2fx  %s\n", "hamiltonian assembly (20k nodes)", ts, tp,
                    ts / tp, same ? "bit-identical" : "MISMATCH");
    }

    {
        const SdeSpec sde = SdeSpec::brownian();
        PathBundle serial_pb, parallel_pb;
        const double ts = time_best_of(3, [&] {
            par::set_worker_count(1);
            serial_pb = simulate_paths(sde, 0.0, 1.0, 40000, 1e-3, 7);
        });
        const double tp = time_best_of(3, [&] {
            par::set_worker_count(0); // environment default
            parallel_pb = simulate_paths(sde, 0.0, 1.0, 40000, 1e-3, 7);
        });
        const bool same = serial_pb.x_final == parallel_pb.x_final &&
                          serial_pb.weight_final == parallel_pb.weight_final;
        std::printf("%-34s %12.4f %12.4f %7.2fx  %s\n", "path simulation (40k x 1000)", ts, tp,
                    ts / tp, same ? "bit-identical" : "MISMATCH");
    }
    return 0;
}

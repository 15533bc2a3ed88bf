// Times the two OpenMP-parallel kernels against their serial reference
// implementations on the bundled 39-bus grid: the batch gradient of the
// recurrent network and the exhaustive chain enumeration. Both parallel paths
// promise bitwise-identical results, so the harness also diffs the outputs.

#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridfc/agent.hpp"
#include "gridfc/env.hpp"
#include "gridfc/graph_ops.hpp"
#include "gridfc/grid.hpp"
#include "gridfc/grnn.hpp"
#include "gridfc/oracle.hpp"
#include "gridfc/rng.hpp"

using namespace gridfc;

namespace {

/// Median wall time of `repeats` calls, with one untimed warm-up.
double time_median(int repeats, const std::function<void()>& fn) {
    fn();
    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(repeats));
    for (int r = 0; r < repeats; ++r) {
        const auto start = std::chrono::steady_clock::now();
        fn();
        samples.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }
    std::sort(samples.begin(), samples.end());
    return samples[samples.size() / 2];
}

double max_param_diff(const GrqnParams& a, const GrqnParams& b) {
    const auto av = a.flat_views();
    const auto bv = b.flat_views();
    double worst = 0.0;
    for (std::size_t t = 0; t < av.size(); ++t) {
        worst = std::max(worst, (av[t] - bv[t]).cwiseAbs().maxCoeff());
    }
    return worst;
}

void print_row(const std::string& kernel, double serial_s, double parallel_s, bool identical) {
    std::printf("%-34s %10.4f s %10.4f s %7.2fx  %s\n", kernel.c_str(), serial_s, parallel_s,
                serial_s / parallel_s, identical ? "yes" : "NO");
}

}  // namespace

int main(int argc, char** argv) {
    std::string case_path = "data/case39.m";
    int repeats = 9;
    int horizon = 2;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--case" && i + 1 < argc) {
            case_path = argv[++i];
        } else if (arg == "--repeats" && i + 1 < argc) {
            repeats = std::max(1, std::atoi(argv[++i]));
        } else if (arg == "--horizon" && i + 1 < argc) {
            horizon = std::max(1, std::atoi(argv[++i]));
        } else {
            std::fprintf(stderr,
                         "usage: %s [--case path.m] [--repeats N] [--horizon P]\n", argv[0]);
            return 2;
        }
    }

#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (built without OpenMP)\n");
#endif

    const GridCase grid = scale_load(
        load_case(case_path, case_path.size() > 2 && case_path.ends_with(".m")
                                 ? CaseFormat::MatpowerM
                                 : CaseFormat::NativeJson),
        0.55);

    // --- batch gradient: 32 three-stage episodes at full 39-bus width -------
    const auto shift =
        std::make_shared<const ShiftOperator>(ShiftOperator::build(grid, Topology::full(grid)));
    const GrqnDims dims{grid.bus_count(), 1, 12, 12, 3, 64, grid.branch_count()};
    std::mt19937_64 rng(17);
    auto random_obs = [&] {
        Eigen::MatrixXd x(dims.n, dims.f);
        for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = uniform_sym(rng, 0.3);
        return GraphObs{shift, std::move(x)};
    };
    SequenceBuffer buffer;
    std::vector<std::size_t> sampled;
    for (std::size_t e = 0; e < 32; ++e) {
        Episode episode;
        for (int j = 0; j < 3; ++j) {
            TransitionTuple t;
            t.obs = random_obs();
            t.action = static_cast<int>(uniform_index(rng, dims.num_actions));
            t.reward = uniform_sym(rng, 0.1);
            t.next_obs = random_obs();
            t.next_mask.assign(static_cast<std::size_t>(dims.num_actions), true);
            t.end = j == 2;
            episode.push_back(std::move(t));
        }
        buffer.append(std::move(episode));
        sampled.push_back(e);
    }
    const GrqnParams params = GrqnParams::init(dims, rng);
    const GrqnParams target = GrqnParams::init(dims, rng);
    const auto grad = [&](bool parallel) {
        return batch_gradient(buffer, sampled, params, target, 0.99, 1.0, parallel);
    };
    const double grad_serial = time_median(repeats, [&] { grad(false); });
    const double grad_parallel = time_median(repeats, [&] { grad(true); });
    const bool grad_same = max_param_diff(grad(false).grads, grad(true).grads) == 0.0;

    // --- chain enumeration --------------------------------------------------
    const auto enumerate = [&](bool parallel) { return enumerate_chains(grid, horizon, parallel); };
    const double enum_serial = time_median(repeats, [&] { enumerate(false); });
    const double enum_parallel = time_median(repeats, [&] { enumerate(true); });
    const bool enum_same =
        catalog_to_jsonl(enumerate(false)) == catalog_to_jsonl(enumerate(true));

    std::printf("%-34s %12s %12s %8s  %s\n", "kernel", "serial", "parallel", "speedup",
                "identical");
    print_row("batch-gradient (32x3 episodes)", grad_serial, grad_parallel, grad_same);
    print_row("chain-enumeration (depth " + std::to_string(horizon) + ")", enum_serial,
              enum_parallel, enum_same);
    return grad_same && enum_same ? 0 : 1;
}

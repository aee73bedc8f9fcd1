// Reconstructs a canonical atom-field state from 5 sampled series and prints
// the estimate next to the truth.
//   pair_tomography [seed] [events_per_series]

#include "qpair/qpair.hpp"

#include <cstdio>
#include <cstdlib>

using namespace qpair;

int main(int argc, char** argv) {
    const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1;
    const tomo::CanonicalParams truth{{0.6, 0.25, 0.1, 0.05}, 0.5, 0.9};
    const auto plan = argc > 2 ? complexity::fixed_plan(5, std::strtoll(argv[2], nullptr, 10))
                               : complexity::ququart_series_plan(complexity::ErrorSpec(0.1)).max;

    tomo::MonteCarloSampler sampler(tomo::canonical_state(truth), seed);
    const auto r = tomo::full_reconstruct(sampler, plan, tomo::Protocol::minimal5, {true});

    std::printf("plan: %lld series x %lld events\n", (long long)plan.num_series, (long long)plan.events_per_series);
    std::printf("%-8s %8s %8s %8s %8s %8s %8s\n", "", "p1", "p2", "p3", "p4", "theta_c", "theta_e");
    std::printf("%-8s %8.4f %8.4f %8.4f %8.4f %8.4f %8.4f\n", "truth", truth.p[0], truth.p[1], truth.p[2], truth.p[3],
                truth.theta_c, truth.theta_e);
    if (r.params)
        std::printf("%-8s %8.4f %8.4f %8.4f %8.4f %8.4f %8.4f\n", "estimate", r.params->p[0], r.params->p[1],
                    r.params->p[2], r.params->p[3], r.params->theta_c, r.params->theta_e);
    std::printf("trace distance to truth: %.4f\n",
                trace_distance(r.rho.matrix(), tomo::canonical_state(truth).matrix()));
    std::printf("%s\n", io::to_json(r.diagnostics).dump(2).c_str());
}

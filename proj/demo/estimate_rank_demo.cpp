// Simulates one scenario and prints the score series and the rank estimate.
//
//   estimate_rank_demo [num_sources] [snr_db] [num_snapshots]

#include "sedan/sedan.hpp"

#include <cstdio>
#include <cstdlib>

int main(int argc, char** argv) {
    const int r = argc > 1 ? std::atoi(argv[1]) : 8;
    const double snr = argc > 2 ? std::atof(argv[2]) : 0.0;
    const int N = argc > 3 ? std::atoi(argv[3]) : 40;

    const sedan::ArrayGeometry geometry{64, 0.5};
    const sedan::Condition condition{sedan::IidGaussian{1.0}, snr, r, N, sedan::PowerMode::Balanced};
    sedan::Rng rng(2024);

    try {
        const auto X = sedan::simulate_snapshots(geometry, condition, rng);
        const auto result = sedan::estimate_rank(X);
        std::printf("M=%d N=%d r=%d SNR=%.1f dB\n", geometry.num_antennas, N, r, snr);
        for (int k = 1; k <= static_cast<int>(result.scores.size()); ++k)
            std::printf("  eta_%-2d = %.5f%s\n", k, result.scores.eta(k), k == result.rank_estimate ? "  <-" : "");
        std::printf("estimated rank: %d\n", result.rank_estimate);
    } catch (const sedan::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

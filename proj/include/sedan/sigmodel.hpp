#pragma once

// Narrowband far-field signal model for a half-wavelength uniform linear array.

#include "sedan/error.hpp"
#include "sedan/random.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace sedan {

struct ArrayGeometry {
    int num_antennas = 64;
    double spacing_wavelengths = 0.5;
};

enum class PowerMode { Balanced, Disparate };

inline std::string_view to_string(PowerMode mode) {
    return mode == PowerMode::Balanced ? "balanced" : "disparate";
}

/// Width of the SNR ramp used for disparate sources, in dB.
inline constexpr double kDisparateSpanDb = 6.0;

struct SourceProfile {
    int num_sources = 0;
    std::vector<double> angles_deg;
    std::vector<double> snr_db;
    PowerMode power_mode = PowerMode::Balanced;
};

/// Evenly spread directions from -70 deg to +80 deg; a single source sits at the sweep midpoint (5 deg).
inline std::vector<double> sweep_angles_deg(int num_sources) {
    if (num_sources < 1) throw InvalidArgument("sweep_angles_deg: need at least one source");
    if (num_sources == 1) return {-70.0 + 75.0};
    std::vector<double> angles(static_cast<std::size_t>(num_sources));
    for (int i = 0; i < num_sources; ++i)
        angles[static_cast<std::size_t>(i)] = -70.0 + 150.0 * i / (num_sources - 1);
    return angles;
}

/// Per-source SNRs: constant for balanced sources, a linear ramp centred on
/// `nominal_db` spanning kDisparateSpanDb for disparate ones.
inline std::vector<double> snr_profile_db(int num_sources, double nominal_db, PowerMode mode) {
    if (num_sources < 1) throw InvalidArgument("snr_profile_db: need at least one source");
    std::vector<double> snr(static_cast<std::size_t>(num_sources), nominal_db);
    if (mode == PowerMode::Disparate && num_sources > 1) {
        const double lo = nominal_db - kDisparateSpanDb / 2.0;
        for (int i = 0; i < num_sources; ++i)
            snr[static_cast<std::size_t>(i)] = lo + kDisparateSpanDb * i / (num_sources - 1);
    }
    return snr;
}

inline SourceProfile make_profile(int num_sources, double nominal_snr_db, PowerMode mode) {
    return {num_sources, sweep_angles_deg(num_sources), snr_profile_db(num_sources, nominal_snr_db, mode),
            mode};
}

inline void validate(const SourceProfile& p) {
    const auto r = static_cast<std::size_t>(p.num_sources);
    if (p.num_sources < 1) throw InvalidArgument("source profile: num_sources must be positive");
    if (p.angles_deg.size() != r || p.snr_db.size() != r)
        throw InvalidArgument("source profile: angle and SNR lists must have num_sources entries");
    for (double a : p.angles_deg)
        if (!(a > -90.0 && a < 90.0))
            throw InvalidArgument("source profile: angle " + std::to_string(a) + " outside (-90, 90)");
    std::vector<double> sorted = p.angles_deg;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw InvalidArgument("source profile: angles must be distinct");

    constexpr double tol = 1e-9;
    if (p.power_mode == PowerMode::Balanced) {
        for (double s : p.snr_db)
            if (std::abs(s - p.snr_db.front()) > tol)
                throw InvalidArgument("source profile: balanced sources need equal SNRs");
    } else if (r > 1) {
        const double step = (p.snr_db.back() - p.snr_db.front()) / static_cast<double>(r - 1);
        if (std::abs(std::abs(p.snr_db.back() - p.snr_db.front()) - kDisparateSpanDb) > tol)
            throw InvalidArgument("source profile: disparate SNRs must span 6 dB");
        for (std::size_t i = 0; i < r; ++i)
            if (std::abs(p.snr_db[i] - (p.snr_db.front() + step * static_cast<double>(i))) > tol)
                throw InvalidArgument("source profile: disparate SNRs must be linearly spaced");
    }
}

/// a(phi)_m = exp(j 2 pi d m sin(phi)), phase reference at element 0.
inline ComplexVector steering_vector(double phi_deg, const ArrayGeometry& geometry) {
    if (!(phi_deg > -90.0 && phi_deg < 90.0))
        throw InvalidArgument("steering_vector: angle " + std::to_string(phi_deg) + " outside (-90, 90)");
    if (geometry.num_antennas < 1) throw InvalidArgument("steering_vector: need at least one antenna");
    const double phase_step =
        2.0 * std::numbers::pi * geometry.spacing_wavelengths * std::sin(phi_deg * std::numbers::pi / 180.0);
    ComplexVector a(geometry.num_antennas);
    for (int m = 0; m < geometry.num_antennas; ++m) a(m) = std::polar(1.0, phase_step * m);
    return a;
}

inline ComplexMatrix steering_matrix(const std::vector<double>& angles_deg, const ArrayGeometry& geometry) {
    ComplexMatrix A(geometry.num_antennas, static_cast<Eigen::Index>(angles_deg.size()));
    for (std::size_t i = 0; i < angles_deg.size(); ++i)
        A.col(static_cast<Eigen::Index>(i)) = steering_vector(angles_deg[i], geometry);
    return A;
}

/// Source powers sigma_s^2 such that 10 log10(sigma_s^2 / noise_power) equals each configured SNR.
inline std::vector<double> source_powers(const SourceProfile& profile, double noise_power) {
    if (!(noise_power > 0.0)) throw InvalidArgument("source_powers: noise power must be positive");
    std::vector<double> powers;
    powers.reserve(profile.snr_db.size());
    for (double snr : profile.snr_db) powers.push_back(noise_power * std::pow(10.0, snr / 10.0));
    return powers;
}

/// One draw of the noise-free array signal together with its factors, L = A * S.
struct SignalDraw {
    ComplexMatrix steering;  // A, M x r
    ComplexMatrix symbols;   // S, r x N
    ComplexMatrix signal;    // L, M x N
};

inline SignalDraw generate_signal(const SourceProfile& profile, const ArrayGeometry& geometry, int num_snapshots,
                                  Rng& rng, double noise_power = 1.0) {
    validate(profile);
    if (profile.num_sources >= geometry.num_antennas)
        throw InvalidArgument("generate_signal: need fewer sources (" + std::to_string(profile.num_sources) +
                              ") than antennas (" + std::to_string(geometry.num_antennas) + ")");
    if (num_snapshots < 2) throw InvalidArgument("generate_signal: need at least two snapshots");

    SignalDraw draw;
    draw.steering = steering_matrix(profile.angles_deg, geometry);
    const auto powers = source_powers(profile, noise_power);
    draw.symbols.resize(profile.num_sources, num_snapshots);
    for (int i = 0; i < profile.num_sources; ++i)
        draw.symbols.row(i) = complex_gaussian(1, num_snapshots, rng, powers[static_cast<std::size_t>(i)]);
    draw.signal = draw.steering * draw.symbols;
    return draw;
}

}  // namespace sedan

#pragma once

// Monte-Carlo experiment engine: scenario construction, seeded trials, probability of
// correct detection (PCD), CSV export and angle-histogram export.

#include "sedan/error.hpp"
#include "sedan/estimator.hpp"
#include "sedan/noise.hpp"
#include "sedan/random.hpp"
#include "sedan/sigmodel.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace sedan {

enum class ExperimentCase { SnrSweep, SourceCountSweep, SnapshotStudy, AngleHistogram, Custom };

/// Environment variable that relocates relative output paths.
inline constexpr const char* kOutputDirEnv = "SEDAN_OUTPUT_DIR";

struct ExperimentConfig {
    ExperimentCase experiment = ExperimentCase::SnrSweep;
    ArrayGeometry geometry{};
    NoiseModel noise = IidGaussian{};
    PowerMode power_mode = PowerMode::Balanced;
    std::vector<double> snr_grid_db;
    std::vector<int> r_grid;
    std::vector<int> n_grid;
    int trials = 200;
    /// Index of the first trial; lets a run be split into disjoint seed ranges.
    int first_trial = 0;
    std::uint64_t base_seed = 1;
    std::string output_path;
    /// Worker threads; 0 picks the hardware concurrency.
    int threads = 0;
    int hist_samples = 10000;
    int hist_bins = 50;
};

/// Grids used when the configuration leaves them empty.
inline void apply_default_grids(ExperimentConfig& cfg) {
    auto fill = [](auto& grid, auto values) {
        if (grid.empty()) grid = values;
    };
    switch (cfg.experiment) {
        case ExperimentCase::SnrSweep:
            fill(cfg.snr_grid_db, std::vector<double>{-10, -8, -6, -4, -2, 0, 2, 4, 6});
            fill(cfg.r_grid, std::vector<int>{8});
            fill(cfg.n_grid, std::vector<int>{40});
            break;
        case ExperimentCase::SourceCountSweep:
            fill(cfg.snr_grid_db, std::vector<double>{0});
            fill(cfg.r_grid, std::vector<int>{2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24});
            fill(cfg.n_grid, std::vector<int>{40});
            break;
        case ExperimentCase::SnapshotStudy:
            fill(cfg.snr_grid_db, std::vector<double>{-3});
            fill(cfg.r_grid, std::vector<int>{8});
            fill(cfg.n_grid, std::vector<int>{40, 80});
            break;
        case ExperimentCase::AngleHistogram:
        case ExperimentCase::Custom:
            break;
    }
}

/// One grid point of an experiment.
struct Condition {
    NoiseModel noise = IidGaussian{};
    double snr_db = 0.0;
    int num_sources = 1;
    int num_snapshots = 40;
    PowerMode power_mode = PowerMode::Balanced;
};

struct TrialResult {
    int true_rank = 0;
    /// 0 when the trial failed.
    int estimated_rank = 0;
    ScoreSeries scores;
    std::uint64_t seed = 0;
    std::chrono::duration<double> wall_time{};
    std::string failure;

    bool failed() const { return !failure.empty(); }
    bool correct() const { return !failed() && estimated_rank == true_rank; }
};

struct PcdRecord {
    std::string noise;
    double snr_db = 0.0;
    int num_sources = 0;
    int num_snapshots = 0;
    PowerMode power_mode = PowerMode::Balanced;
    int trials = 0;
    int correct = 0;
    double pcd = 0.0;
};

inline void validate(const ExperimentConfig& cfg) {
    if (cfg.trials < 1) throw InvalidArgument("config: trials must be at least 1");
    if (cfg.first_trial < 0) throw InvalidArgument("config: first_trial must be non-negative");
    if (cfg.geometry.num_antennas < 5) throw InvalidArgument("config: need at least 5 antennas");
    validate(cfg.noise);
    if (cfg.experiment == ExperimentCase::AngleHistogram) {
        if (cfg.hist_samples < 1000) throw InvalidArgument("config: histogram needs at least 1000 angle samples");
        if (cfg.hist_bins < 10) throw InvalidArgument("config: histogram needs at least 10 bins");
        return;
    }
    if (cfg.snr_grid_db.empty() || cfg.r_grid.empty() || cfg.n_grid.empty())
        throw InvalidArgument("config: SNR, source and snapshot grids must be non-empty");
    for (int r : cfg.r_grid)
        if (r < 1 || r >= cfg.geometry.num_antennas)
            throw InvalidArgument("config: source count " + std::to_string(r) + " must be in [1, M)");
    for (int n : cfg.n_grid)
        if (n < 4) throw InvalidArgument("config: snapshot count " + std::to_string(n) + " must be at least 4");
}

inline std::vector<Condition> conditions(const ExperimentConfig& cfg) {
    std::vector<Condition> out;
    for (double snr : cfg.snr_grid_db)
        for (int r : cfg.r_grid)
            for (int n : cfg.n_grid) out.push_back({cfg.noise, snr, r, n, cfg.power_mode});
    return out;
}

/// Seed for one trial, a function of the base seed, the condition and the trial index only.
inline std::uint64_t trial_seed(std::uint64_t base_seed, const Condition& c, int trial_index) {
    std::uint64_t tag = 0;
    for (char ch : noise_tag(c.noise)) tag = (tag << 8) | static_cast<unsigned char>(ch);
    return derive_seed({base_seed, tag, std::bit_cast<std::uint64_t>(c.snr_db),
                        static_cast<std::uint64_t>(c.num_sources), static_cast<std::uint64_t>(c.num_snapshots),
                        static_cast<std::uint64_t>(c.power_mode), static_cast<std::uint64_t>(trial_index)});
}

/// Noisy snapshots X = A S + Z for one condition, drawn from `rng`.
inline ComplexMatrix simulate_snapshots(const ArrayGeometry& geometry, const Condition& c, Rng& rng) {
    const double sigma_z2 = noise_power(c.noise);
    const auto profile = make_profile(c.num_sources, c.snr_db, c.power_mode);
    const auto draw = generate_signal(profile, geometry, c.num_snapshots, rng, sigma_z2);
    return draw.signal + sample_noise(c.noise, geometry.num_antennas, c.num_snapshots, rng);
}

inline TrialResult run_trial(const ExperimentConfig& cfg, const Condition& c, int trial_index) {
    TrialResult result;
    result.true_rank = c.num_sources;
    result.seed = trial_seed(cfg.base_seed, c, trial_index);
    const auto start = std::chrono::steady_clock::now();
    Rng rng(result.seed);
    const ComplexMatrix X = simulate_snapshots(cfg.geometry, c, rng);
    try {
        auto estimate = estimate_rank(X);
        result.estimated_rank = estimate.rank_estimate;
        result.scores = std::move(estimate.scores);
    } catch (const DegenerateInput& e) {
        result.failure = e.what();
    } catch (const NumericalError& e) {
        result.failure = e.what();
    }
    result.wall_time = std::chrono::steady_clock::now() - start;
    return result;
}

namespace detail {

template <typename F>
void parallel_for(int count, int threads, F&& body) {
    int workers = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) body(i);
        });
}

inline std::filesystem::path resolve_output(const std::string& path) {
    std::filesystem::path p(path);
    if (const char* dir = std::getenv(kOutputDirEnv); dir != nullptr && *dir != '\0' && p.is_relative())
        return std::filesystem::path(dir) / p;
    return p;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::out | std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.imbue(std::locale::classic());
    return out;
}

inline std::string format_double(double v) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return os.str();
}

}  // namespace detail

/// Output path after applying the output-directory environment override.
inline std::filesystem::path resolve_output_path(const std::string& path) { return detail::resolve_output(path); }

/// All trials for every grid point. Trials are independent; failed trials count as incorrect.
inline std::vector<PcdRecord> run_experiment(const ExperimentConfig& cfg, std::ostream* log = &std::cerr) {
    validate(cfg);
    if (!cfg.output_path.empty()) detail::open_output(detail::resolve_output(cfg.output_path));

    std::vector<PcdRecord> records;
    bool warned_dimension = false;
    for (const Condition& c : conditions(cfg)) {
        std::vector<TrialResult> results(static_cast<std::size_t>(cfg.trials));
        detail::parallel_for(cfg.trials, cfg.threads, [&](int i) {
            results[static_cast<std::size_t>(i)] = run_trial(cfg, c, cfg.first_trial + i);
        });

        PcdRecord rec{std::string(noise_tag(c.noise)), c.snr_db, c.num_sources, c.num_snapshots, c.power_mode,
                      cfg.trials, 0, 0.0};
        for (const auto& r : results) {
            if (r.correct()) ++rec.correct;
            if (log == nullptr) continue;
            if (r.failed())
                *log << "warning: trial seed " << r.seed << " failed: " << r.failure << '\n';
            else if (!warned_dimension && r.scores.low_dimension()) {
                *log << "warning: residual dimension drops to " << r.scores.min_residual_dimension
                     << " (N=" << c.num_snapshots << ", M=" << cfg.geometry.num_antennas
                     << "); angle statistics are unreliable at the last hypotheses\n";
                warned_dimension = true;
            }
        }
        rec.pcd = static_cast<double>(rec.correct) / static_cast<double>(rec.trials);
        records.push_back(rec);
    }
    return records;
}

inline constexpr std::string_view kPcdCsvHeader = "noise,snr_db,num_sources,num_snapshots,power_mode,trials,pcd";

inline void export_csv(const std::vector<PcdRecord>& records, const std::string& path) {
    const auto target = detail::resolve_output(path);
    auto out = detail::open_output(target);
    out << kPcdCsvHeader << '\n';
    for (const auto& r : records)
        out << r.noise << ',' << detail::format_double(r.snr_db) << ',' << r.num_sources << ',' << r.num_snapshots
            << ',' << to_string(r.power_mode) << ',' << r.trials << ',' << detail::format_double(r.pcd) << '\n';
    if (!out) throw IoError("failed writing '" + target.string() + "'");
}

namespace detail {

inline std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        parts.emplace_back(text.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view text, std::string_view what) {
    text = trim(text);
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end)
        throw InvalidArgument("cannot parse " + std::string(what) + " from '" + std::string(text) + "'");
    return value;
}

inline PowerMode parse_power_mode(std::string_view text) {
    text = trim(text);
    if (text == "balanced") return PowerMode::Balanced;
    if (text == "disparate") return PowerMode::Disparate;
    throw InvalidArgument("unknown power mode '" + std::string(text) + "' (expected balanced|disparate)");
}

}  // namespace detail

inline std::vector<PcdRecord> read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != kPcdCsvHeader)
        throw IoError("'" + path + "': missing or unexpected header");
    std::vector<PcdRecord> records;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        const auto f = detail::split(line, ',');
        if (f.size() != 7) throw IoError("'" + path + "': malformed row '" + line + "'");
        PcdRecord r;
        r.noise = f[0];
        r.snr_db = detail::parse_number<double>(f[1], "snr_db");
        r.num_sources = detail::parse_number<int>(f[2], "num_sources");
        r.num_snapshots = detail::parse_number<int>(f[3], "num_snapshots");
        r.power_mode = detail::parse_power_mode(f[4]);
        r.trials = detail::parse_number<int>(f[5], "trials");
        r.pcd = detail::parse_number<double>(f[6], "pcd");
        r.correct = static_cast<int>(std::lround(r.pcd * r.trials));
        records.push_back(r);
    }
    return records;
}

// ---------------------------------------------------------------------------
// Angle distribution of pure noise.

/// Sample moments of an angle sample.
struct AngleMoments {
    double mean = 0.0;
    double variance = 0.0;  // n - 1 denominator
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
    std::size_t count = 0;
};

inline AngleMoments moments(const std::vector<double>& x) {
    const auto n = x.size();
    if (n < 4) throw InvalidArgument("moments: need at least four samples");
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    const double dn = static_cast<double>(n);
    m2 /= dn;
    m3 /= dn;
    m4 /= dn;
    return {mean, m2 * dn / (dn - 1.0), m3 / std::pow(m2, 1.5), m4 / (m2 * m2) - 3.0, n};
}

/// Angles between `num_pairs` independent pairs of noise snapshots (every angle uses fresh vectors).
inline std::vector<double> noise_angle_samples(const NoiseModel& model, int M, int num_pairs, Rng& rng) {
    const ComplexMatrix Z = sample_noise(model, M, 2 * num_pairs, rng);
    std::vector<double> angles;
    angles.reserve(static_cast<std::size_t>(num_pairs));
    for (int p = 0; p < num_pairs; ++p) {
        const auto a = Z.col(2 * p);
        const auto b = Z.col(2 * p + 1);
        angles.push_back(detail::clamped_arccos(a.dot(b).real() / (a.norm() * b.norm())));
    }
    return angles;
}

struct HistogramBin {
    double center = 0.0;
    double empirical_density = 0.0;
    double gaussian_fit_density = 0.0;
    double reference_density = 0.0;  // N(pi/2, 1/(2(M-1)))
};

struct AngleHistogram {
    std::vector<HistogramBin> bins;
    double bin_width = 0.0;
    AngleMoments fit;
};

inline double normal_pdf(double x, double mean, double variance) {
    const double d = x - mean;
    return std::exp(-d * d / (2.0 * variance)) / std::sqrt(2.0 * std::numbers::pi * variance);
}

/// Histogram of the given angles on [min, max] with a Gaussian fit and the isotropic reference density.
inline AngleHistogram angle_histogram(const std::vector<double>& angles, int M, int bins) {
    if (bins < 1) throw InvalidArgument("angle_histogram: need at least one bin");
    AngleHistogram h;
    h.fit = moments(angles);
    const auto [lo_it, hi_it] = std::minmax_element(angles.begin(), angles.end());
    const double lo = *lo_it;
    const double hi = *hi_it > lo ? *hi_it : lo + 1e-9;
    h.bin_width = (hi - lo) / bins;
    std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
    for (double a : angles) {
        auto idx = static_cast<int>((a - lo) / h.bin_width);
        counts[static_cast<std::size_t>(std::clamp(idx, 0, bins - 1))]++;
    }
    const double reference_var = 1.0 / (2.0 * (M - 1));
    for (int b = 0; b < bins; ++b) {
        const double center = lo + (b + 0.5) * h.bin_width;
        h.bins.push_back({center,
                          static_cast<double>(counts[static_cast<std::size_t>(b)]) /
                              (static_cast<double>(angles.size()) * h.bin_width),
                          normal_pdf(center, h.fit.mean, h.fit.variance),
                          normal_pdf(center, std::numbers::pi / 2.0, reference_var)});
    }
    return h;
}

inline constexpr std::string_view kHistogramCsvHeader =
    "bin_center,empirical_density,gaussian_fit_density,lemma1_density";

inline AngleHistogram export_angle_histogram(const NoiseModel& model, int M, int num_samples, int bins,
                                             const std::string& path, std::uint64_t seed = 1) {
    if (num_samples < 1000) throw InvalidArgument("export_angle_histogram: need at least 1000 angle samples");
    if (bins < 10) throw InvalidArgument("export_angle_histogram: need at least 10 bins");
    if (M < 2) throw InvalidArgument("export_angle_histogram: need at least 2 antennas");
    const auto target = detail::resolve_output(path);
    auto out = detail::open_output(target);

    Rng rng(derive_seed({seed, static_cast<std::uint64_t>(M), static_cast<std::uint64_t>(num_samples)}));
    const auto h = angle_histogram(noise_angle_samples(model, M, num_samples, rng), M, bins);
    out << kHistogramCsvHeader << '\n';
    for (const auto& b : h.bins)
        out << detail::format_double(b.center) << ',' << detail::format_double(b.empirical_density) << ','
            << detail::format_double(b.gaussian_fit_density) << ',' << detail::format_double(b.reference_density) << '\n';
    if (!out) throw IoError("failed writing '" + target.string() + "'");
    return h;
}

// ---------------------------------------------------------------------------
// Configuration files: flat `key = value` lines, `#` starts a comment, lists are comma-separated.

inline ExperimentCase parse_case(std::string_view text) {
    text = detail::trim(text);
    if (text == "1") return ExperimentCase::SnrSweep;
    if (text == "2") return ExperimentCase::SourceCountSweep;
    if (text == "3") return ExperimentCase::SnapshotStudy;
    if (text == "hist") return ExperimentCase::AngleHistogram;
    if (text == "custom") return ExperimentCase::Custom;
    throw InvalidArgument("unknown case '" + std::string(text) + "' (expected 1|2|3|hist|custom)");
}

template <typename T>
std::vector<T> parse_list(std::string_view text, std::string_view what) {
    std::vector<T> values;
    for (const auto& part : detail::split(text, ','))
        if (!detail::trim(part).empty()) values.push_back(detail::parse_number<T>(part, what));
    if (values.empty()) throw InvalidArgument("empty list for " + std::string(what));
    return values;
}

/// Applies one configuration key. Noise-parameter keys refer to the currently selected model,
/// so `noise` must precede them.
inline void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
    key = detail::trim(key);
    value = detail::trim(value);
    if (key == "case") cfg.experiment = parse_case(value);
    else if (key == "noise") {
        if (value != noise_tag(cfg.noise)) cfg.noise = noise_from_tag(value, noise_power(cfg.noise));
    }
    else if (key == "power") cfg.power_mode = detail::parse_power_mode(value);
    else if (key == "snr_db" || key == "snr-db") cfg.snr_grid_db = parse_list<double>(value, "snr_db");
    else if (key == "sources") cfg.r_grid = parse_list<int>(value, "sources");
    else if (key == "snapshots") cfg.n_grid = parse_list<int>(value, "snapshots");
    else if (key == "trials") cfg.trials = detail::parse_number<int>(value, "trials");
    else if (key == "first_trial") cfg.first_trial = detail::parse_number<int>(value, "first_trial");
    else if (key == "seed") cfg.base_seed = detail::parse_number<std::uint64_t>(value, "seed");
    else if (key == "antennas") cfg.geometry.num_antennas = detail::parse_number<int>(value, "antennas");
    else if (key == "out") cfg.output_path = std::string(value);
    else if (key == "threads") cfg.threads = detail::parse_number<int>(value, "threads");
    else if (key == "samples") cfg.hist_samples = detail::parse_number<int>(value, "samples");
    else if (key == "bins") cfg.hist_bins = detail::parse_number<int>(value, "bins");
    else if (key == "gamma") {
        auto* m = std::get_if<BandedGaussian>(&cfg.noise);
        if (m == nullptr) throw InvalidArgument("'gamma' applies only to noise = bcn");
        m->gamma = detail::parse_number<double>(value, "gamma");
    } else if (key == "beta") {
        auto* m = std::get_if<DiagonalGaussian>(&cfg.noise);
        if (m == nullptr) throw InvalidArgument("'beta' applies only to noise = dcn");
        m->beta = detail::parse_number<double>(value, "beta");
    } else if (key == "gmn_a" || key == "gmn_gamma" || key == "gmn_components" || key == "gmn_scope") {
        auto* m = std::get_if<MiddletonClassA>(&cfg.noise);
        if (m == nullptr) throw InvalidArgument("'" + std::string(key) + "' applies only to noise = gmn");
        if (key == "gmn_a") m->A = detail::parse_number<double>(value, "gmn_a");
        else if (key == "gmn_gamma") m->Gamma = detail::parse_number<double>(value, "gmn_gamma");
        else if (key == "gmn_components") m->components = detail::parse_number<int>(value, "gmn_components");
        else if (value == "snapshot") m->scope = MixtureScope::Snapshot;
        else if (value == "entry") m->scope = MixtureScope::Entry;
        else throw InvalidArgument("unknown gmn_scope '" + std::string(value) + "' (expected snapshot|entry)");
    } else {
        throw InvalidArgument("unknown configuration key '" + std::string(key) + "'");
    }
}

inline void apply_config_text(ExperimentConfig& cfg, std::string_view text, std::string_view origin = "<config>") {
    int line_no = 0;
    for (const auto& raw : detail::split(text, '\n')) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw InvalidArgument(std::string(origin) + ":" + std::to_string(line_no) + ": expected key = value");
        try {
            apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
        } catch (const InvalidArgument& e) {
            throw InvalidArgument(std::string(origin) + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

inline void apply_config_file(ExperimentConfig& cfg, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    apply_config_text(cfg, buf.str(), path);
}

}  // namespace sedan

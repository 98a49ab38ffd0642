#include "sedan/harness.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace sedan;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("sedan_test_" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    return lines;
}

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentCase::Custom;
    cfg.snr_grid_db = {0.0};
    cfg.r_grid = {8};
    cfg.n_grid = {40};
    cfg.trials = 20;
    cfg.base_seed = 42;
    cfg.threads = 2;
    return cfg;
}

TEST(DefaultGrids, MatchDocumentedCases) {
    ExperimentConfig c1;
    apply_default_grids(c1);
    EXPECT_EQ(c1.snr_grid_db.size(), 9u);
    EXPECT_EQ(c1.snr_grid_db.front(), -10.0);
    EXPECT_EQ(c1.snr_grid_db.back(), 6.0);
    EXPECT_EQ(c1.r_grid, std::vector<int>{8});
    EXPECT_EQ(c1.n_grid, std::vector<int>{40});

    ExperimentConfig c2;
    c2.experiment = ExperimentCase::SourceCountSweep;
    apply_default_grids(c2);
    EXPECT_EQ(c2.r_grid.front(), 2);
    EXPECT_EQ(c2.r_grid.back(), 24);
    EXPECT_EQ(c2.snr_grid_db, std::vector<double>{0.0});

    ExperimentConfig c3;
    c3.experiment = ExperimentCase::SnapshotStudy;
    c3.n_grid = {60};
    apply_default_grids(c3);
    EXPECT_EQ(c3.n_grid, std::vector<int>{60});
    EXPECT_EQ(c3.snr_grid_db, std::vector<double>{-3.0});
    EXPECT_EQ(c3.geometry.num_antennas, 64);
    EXPECT_EQ(c3.trials, 200);
}

TEST(RunTrial, HighSnrIsCorrect) {
    auto cfg = small_config();
    const Condition c{IidGaussian{}, 30.0, 8, 40, PowerMode::Balanced};
    const auto r = run_trial(cfg, c, 0);
    EXPECT_EQ(r.true_rank, 8);
    EXPECT_EQ(r.estimated_rank, 8);
    EXPECT_TRUE(r.correct());
    EXPECT_EQ(r.scores.size(), 39u);
}

TEST(RunTrial, DeterministicPerSeed) {
    auto cfg = small_config();
    for (const NoiseModel& noise : {NoiseModel{IidGaussian{}}, NoiseModel{BandedGaussian{}},
                                    NoiseModel{L2Isotropic{}}, NoiseModel{MiddletonClassA{}}}) {
        const Condition c{noise, -3.0, 8, 40, PowerMode::Disparate};
        const auto a = run_trial(cfg, c, 7);
        const auto b = run_trial(cfg, c, 7);
        EXPECT_EQ(a.seed, b.seed);
        EXPECT_EQ(a.estimated_rank, b.estimated_rank);
        EXPECT_EQ(a.scores.values, b.scores.values);
        EXPECT_NE(run_trial(cfg, c, 8).seed, a.seed);
    }
}

TEST(TrialSeed, DependsOnEveryConditionField) {
    const Condition base{IidGaussian{}, 0.0, 8, 40, PowerMode::Balanced};
    const auto s = trial_seed(1, base, 0);
    auto vary = base;
    vary.noise = BandedGaussian{};
    EXPECT_NE(trial_seed(1, vary, 0), s);
    vary = base;
    vary.snr_db = -0.0001;
    EXPECT_NE(trial_seed(1, vary, 0), s);
    vary = base;
    vary.num_sources = 9;
    EXPECT_NE(trial_seed(1, vary, 0), s);
    vary = base;
    vary.num_snapshots = 41;
    EXPECT_NE(trial_seed(1, vary, 0), s);
    vary = base;
    vary.power_mode = PowerMode::Disparate;
    EXPECT_NE(trial_seed(1, vary, 0), s);
    EXPECT_NE(trial_seed(2, base, 0), s);
    EXPECT_EQ(trial_seed(1, base, 0), s);
}

TEST(RunExperiment, SingleTrialPcdIsBinary) {
    auto cfg = small_config();
    cfg.trials = 1;
    cfg.snr_grid_db = {-20.0, 0.0, 20.0};
    const auto records = run_experiment(cfg, nullptr);
    ASSERT_EQ(records.size(), 3u);
    for (const auto& r : records) EXPECT_TRUE(r.pcd == 0.0 || r.pcd == 1.0);
}

TEST(RunExperiment, OneRecordPerGridPointExactAggregation) {
    auto cfg = small_config();
    cfg.snr_grid_db = {-6.0, 0.0};
    cfg.r_grid = {4, 8};
    cfg.n_grid = {20, 40};
    cfg.trials = 5;
    const auto records = run_experiment(cfg, nullptr);
    ASSERT_EQ(records.size(), 8u);
    for (const auto& r : records) {
        EXPECT_EQ(r.trials, 5);
        EXPECT_EQ(r.pcd, static_cast<double>(r.correct) / 5.0);
    }
}

TEST(RunExperiment, ThreadCountDoesNotChangeResults) {
    auto cfg = small_config();
    cfg.snr_grid_db = {-6.0};
    cfg.threads = 1;
    const auto serial = run_experiment(cfg, nullptr);
    cfg.threads = 4;
    const auto parallel = run_experiment(cfg, nullptr);
    EXPECT_EQ(serial.front().correct, parallel.front().correct);
}

TEST(RunExperiment, SubsetOfConditionsReproduces) {
    auto cfg = small_config();
    cfg.snr_grid_db = {-8.0, -6.0, -4.0};
    const auto full = run_experiment(cfg, nullptr);
    cfg.snr_grid_db = {-6.0};
    const auto subset = run_experiment(cfg, nullptr);
    EXPECT_EQ(subset.front().correct, full[1].correct);
    EXPECT_EQ(subset.front().pcd, full[1].pcd);
}

TEST(RunExperiment, SplitTrialRangesPoolExactly) {
    auto cfg = small_config();
    cfg.snr_grid_db = {-7.0};
    cfg.trials = 40;
    const auto whole = run_experiment(cfg, nullptr).front();
    cfg.trials = 20;
    const auto first = run_experiment(cfg, nullptr).front();
    cfg.first_trial = 20;
    const auto second = run_experiment(cfg, nullptr).front();
    EXPECT_EQ(whole.correct, first.correct + second.correct);
    EXPECT_EQ(whole.pcd, (first.pcd + second.pcd) / 2.0);
}

TEST(RunExperiment, UnwritableOutputFailsBeforeComputing) {
    auto cfg = small_config();
    cfg.trials = 1000000;
    cfg.output_path = "/nonexistent-dir-for-sedan/out.csv";
    const auto start = std::chrono::steady_clock::now();
    EXPECT_THROW(run_experiment(cfg, nullptr), IoError);
    EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(2));
}

TEST(RunExperiment, RejectsInvalidConfigs) {
    auto cfg = small_config();
    cfg.trials = 0;
    EXPECT_THROW(run_experiment(cfg, nullptr), InvalidArgument);
    cfg = small_config();
    cfg.r_grid = {64};
    EXPECT_THROW(run_experiment(cfg, nullptr), InvalidArgument);
    cfg = small_config();
    cfg.n_grid.clear();
    EXPECT_THROW(run_experiment(cfg, nullptr), InvalidArgument);
}

TEST(RunExperiment, LowDimensionWarningIsLoggedOnce) {
    auto cfg = small_config();
    cfg.n_grid = {80};
    cfg.snr_grid_db = {0.0, 3.0};
    cfg.trials = 3;
    std::ostringstream log;
    run_experiment(cfg, &log);
    const auto text = log.str();
    const auto first = text.find("residual dimension");
    ASSERT_NE(first, std::string::npos);
    EXPECT_EQ(text.find("residual dimension", first + 1), std::string::npos);
}

TEST(RunExperiment, PcdNonDecreasingInSnr) {
    auto cfg = small_config();
    cfg.snr_grid_db = {-12.0, -10.0, -8.0, -6.0, -4.0, -2.0, 0.0};
    cfg.trials = 100;
    const auto records = run_experiment(cfg, nullptr);
    for (std::size_t i = 1; i < records.size(); ++i) {
        const double p = records[i - 1].pcd, q = records[i].pcd;
        const double sd = std::sqrt((p * (1 - p) + q * (1 - q)) / cfg.trials);
        EXPECT_GE(q, p - 3.0 * sd) << records[i].snr_db;
    }
    EXPECT_LT(records.front().pcd, 0.5);
    EXPECT_GT(records.back().pcd, 0.95);
}

TEST(ExportCsv, EmptyIsHeaderOnly) {
    TempDir dir;
    export_csv({}, dir.file("empty.csv"));
    const auto lines = read_lines(dir.file("empty.csv"));
    ASSERT_EQ(lines.size(), 1u);
    EXPECT_EQ(lines[0], "noise,snr_db,num_sources,num_snapshots,power_mode,trials,pcd");
}

TEST(ExportCsv, OneRecordTwoLines) {
    TempDir dir;
    export_csv({PcdRecord{"bcn", -3.0, 8, 40, PowerMode::Disparate, 200, 129, 0.645}}, dir.file("one.csv"));
    const auto lines = read_lines(dir.file("one.csv"));
    ASSERT_EQ(lines.size(), 2u);
    EXPECT_EQ(lines[1], "bcn,-3,8,40,disparate,200,0.64500000000000002");
}

TEST(ExportCsv, RoundTrip) {
    TempDir dir;
    auto cfg = small_config();
    cfg.snr_grid_db = {-7.5, -3.25, 1.0 / 3.0};
    cfg.trials = 7;
    cfg.power_mode = PowerMode::Disparate;
    const auto records = run_experiment(cfg, nullptr);
    export_csv(records, dir.file("rt.csv"));
    const auto parsed = read_csv(dir.file("rt.csv"));
    ASSERT_EQ(parsed.size(), records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        EXPECT_EQ(parsed[i].noise, records[i].noise);
        EXPECT_EQ(parsed[i].snr_db, records[i].snr_db);
        EXPECT_EQ(parsed[i].num_sources, records[i].num_sources);
        EXPECT_EQ(parsed[i].num_snapshots, records[i].num_snapshots);
        EXPECT_EQ(parsed[i].power_mode, records[i].power_mode);
        EXPECT_EQ(parsed[i].trials, records[i].trials);
        EXPECT_EQ(parsed[i].correct, records[i].correct);
        EXPECT_EQ(parsed[i].pcd, records[i].pcd);
    }
}

TEST(ExportCsv, IoErrorCarriesPath) {
    try {
        export_csv({}, "/nonexistent-dir-for-sedan/x.csv");
        FAIL();
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent-dir-for-sedan/x.csv"), std::string::npos);
    }
}

TEST(OutputDirectory, EnvironmentReRootsRelativePaths) {
    TempDir dir;
    ::setenv(kOutputDirEnv, dir.path.c_str(), 1);
    export_csv({}, "relative.csv");
    EXPECT_TRUE(fs::exists(dir.path / "relative.csv"));
    EXPECT_EQ(resolve_output_path("/abs/path.csv"), fs::path("/abs/path.csv"));
    ::unsetenv(kOutputDirEnv);
    EXPECT_EQ(resolve_output_path("relative.csv"), fs::path("relative.csv"));
}

TEST(AngleHistogram, IidFitMatchesReference) {
    TempDir dir;
    const auto h = export_angle_histogram(IidGaussian{}, 64, 10000, 40, dir.file("iid.csv"), 3);
    EXPECT_NEAR(h.fit.mean, kPi / 2.0, 0.01);
    EXPECT_NEAR(h.fit.variance * 126.0, 1.0, 0.1);
    const auto lines = read_lines(dir.file("iid.csv"));
    ASSERT_EQ(lines.size(), 41u);
    EXPECT_EQ(lines[0], "bin_center,empirical_density,gaussian_fit_density,lemma1_density");
}

TEST(AngleHistogram, DiagonalNoiseIsGaussianWithOtherParameters) {
    TempDir dir;
    const auto h = export_angle_histogram(DiagonalGaussian{}, 64, 10000, 40, dir.file("dcn.csv"), 4);
    EXPECT_LT(std::abs(h.fit.skewness), 0.1);
    EXPECT_LT(std::abs(h.fit.excess_kurtosis), 0.2);
    EXPECT_GT(h.fit.variance * 126.0, 1.0);
}

TEST(AngleHistogram, DensitiesIntegrateToOne) {
    TempDir dir;
    const auto h = export_angle_histogram(IidGaussian{}, 64, 1000, 10, dir.file("small.csv"), 5);
    double total = 0.0;
    for (const auto& b : h.bins) total += b.empirical_density * h.bin_width;
    EXPECT_NEAR(total, 1.0, 1e-6);
    // Reference column is the isotropic N(pi/2, 1/126) density.
    const auto& mid = h.bins[5];
    EXPECT_NEAR(mid.reference_density, normal_pdf(mid.center, kPi / 2.0, 1.0 / 126.0), 1e-15);
}

TEST(AngleHistogram, RejectsTooFewSamplesOrBins) {
    TempDir dir;
    EXPECT_THROW(export_angle_histogram(IidGaussian{}, 64, 999, 10, dir.file("a.csv")), InvalidArgument);
    EXPECT_THROW(export_angle_histogram(IidGaussian{}, 64, 1000, 9, dir.file("a.csv")), InvalidArgument);
    EXPECT_THROW(export_angle_histogram(IidGaussian{}, 64, 1000, 10, "/nonexistent-dir-for-sedan/h.csv"), IoError);
}

TEST(Moments, KnownValues) {
    const auto m = moments({1.0, 2.0, 3.0, 4.0});
    EXPECT_DOUBLE_EQ(m.mean, 2.5);
    EXPECT_NEAR(m.variance, 5.0 / 3.0, 1e-15);
    EXPECT_NEAR(m.skewness, 0.0, 1e-15);
    EXPECT_NEAR(m.excess_kurtosis, 1.64 - 3.0, 1e-12);
}

TEST(ConfigFile, ParsesAllKeys) {
    ExperimentConfig cfg;
    apply_config_text(cfg, R"(
        # Case 3 under banded noise
        case = 3
        noise = bcn
        gamma = 0.7
        power = disparate
        snr_db = -3, -1.5
        sources = 8,10
        snapshots = 40
        trials = 50
        seed = 18446744073709551615
        antennas = 32
        out = results.csv   # trailing comment
        threads = 3
        first_trial = 10
    )");
    EXPECT_EQ(cfg.experiment, ExperimentCase::SnapshotStudy);
    EXPECT_EQ(std::get<BandedGaussian>(cfg.noise).gamma, 0.7);
    EXPECT_EQ(cfg.power_mode, PowerMode::Disparate);
    EXPECT_EQ(cfg.snr_grid_db, (std::vector<double>{-3.0, -1.5}));
    EXPECT_EQ(cfg.r_grid, (std::vector<int>{8, 10}));
    EXPECT_EQ(cfg.n_grid, std::vector<int>{40});
    EXPECT_EQ(cfg.trials, 50);
    EXPECT_EQ(cfg.base_seed, 18446744073709551615ULL);
    EXPECT_EQ(cfg.geometry.num_antennas, 32);
    EXPECT_EQ(cfg.output_path, "results.csv");
    EXPECT_EQ(cfg.threads, 3);
    EXPECT_EQ(cfg.first_trial, 10);
}

TEST(ConfigFile, LaterSettingsOverrideEarlierOnes) {
    ExperimentConfig cfg;
    apply_config_text(cfg, "noise = gmn\ngmn_a = 0.5\ngmn_scope = entry\ntrials = 10\n");
    apply_setting(cfg, "trials", "20");
    apply_setting(cfg, "noise", "gmn");
    EXPECT_EQ(cfg.trials, 20);
    const auto& gmn = std::get<MiddletonClassA>(cfg.noise);
    EXPECT_EQ(gmn.A, 0.5);
    EXPECT_EQ(gmn.scope, MixtureScope::Entry);
    apply_setting(cfg, "noise", "dcn");
    apply_setting(cfg, "beta", "0.25");
    EXPECT_EQ(std::get<DiagonalGaussian>(cfg.noise).beta, 0.25);
}

TEST(ConfigFile, ErrorsNameTheLine) {
    ExperimentConfig cfg;
    try {
        apply_config_text(cfg, "trials = 5\nbogus = 1\n", "exp.cfg");
        FAIL();
    } catch (const InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find("exp.cfg:2"), std::string::npos) << e.what();
    }
    EXPECT_THROW(apply_config_text(cfg, "trials 5"), InvalidArgument);
    EXPECT_THROW(apply_config_text(cfg, "trials = five"), InvalidArgument);
    EXPECT_THROW(apply_config_text(cfg, "noise = iid\ngamma = 0.3"), InvalidArgument);
    EXPECT_THROW(apply_config_text(cfg, "case = 4"), InvalidArgument);
    EXPECT_THROW(apply_config_text(cfg, "power = loud"), InvalidArgument);
    EXPECT_THROW(apply_config_file(cfg, "/nonexistent-dir-for-sedan/cfg"), IoError);
}

}  // namespace

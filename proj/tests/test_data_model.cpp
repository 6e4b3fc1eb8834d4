#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "extval/balancer.hpp"
#include "extval/sample.hpp"
#include "extval/simulator.hpp"
#include "extval/transform.hpp"
#include "test_helpers.hpp"

using namespace extval;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/extval_test_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

Sample tinySample() {
    Sample s;
    s.features.resize(2, 2);
    s.features << 2, 3, 5, 7;
    s.outcomes.resize(2);
    s.outcomes << 1, 0;
    s.featureNames = {"x1", "x2"};
    return s;
}

}  // namespace

TEST_CASE("loadSampleCsv parses a minimal file") {
    TempFile f("tiny.csv");
    std::ofstream(f.path) << "x1,y\n2,1\n3,0\n";
    Sample s = loadSampleCsv(f.path, "y");
    CHECK(s.n() == 2);
    CHECK(s.p() == 1);
    CHECK(s.features(0, 0) == 2.0);
    CHECK(s.features(1, 0) == 3.0);
    CHECK(s.outcomes[0] == 1.0);
    CHECK(s.outcomes[1] == 0.0);
    CHECK(s.featureNames == std::vector<std::string>{"x1"});
}

TEST_CASE("loadSampleCsv error reporting") {
    TempFile f("bad.csv");
    SUBCASE("non-binary outcome names the row") {
        std::ofstream(f.path) << "x1,y\n2,2\n";
        CHECK_THROWS_WITH_AS(loadSampleCsv(f.path, "y"), "outcome not binary at row 1",
                             CsvError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(loadSampleCsv("/nonexistent/f.csv", "y"), CsvError);
    }
    SUBCASE("non-numeric cell locates row and column") {
        std::ofstream(f.path) << "x1,y\nfoo,1\n";
        CHECK_THROWS_WITH_AS(loadSampleCsv(f.path, "y"),
                             "non-numeric cell at row 1, column 'x1': 'foo'", CsvError);
    }
    SUBCASE("duplicate header") {
        std::ofstream(f.path) << "x1,x1,y\n1,2,1\n";
        CHECK_THROWS_AS(loadSampleCsv(f.path, "y"), CsvError);
    }
    SUBCASE("missing outcome column") {
        std::ofstream(f.path) << "x1,x2\n1,2\n";
        CHECK_THROWS_AS(loadSampleCsv(f.path, "y"), CsvError);
    }
}

TEST_CASE("simulation output round-trips bit-exactly through CSV") {
    sim::SemConfig cfg;
    cfg.seed = 11;
    sim::SemCoefficients model = sim::sampleCoefficients(cfg);
    Sample s = sim::generate(model, 5000, 0, 17);
    REQUIRE(s.p() == 10);  // 11 columns with the outcome

    TempFile f("roundtrip.csv");
    writeSampleCsv(f.path, s, "y");
    Sample back = loadSampleCsv(f.path, "y");
    REQUIRE(back.n() == s.n());
    REQUIRE(back.p() == s.p());
    CHECK((back.features.array() == s.features.array()).all());  // bit-exact
    CHECK((back.outcomes.array() == s.outcomes.array()).all());
    CHECK(back.featureNames == s.featureNames);
}

TEST_CASE("applyTransforms column formulas") {
    Sample s = tinySample();
    TransformSpec spec;
    spec.terms = {{TermKind::PerClassMean, "x1", 1},
                  {TermKind::PerClassMean, "x1", 0},
                  {TermKind::PerClassMean, "x2", 1},
                  {TermKind::PerClassMean, "x2", 0},
                  {TermKind::Prevalence, "", -1}};
    TransformedMatrix z = applyTransforms(s, spec);
    // y=1 row: (x1*y, x1*(1-y), x2*y, x2*(1-y), y)
    Eigen::RowVectorXd row1(5);
    row1 << 2, 0, 3, 0, 1;
    CHECK((z.z.row(0).array() == row1.array()).all());
    // y=0 row: complementary indicator
    Eigen::RowVectorXd row0(5);
    row0 << 0, 5, 0, 7, 0;
    CHECK((z.z.row(1).array() == row0.array()).all());
}

TEST_CASE("applyTransforms second moment and errors") {
    Sample s = tinySample();
    TransformSpec spec;
    spec.terms = {{TermKind::PerClassSecondMoment, "x1", 1}};
    TransformedMatrix z = applyTransforms(s, spec);
    CHECK(z.z(0, 0) == 4.0);  // x1=2, y=1
    CHECK(z.z(1, 0) == 0.0);

    TransformSpec bad;
    bad.terms = {{TermKind::MarginalMean, "nope", -1}};
    CHECK_THROWS_AS(applyTransforms(s, bad), std::invalid_argument);

    TransformSpec dup;
    dup.terms = {{TermKind::Prevalence, "", -1}, {TermKind::Prevalence, "", -1}};
    CHECK_THROWS_AS(applyTransforms(s, dup), std::invalid_argument);
}

TEST_CASE("statsFromSample is the column mean of Z") {
    Sample s;
    s.features.resize(2, 1);
    s.features << 0, 1;
    s.outcomes.resize(2);
    s.outcomes << 1, 1;
    s.featureNames = {"x1"};
    TransformSpec spec;
    spec.terms = {{TermKind::PerClassMean, "x1", 1}, {TermKind::Prevalence, "", -1}};
    MomentTarget t = statsFromSample(s, spec);
    CHECK(t.values[0] == doctest::Approx(0.5));
    CHECK(t.values[1] == doctest::Approx(1.0));
    CHECK(*t.nExternal == 2);

    TransformSpec prevOnly;
    prevOnly.terms = {{TermKind::Prevalence, "", -1}};
    Sample mixed = tinySample();
    CHECK(statsFromSample(mixed, prevOnly).values[0] ==
          doctest::Approx(mixed.outcomes.mean()));
}

TEST_CASE("statsFromSample matches a hand-computed column mean on SEM data") {
    sim::SemConfig cfg;
    cfg.seed = 23;
    sim::GeneratedData data = sim::generateExperimentTriplet(cfg, 50, 50, 200);
    TransformSpec spec = TransformSpec::perClassMoments(data.external.featureNames);
    MomentTarget t = statsFromSample(data.external, spec);
    TransformedMatrix z = applyTransforms(data.external, spec);
    for (Eigen::Index j = 0; j < z.z.cols(); ++j) {
        double mean = z.z.col(j).sum() / static_cast<double>(z.z.rows());
        CHECK(t.values[j] == doctest::Approx(mean).epsilon(1e-12));
    }
}

TEST_CASE("convertReportedStats formulas") {
    TransformSpec spec;
    spec.terms = {{TermKind::PerClassMean, "x1", 1},
                  {TermKind::PerClassSecondMoment, "x1", 1},
                  {TermKind::Prevalence, "", -1}};
    SUBCASE("zero-variance class") {
        std::vector<ReportedClassStat> report = {{"x1", 1.0, 0.0, 1}};
        MomentTarget t = convertReportedStats(report, 0.5, spec);
        CHECK(t.values[0] == doctest::Approx(0.5));
        CHECK(t.values[1] == doctest::Approx(0.5));
        CHECK(t.values[2] == doctest::Approx(0.5));
    }
    SUBCASE("second moment with variance, class 0") {
        TransformSpec spec0;
        spec0.terms = {{TermKind::PerClassSecondMoment, "x1", 0}};
        std::vector<ReportedClassStat> report = {{"x1", 2.0, 1.0, 0}};
        MomentTarget t = convertReportedStats(report, 0.25, spec0);
        CHECK(t.values[0] == doctest::Approx(3.75));  // (4+1)*0.75
    }
    SUBCASE("prevalence must be interior") {
        std::vector<ReportedClassStat> report = {{"x1", 1.0, 0.0, 1}};
        CHECK_THROWS_AS(convertReportedStats(report, 0.0, spec), std::invalid_argument);
        CHECK_THROWS_AS(convertReportedStats(report, 1.0, spec), std::invalid_argument);
    }
    SUBCASE("missing report entry") {
        std::vector<ReportedClassStat> report = {{"x2", 1.0, 0.0, 1}};
        CHECK_THROWS_AS(convertReportedStats(report, 0.5, spec), std::invalid_argument);
    }
}

TEST_CASE("convertReportedStats second moments verified against a generated sample") {
    // Build a sample whose class-0 mean is 2 and population variance 1.
    Sample s;
    s.features.resize(4, 1);
    s.features << 1, 3, 2, 2;  // class 0 rows: {1, 3}; mean 2, pop var 1
    s.outcomes.resize(4);
    s.outcomes << 0, 0, 1, 1;  // prevalence 0.5
    s.featureNames = {"x1"};
    TransformSpec spec;
    spec.terms = {{TermKind::PerClassSecondMoment, "x1", 0}};
    MomentTarget direct = statsFromSample(s, spec);
    std::vector<ReportedClassStat> report = {{"x1", 2.0, 1.0, 0}};
    MomentTarget converted = convertReportedStats(report, 0.5, spec);
    CHECK(converted.values[0] == doctest::Approx(direct.values[0]).epsilon(1e-12));
}

TEST_CASE("convertReportedStats consistency with empirical statistics") {
    sim::SemConfig cfg;
    cfg.seed = 5;
    Sample s = sim::generate(sim::sampleCoefficients(cfg), 300, 0, 77);
    TransformSpec spec = TransformSpec::perClassMoments(s.featureNames);
    MomentTarget direct = statsFromSample(s, spec);

    double prevalence = s.outcomes.mean();
    std::vector<ReportedClassStat> report;
    for (Eigen::Index j = 0; j < s.p(); ++j) {
        for (int cls : {0, 1}) {
            double sum = 0.0, count = 0.0;
            for (Eigen::Index i = 0; i < s.n(); ++i)
                if (s.outcomes[i] == cls) {
                    sum += s.features(i, j);
                    count += 1.0;
                }
            double mean = sum / count;
            double var = 0.0;
            for (Eigen::Index i = 0; i < s.n(); ++i)
                if (s.outcomes[i] == cls) {
                    double d = s.features(i, j) - mean;
                    var += d * d;
                }
            var /= count;  // population convention
            report.push_back({s.featureNames[static_cast<std::size_t>(j)], mean, var, cls});
        }
    }
    MomentTarget converted = convertReportedStats(report, prevalence, spec);
    for (Eigen::Index j = 0; j < direct.values.size(); ++j)
        CHECK(converted.values[j] ==
              doctest::Approx(direct.values[j]).epsilon(1e-12));
}

TEST_CASE("bessel correction under the sample-variance convention") {
    TransformSpec spec;
    spec.terms = {{TermKind::PerClassSecondMoment, "x1", 1}};
    std::vector<ReportedClassStat> report = {{"x1", 0.0, 10.0, 1}};
    MomentTarget pop = convertReportedStats(report, 0.5, spec, VarianceConvention::Population);
    MomentTarget smp =
        convertReportedStats(report, 0.5, spec, VarianceConvention::Sample, 10L);
    CHECK(pop.values[0] == doctest::Approx(5.0));
    CHECK(smp.values[0] == doctest::Approx(5.0 * 0.9));
}

TEST_CASE("pruneLowVarianceColumns") {
    TransformedMatrix z;
    z.z.resize(4, 2);
    z.z << 1, 0.0, 1, 0.5, 1, 1.0, 1, 1.5;  // col 0 constant, col 1 SD > 0.5
    z.spec.terms = {{TermKind::MarginalMean, "a", -1}, {TermKind::MarginalMean, "b", -1}};
    MomentTarget t;
    t.values.resize(2);
    t.values << 1.0, 0.8;

    PrunedInputs pruned = pruneLowVarianceColumns(z, t, 1e-4);
    REQUIRE(pruned.z.z.cols() == 1);
    CHECK(pruned.prunedTerms.size() == 1);
    CHECK(pruned.prunedTerms[0].feature == "a");
    CHECK(pruned.target.values[0] == 0.8);
    CHECK(pruned.z.spec.terms[0].feature == "b");

    MomentTarget t2;
    t2.values.resize(2);
    t2.values << 1.0, 0.8;
    TransformedMatrix allConst;
    allConst.z = Eigen::MatrixXd::Ones(4, 2);
    allConst.spec = z.spec;
    CHECK_THROWS_WITH_AS(pruneLowVarianceColumns(allConst, t2, 1e-4),
                         "no usable constraints: all columns pruned", std::runtime_error);
}

TEST_CASE("pruning preserves alignment: solve equals solve on originals") {
    // 10-row instance; the constant column's target equals its internal mean,
    // so dropping it must not change the solution.
    testutil::TransformedMatrix z;
    testutil::MomentTarget t;
    testutil::randomFeasibleInstance(99, 10, 2, z, t);
    TransformedMatrix zc;
    zc.z.resize(10, 3);
    zc.z.col(0) = z.z.col(0);
    zc.z.col(1) = Eigen::VectorXd::Constant(10, 3.0);
    zc.z.col(2) = z.z.col(1);
    zc.spec.terms = {z.spec.terms[0], {TermKind::MarginalMean, "const", -1}, z.spec.terms[1]};
    MomentTarget tc;
    tc.values.resize(3);
    tc.values << t.values[0], 3.0, t.values[1];

    PrunedInputs pruned = pruneLowVarianceColumns(zc, tc, 1e-4);
    balancer::WeightSolution a = balancer::solve(pruned.z, pruned.target);
    balancer::WeightSolution b = balancer::solve(z, t);
    REQUIRE(a.status == balancer::SolveStatus::Exact);
    CHECK((a.weights - b.weights).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("indicator partition: per-class mean columns sum to the feature") {
    sim::SemConfig cfg;
    cfg.seed = 31;
    Sample s = sim::generate(sim::sampleCoefficients(cfg), 100, 1, 3);
    TransformSpec spec;
    spec.terms = {{TermKind::PerClassMean, "x3", 1}, {TermKind::PerClassMean, "x3", 0}};
    TransformedMatrix z = applyTransforms(s, spec);
    Eigen::Index f = s.featureIndex("x3");
    for (Eigen::Index i = 0; i < s.n(); ++i)
        CHECK(z.z(i, 0) + z.z(i, 1) == doctest::Approx(s.features(i, f)).epsilon(1e-15));
}

TEST_CASE("stats JSON round trip") {
    TransformSpec spec = TransformSpec::perClassMoments({"x1", "x2"});
    StatsFile stats;
    stats.spec = spec;
    stats.target.values = Eigen::VectorXd::LinSpaced(spec.k(), 0.01, 0.93);
    stats.target.nExternal = 1234;

    std::string path = "/tmp/extval_test_stats.json";
    writeStatsJson(path, stats);
    StatsFile back = readStatsJson(path);
    std::remove(path.c_str());
    REQUIRE(back.spec.terms.size() == spec.terms.size());
    for (std::size_t i = 0; i < spec.terms.size(); ++i) CHECK(back.spec.terms[i] == spec.terms[i]);
    CHECK((back.target.values - stats.target.values).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(*back.target.nExternal == 1234);
}

TEST_CASE("stats JSON rejects malformed input") {
    std::string path = "/tmp/extval_test_badstats.json";
    std::ofstream(path) << R"({"spec": [{"kind": "prevalence", "feature": null, "class": null}],
                              "values": [0.5, 0.6]})";
    CHECK_THROWS_AS(readStatsJson(path), std::runtime_error);
    std::ofstream(path) << R"({"spec": [{"kind": "prevalence", "feature": null, "class": null}],
                              "values": [1.5]})";
    CHECK_THROWS_AS(readStatsJson(path), std::runtime_error);
    std::remove(path.c_str());
}

#include <doctest.h>

#include "crosscheck/metrics.hpp"
#include "generators.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace crosscheck;

namespace {

EntailmentMatrix self_of(const oracle::Mat& a) { return validate_matrix(a, MatrixKind::SelfTarget); }

oracle::Mat blocks(const std::vector<std::size_t>& sizes) {
    const std::size_t m = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    oracle::Mat a(m, std::vector<double>(m, 0.0));
    std::size_t off = 0;
    for (auto s : sizes) {
        for (std::size_t i = off; i < off + s; ++i)
            for (std::size_t j = off; j < off + s; ++j) a[i][j] = 1.0;
        off += s;
    }
    return a;
}

oracle::Mat permute(const oracle::Mat& a, const std::vector<std::size_t>& perm) {
    oracle::Mat out(a.size(), std::vector<double>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a.size(); ++j) out[i][j] = a[perm[i]][perm[j]];
    return out;
}

oracle::Mat to_mat(const Eigen::MatrixXd& e) {
    oracle::Mat a(static_cast<std::size_t>(e.rows()), std::vector<double>(static_cast<std::size_t>(e.cols())));
    for (Eigen::Index i = 0; i < e.rows(); ++i)
        for (Eigen::Index j = 0; j < e.cols(); ++j)
            a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = e(i, j);
    return a;
}

}  // namespace

TEST_CASE("mpd examples") {
    CHECK(mpd(self_of(oracle::Mat(5, std::vector<double>(5, 1.0)))) == 0.0);
    CHECK(mpd(self_of({{1, 0}, {0, 1}})) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(mpd(self_of({{1, 0.5}, {0.5, 1}})) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("mpd matches the oracle and is symmetrization invariant") {
    gen::Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        const std::size_t m = 2 + i % 9;
        const auto raw = gen::raw_matrix(m, i % 2 == 0, rng);
        const auto kind = i % 2 == 0 ? MatrixKind::SelfTarget : MatrixKind::CrossTargetVerifier;
        const auto em = validate_matrix(raw, kind);
        CHECK(std::abs(mpd(em) - oracle::mpd(raw)) <= 1e-12);
        CHECK(mpd(em) == mpd(symmetrize(em)));
        CHECK(mpd(em) >= 0.0);
        CHECK(mpd(em) <= 1.0);
    }
}

TEST_CASE("semantic entropy examples") {
    CHECK(semantic_entropy(self_of(blocks({4}))) == 0.0);
    // {2,1}: -(2/3 ln 2/3 + 1/3 ln 1/3)
    const double expected = -(2.0 / 3.0 * std::log(2.0 / 3.0) + 1.0 / 3.0 * std::log(1.0 / 3.0));
    CHECK(semantic_entropy(self_of(blocks({2, 1}))) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(expected == doctest::Approx(0.6365).epsilon(1e-4));
    CHECK(semantic_entropy(self_of(blocks({1, 1, 1, 1}))) ==
          doctest::Approx(std::log(4.0)).epsilon(1e-14));
    // Chain 0-1-2 is one component even though 0 and 2 do not entail each other.
    const auto chain = self_of({{1, 0.9, 0.1}, {0.9, 1, 0.9}, {0.1, 0.9, 1}});
    CHECK(semantic_entropy(chain) == 0.0);
}

TEST_CASE("semantic entropy on every symmetric binarization up to m = 5") {
    for (std::size_t m = 2; m <= 5; ++m) {
        std::vector<std::pair<std::size_t, std::size_t>> edges;
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t k = j + 1; k < m; ++k) edges.emplace_back(j, k);
        const std::size_t count = std::size_t{1} << edges.size();
        for (std::size_t mask = 0; mask < count; ++mask) {
            oracle::Mat a(m, std::vector<double>(m, 0.1));
            for (std::size_t j = 0; j < m; ++j) a[j][j] = 1.0;
            for (std::size_t e = 0; e < edges.size(); ++e)
                if (mask >> e & 1) a[edges[e].first][edges[e].second] = a[edges[e].second][edges[e].first] = 0.9;
            REQUIRE(std::abs(semantic_entropy(self_of(a), 0.5) - oracle::semantic_entropy(a, 0.5)) <= 1e-12);
        }
    }
}

TEST_CASE("semantic entropy on asymmetric random matrices") {
    gen::Rng rng(3);
    for (int i = 0; i < 300; ++i) {
        const std::size_t m = 2 + i % 7;
        const auto raw = gen::raw_matrix(m, true, rng);
        const double theta = 0.1 + 0.8 * gen::unit(rng);
        CHECK(std::abs(semantic_entropy(self_of(raw), theta) - oracle::semantic_entropy(raw, theta)) <= 1e-12);
    }
}

TEST_CASE("normalized laplacian") {
    const auto l = normalized_laplacian(Eigen::MatrixXd::Ones(3, 3));
    const auto e = oracle::jacobi(to_mat(l));
    CHECK(e.values[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(e.values[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(e.values[2] == doctest::Approx(1.0).epsilon(1e-12));

    Eigen::MatrixXd two = Eigen::MatrixXd::Zero(5, 5);
    two.topLeftCorner(3, 3).setOnes();
    two.bottomRightCorner(2, 2).setOnes();
    const auto e2 = oracle::jacobi(to_mat(normalized_laplacian(two)));
    CHECK(std::abs(e2.values[0]) < 1e-12);
    CHECK(std::abs(e2.values[1]) < 1e-12);
    CHECK(e2.values[2] > 0.5);

    Eigen::MatrixXd isolated = Eigen::MatrixXd::Zero(2, 2);
    isolated(0, 0) = 1.0;
    const auto li = normalized_laplacian(isolated);
    CHECK(li(1, 1) == 1.0);
    CHECK(li(0, 1) == 0.0);

    gen::Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        const auto w = oracle::sym(gen::raw_matrix(2 + i % 7, true, rng));
        const auto lib = to_mat(normalized_laplacian(self_of(w).values()));
        const auto ref = oracle::normalized_laplacian(w);
        for (std::size_t r = 0; r < w.size(); ++r)
            for (std::size_t c = 0; c < w.size(); ++c) CHECK(std::abs(lib[r][c] - ref[r][c]) <= 1e-14);
        for (double lam : oracle::jacobi(lib).values) {
            CHECK(lam >= -1e-12);
            CHECK(lam <= 2.0 + 1e-12);
        }
    }
}

TEST_CASE("laplacian eigenvalues agree with characteristic polynomial roots for m <= 4") {
    gen::Rng rng(8);
    for (int i = 0; i < 200; ++i) {
        const std::size_t m = 2 + i % 3;
        const auto w = oracle::sym(gen::raw_matrix(m, true, rng));
        const auto lap = to_mat(normalized_laplacian(self_of(w).values()));
        const auto by_poly = oracle::charpoly_eigenvalues(lap);
        const auto by_jacobi = oracle::jacobi(lap).values;
        for (std::size_t k = 0; k < m; ++k) CHECK(std::abs(by_poly[k] - by_jacobi[k]) <= 1e-8);
        double ev = 0.0;
        for (double lam : by_poly) ev += std::max(0.0, 1.0 - lam);
        CHECK(std::abs(eigv(self_of(w)) - ev) <= 1e-8);
    }
}

TEST_CASE("eigv") {
    CHECK(eigv(self_of(blocks({5}))) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(eigv(self_of(blocks({3, 2}))) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(eigv(self_of(blocks({1, 2, 3, 1}))) == doctest::Approx(4.0).epsilon(1e-12));

    gen::Rng rng(9);
    for (int i = 0; i < 200; ++i) {
        const auto raw = gen::raw_matrix(2 + i % 7, true, rng);
        CHECK(std::abs(eigv(self_of(raw)) - oracle::eigv(raw)) <= 1e-9);
        CHECK(eigv(self_of(raw)) >= 0.0);
    }
}

TEST_CASE("ecc") {
    CHECK(ecc(self_of(blocks({4}))) == doctest::Approx(0.0).epsilon(1e-12));
    // Identity m=2: L = 0, both unit vectors kept, embeddings (1,0) and (0,1)
    // around mean (1/2, 1/2): total squared spread 1.
    CHECK(ecc(self_of(blocks({1, 1})), 0.9) == doctest::Approx(1.0).epsilon(1e-12));
    // Two blocks: the zero eigenvalues span block indicators; spread is
    // sqrt(1 - 0) for the non-constant direction = 1.
    CHECK(ecc(self_of(blocks({3, 2})), 0.9) == doctest::Approx(1.0).epsilon(1e-12));

    gen::Rng rng(10);
    int compared = 0;
    for (int i = 0; i < 300; ++i) {
        const auto raw = gen::raw_matrix(2 + i % 7, true, rng);
        const double thr = kDefaultEigThreshold;
        // Skip instances with an eigenvalue on the cut; the kept subspace is
        // ill-defined there.
        const auto ev = oracle::jacobi(oracle::normalized_laplacian(oracle::sym(raw))).values;
        if (std::any_of(ev.begin(), ev.end(), [&](double l) { return std::abs(l - thr) < 1e-6; })) continue;
        CHECK(std::abs(ecc(self_of(raw), thr) - oracle::ecc(raw, thr)) <= 1e-8);
        ++compared;
    }
    CHECK(compared > 250);
    CHECK_THROWS_AS(ecc(self_of(blocks({2})), 0.0), InvalidArgument);
}

TEST_CASE("kle") {
    CHECK(std::abs(kle(self_of(blocks({5})))) <= 1e-12);
    CHECK(kle(self_of(blocks({1, 1, 1, 1}))) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    gen::Rng rng(12);
    for (int i = 0; i < 200; ++i) {
        const std::size_t m = 2 + i % 7;
        const auto raw = gen::raw_matrix(m, true, rng);
        const double v = kle(self_of(raw));
        CHECK(std::abs(v - oracle::kle(raw)) <= 1e-9);
        CHECK(v >= -1e-12);
        CHECK(v <= std::log(static_cast<double>(m)) + 1e-12);
    }
}

TEST_CASE("all-ones is the minimum of mpd, semantic entropy and kle") {
    gen::Rng rng(13);
    for (int i = 0; i < 100; ++i) {
        const std::size_t m = 2 + i % 7;
        const auto raw = gen::raw_matrix(m, true, rng);
        const auto ones = self_of(oracle::Mat(m, std::vector<double>(m, 1.0)));
        CHECK(mpd(ones) <= mpd(self_of(raw)));
        CHECK(semantic_entropy(ones) <= semantic_entropy(self_of(raw)));
        CHECK(kle(ones) <= kle(self_of(raw)) + 1e-12);
    }
}

TEST_CASE("spectral metrics are permutation invariant") {
    gen::Rng rng(14);
    for (int i = 0; i < 100; ++i) {
        const std::size_t m = 2 + i % 7;
        const auto raw = gen::raw_matrix(m, true, rng);
        std::vector<std::size_t> perm(m);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        const auto p = permute(raw, perm);
        CHECK(std::abs(kle(self_of(raw)) - kle(self_of(p))) <= 1e-9);
        CHECK(std::abs(eigv(self_of(raw)) - eigv(self_of(p))) <= 1e-9);
        CHECK(semantic_entropy(self_of(raw)) == doctest::Approx(semantic_entropy(self_of(p))));
    }
}

TEST_CASE("combined score") {
    gen::Rng rng(15);
    const auto s = gen::self_matrix(4, rng);
    const auto c = gen::cross_matrix(4, rng);
    CHECK(combined_score(s, c, 0.0) == mpd(s));
    CHECK(combined_score(s, c, 1.0) == mpd(c));
    // mpd_self 0.2, mpd_cross 0.6
    const auto s2 = self_of({{1, 0.6}, {0.6, 1}});
    const auto c2 = validate_matrix({{0.4, 0.4}, {0.4, 0.4}}, MatrixKind::CrossTargetVerifier);
    CHECK(mpd(s2) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(mpd(c2) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(combined_score(s2, c2, 0.5) == doctest::Approx(0.4).epsilon(1e-15));
    CHECK_THROWS_AS(combined_score(s2, c2, 1.5), InvalidArgument);
}

TEST_CASE("metric names and parsing") {
    CHECK(parse_metric_kind("mpd_self") == MetricKind::MpdSelf);
    CHECK(parse_metric_kind("mpd_cross") == MetricKind::MpdCross);
    CHECK(parse_metric_kind("se") == MetricKind::SemanticEntropy);
    CHECK(parse_metric_kind("eigv") == MetricKind::EigV);
    CHECK(parse_metric_kind("ecc") == MetricKind::Ecc);
    CHECK(parse_metric_kind("kle") == MetricKind::Kle);
    CHECK(parse_metric_kind("combined") == MetricKind::Combined);
    CHECK_THROWS_AS(parse_metric_kind("bogus"), InvalidArgument);
    CHECK(Metric::mpd_self().name() == "mpd_self");
    CHECK(Metric::combined(0.3).name() == "combined(lambda=0.3)");
    CHECK_THROWS_AS(Metric::combined(-0.1).validate(), InvalidArgument);
}

TEST_CASE("score_case dispatch") {
    gen::Rng rng(16);
    QuestionCase c;
    c.id = "q1";
    c.question = "?";
    c.p_self = gen::self_matrix(5, rng);

    const auto rec = score_case(c, Metric::mpd_self());
    CHECK(rec.question_id == "q1");
    CHECK(rec.metric_name == "mpd_self");
    CHECK(rec.value == mpd(*c.p_self));
    CHECK_THROWS_AS(score_case(c, Metric::combined(0.3)), MissingMatrix);
    CHECK_THROWS_AS(score_case(c, Metric::mpd_cross()), MissingMatrix);

    c.p_cross = gen::cross_matrix(5, rng);
    CHECK(score_case(c, {MetricKind::Kle}).value == kle(*c.p_self));
    CHECK(score_case(c, Metric::combined(0.3)).value == combined_score(*c.p_self, *c.p_cross, 0.3));
    CHECK(score_case(c, Metric::mpd_cross()).value == mpd(*c.p_cross));

    QuestionCase bare;
    bare.id = "q2";
    CHECK_THROWS_AS(score_case(bare, Metric::mpd_self()), MissingMatrix);
}

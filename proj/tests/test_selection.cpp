#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "smilegan/data.hpp"
#include "smilegan/selection.hpp"

using namespace smilegan;

namespace {

// Pair-counting ARI oracle, O(n^2); independent of the contingency-table route.
double ari_pair_counting(const std::vector<int>& a, const std::vector<int>& b) {
    const std::size_t n = a.size();
    double same_same = 0.0, same_a = 0.0, same_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool in_a = a[i] == a[j];
            const bool in_b = b[i] == b[j];
            same_a += in_a;
            same_b += in_b;
            same_same += in_a && in_b;
        }
    }
    const double total = static_cast<double>(n) * (n - 1.0) / 2.0;
    const double expected = same_a * same_b / total;
    const double maximum = 0.5 * (same_a + same_b);
    if (maximum == expected) return 1.0;
    return (same_same - expected) / (maximum - expected);
}

std::filesystem::path temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "smilegan_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("ari basics") {
    Partition a = Partition::from_labels({0, 0, 1, 1});
    Partition b = Partition::from_labels({1, 1, 0, 0});
    CHECK(ari(a, a) == doctest::Approx(1.0));
    CHECK(ari(a, b) == doctest::Approx(1.0));  // relabeling invariance

    Partition c = Partition::from_labels({0, 0, 1, 2});
    CHECK(ari(a, c) == doctest::Approx(4.0 / 7.0).epsilon(1e-12));
    CHECK(ari(c, a) == doctest::Approx(4.0 / 7.0).epsilon(1e-12));

    Partition single = Partition::from_labels({0, 0, 0});
    CHECK(ari(single, single) == 1.0);

    CHECK_THROWS_AS(ari(a, single), Error);
}

TEST_CASE("ari matches the pair-counting oracle on random partitions") {
    Rng rng(2025);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 2 + rng.uniform_int(30);
        const int ka = 1 + static_cast<int>(rng.uniform_int(4));
        const int kb = 1 + static_cast<int>(rng.uniform_int(4));
        std::vector<int> a(n), b(n);
        for (auto& v : a) v = static_cast<int>(rng.uniform_int(ka));
        for (auto& v : b) v = static_cast<int>(rng.uniform_int(kb));
        const double fast = ari(Partition::from_labels(a), Partition::from_labels(b));
        const double slow = ari_pair_counting(a, b);
        CHECK(std::abs(fast - slow) < 1e-12);
    }
}

TEST_CASE("match_accuracy finds the best relabeling") {
    Partition pred = Partition::from_labels({1, 1, 0, 0});
    Partition truth = Partition::from_labels({0, 0, 1, 1});
    MatchResult r = match_accuracy(pred, truth);
    CHECK(r.accuracy == doctest::Approx(1.0));
    CHECK(r.permutation == std::vector<int>{1, 0});

    Partition pred2 = Partition::from_labels({0, 0, 1, 2});
    Partition truth2 = Partition::from_labels({0, 0, 1, 1});
    CHECK(match_accuracy(pred2, truth2).accuracy == doctest::Approx(0.75));

    MatchResult identity = match_accuracy(truth2, truth2);
    CHECK(identity.accuracy == doctest::Approx(1.0));
    CHECK(identity.permutation == std::vector<int>{0, 1});
}

TEST_CASE("match_accuracy equals an independent exhaustive search") {
    Rng rng(4);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 3 + rng.uniform_int(20);
        const int k = 2 + static_cast<int>(rng.uniform_int(4));  // up to 5 clusters
        std::vector<int> pred(n), truth(n);
        for (auto& v : pred) v = static_cast<int>(rng.uniform_int(k));
        for (auto& v : truth) v = static_cast<int>(rng.uniform_int(k));

        const MatchResult fast =
            match_accuracy(Partition::from_labels(pred), Partition::from_labels(truth));

        std::vector<int> perm(k);
        std::iota(perm.begin(), perm.end(), 0);
        double best = 0.0;
        do {
            std::size_t hits = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (perm[pred[i]] == truth[i]) ++hits;
            best = std::max(best, static_cast<double>(hits) / n);
        } while (std::next_permutation(perm.begin(), perm.end()));
        CHECK(fast.accuracy == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("match_accuracy sanity floor and error paths") {
    // constant prediction cannot beat the dominant-class frequency, and the
    // matcher must reach at least that
    Partition truth = Partition::from_labels({0, 0, 0, 1, 1, 2});
    Partition constant = Partition::from_labels({0, 0, 0, 0, 0, 0});
    CHECK(match_accuracy(constant, truth).accuracy == doctest::Approx(0.5));

    CHECK_THROWS_AS(match_accuracy(Partition::from_labels({0, 1}),
                                   Partition::from_labels({0, 1, 2})),
                    Error);
    std::vector<int> nine(10);
    std::iota(nine.begin(), nine.end(), 0);  // k = 10 > 8
    try {
        match_accuracy(Partition::from_labels(nine), Partition::from_labels(nine));
        FAIL("expected TooManyClusters");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TooManyClusters);
    }
}

TEST_CASE("consensus of a single model returns its probabilities unchanged") {
    TrainingConfig cfg;
    cfg.m = 3;
    SmileGanModel model = SmileGanModel::initialize(ArchitectureSpec::create(8, 3), cfg, 5);
    Rng rng(6);
    Matrix pt(10, 8);
    for (std::size_t i = 0; i < pt.size(); ++i) pt.data()[i] = rng.normal(1.0, 0.1);

    ConsensusResult r = consensus({model}, pt);
    CHECK(r.template_index == 0);
    CHECK(r.probabilities == assign(model, pt));
}

namespace {

// A hand-built clustering network whose labels spread over all three
// clusters: cluster 0 tracks feature 0, cluster 1 tracks feature 1, and
// cluster 2 wins when both stay below their mean.
SmileGanModel crafted_model() {
    TrainingConfig cfg;
    cfg.m = 3;
    SmileGanModel model = SmileGanModel::initialize(ArchitectureSpec::create(8, 3), cfg, 9);
    auto& g = model.params_g.layers;
    auto clear = [](LinearLayer& l) {
        std::fill(l.weight.data(), l.weight.data() + l.weight.size(), 0.0);
        std::fill(l.bias.begin(), l.bias.end(), 0.0);
    };
    for (auto& l : g) clear(l);
    for (std::size_t i = 0; i < 8; ++i) g[0].weight(i, i) = 1.0;  // 8 -> 8 pass-through
    for (std::size_t i = 0; i < 4; ++i) g[1].weight(i, i) = 1.0;  // keep features 0..3
    g[2].weight(0, 0) = 1.0;                                      // keep features 0..1
    g[2].weight(1, 1) = 1.0;
    g[3].weight(0, 0) = 8.0;
    g[3].weight(1, 1) = 8.0;
    g[3].bias[2] = 8.0;  // constant logit at the feature mean
    return model;
}

SmileGanModel rotate_g_outputs(const SmileGanModel& model) {
    SmileGanModel rotated = model;
    LinearLayer& last = rotated.params_g.layers.back();
    const LinearLayer original = model.params_g.layers.back();
    for (std::size_t c = 0; c < 3; ++c) {
        const std::size_t src = (c + 1) % 3;
        for (std::size_t j = 0; j < last.weight.cols(); ++j)
            last.weight(c, j) = original.weight(src, j);
        last.bias[c] = original.bias[src];
    }
    return rotated;
}

}  // namespace

TEST_CASE("consensus undoes a pure label permutation") {
    SmileGanModel model = crafted_model();
    Rng rng(10);
    Matrix pt(40, 8);
    for (std::size_t i = 0; i < pt.size(); ++i) pt.data()[i] = rng.normal(1.0, 0.3);

    // the crafted model must actually use all three clusters
    const Matrix base = assign(model, pt);
    std::vector<int> hist(3, 0);
    for (int l : dominant_labels(base)) hist[l]++;
    for (int c : hist) REQUIRE(c > 0);

    SmileGanModel rotated = rotate_g_outputs(model);
    ConsensusResult r = consensus({model, rotated}, pt);
    CHECK(r.template_index == 0);
    for (std::size_t i = 0; i < base.rows(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(r.probabilities(i, j) == doctest::Approx(base(i, j)).epsilon(1e-9));
            sum += r.probabilities(i, j);
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
}

TEST_CASE("consensus is invariant to the order of non-template models") {
    SmileGanModel a = crafted_model();
    SmileGanModel b = rotate_g_outputs(a);
    SmileGanModel c = rotate_g_outputs(b);
    Rng rng(12);
    Matrix pt(30, 8);
    for (std::size_t i = 0; i < pt.size(); ++i) pt.data()[i] = rng.normal(1.0, 0.3);

    ConsensusResult r1 = consensus({a, b, c}, pt);
    ConsensusResult r2 = consensus({a, c, b}, pt);
    CHECK(r1.template_index == 0);
    CHECK(r2.template_index == 0);
    for (std::size_t i = 0; i < r1.probabilities.size(); ++i)
        CHECK(r1.probabilities.data()[i] ==
              doctest::Approx(r2.probabilities.data()[i]).epsilon(1e-12));
}

TEST_CASE("consensus rejects mismatched architectures") {
    TrainingConfig cfg;
    cfg.m = 3;
    SmileGanModel a = SmileGanModel::initialize(ArchitectureSpec::create(8, 3), cfg, 1);
    cfg.m = 4;
    SmileGanModel b = SmileGanModel::initialize(ArchitectureSpec::create(8, 4), cfg, 1);
    Matrix pt(4, 8, 1.0);
    try {
        consensus({a, b}, pt);
        FAIL("expected ArchMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ArchMismatch);
    }
}

TEST_CASE("choose_m validates its inputs and returns a candidate") {
    SyntheticConfig scfg = presets::synthetic_benchmark();
    scfg.cn_count = 60;
    scfg.pt_count = 60;
    scfg.n_features = 20;
    scfg.spec.patterns = {
        {"a", {0, 1, 2, 3, 4}, 0.3, 0.3, 30},
        {"b", {10, 11, 12, 13, 14}, 0.3, 0.3, 30},
    };
    scfg.spec.confounder.reset();
    SyntheticResult data = generate_synthetic(scfg, 1);
    const Matrix cn = data.table.values_of(Group::CN);
    const Matrix pt = data.table.values_of(Group::PT);

    TrainingConfig cfg;
    cfg.batch_size = 16;
    cfg.max_epoch = 8;
    cfg.stop.warmup_epochs = 100;

    CHECK_THROWS_AS(choose_m(cn, pt, {}, 3, 0.1, cfg, 1), Error);
    CHECK_THROWS_AS(choose_m(cn, pt, {2}, 1, 0.1, cfg, 1), Error);
    CHECK_THROWS_AS(choose_m(cn, pt, {2}, 3, 1.5, cfg, 1), Error);

    ChooseMResult r = choose_m(cn, pt, {2, 3}, 2, 0.1, cfg, 1, 2);
    CHECK((r.chosen_m == 2 || r.chosen_m == 3));
    CHECK(r.mean_ari.size() == 2);
    CHECK(r.std_ari.size() == 2);
    for (double v : r.mean_ari) {
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
    }

    const auto path = temp_path("selection.json");
    write_selection_report(r, path.string());
    std::ifstream in(path);
    nlohmann::json j;
    in >> j;
    CHECK(j.contains("candidate_ms"));
    CHECK(j.contains("per_m_mean_ari"));
    CHECK(j.contains("per_m_ari_std"));
    CHECK(j["chosen_m"] == r.chosen_m);
}

TEST_CASE("assignments csv has one probability column per pattern") {
    Matrix probs = Matrix::from_data(2, 3, {0.5, 0.25, 0.25, 0.1, 0.2, 0.7});
    const auto path = temp_path("assign.csv");
    write_assignments_csv({"p1", "p2"}, probs, path.string());
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "id,p_0,p_1,p_2,dominant");
    std::getline(in, line);
    CHECK(line == "p1,0.5,0.25,0.25,0");
    std::getline(in, line);
    CHECK(line == "p2,0.1,0.2,0.7,2");  // shortest round-trip form
}

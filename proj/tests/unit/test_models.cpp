#include <doctest.h>

#include "cfready/error.hpp"
#include "cfready/models.hpp"
#include "test_support.hpp"

using namespace cfready;
using cftest::code_of;

namespace {

DecisionTree leaf_tree(ClassCounts counts, std::size_t n_features = 1) {
    DecisionTree t;
    t.n_features = n_features;
    TreeNode leaf;
    leaf.counts = counts;
    t.nodes.push_back(leaf);
    return t;
}

std::size_t depth_of(const DecisionTree& t, std::size_t i = 0) {
    const auto& n = t.nodes[i];
    if (n.is_leaf()) return 0;
    return 1 + std::max(depth_of(t, static_cast<std::size_t>(n.left)), depth_of(t, static_cast<std::size_t>(n.right)));
}

std::vector<std::vector<double>> to_rows(const RowMatrix& m) {
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < m.rows(); ++i) out.emplace_back(m.row(i).begin(), m.row(i).end());
    return out;
}

RowMatrix column(std::initializer_list<double> xs) {
    RowMatrix m(1);
    for (double x : xs) m.push_back(std::vector<double>{x});
    return m;
}

Hyperparams small_forest(std::uint64_t seed = 3, std::size_t trees = 15) {
    Hyperparams hp;
    hp.seed = seed;
    hp.forest.n_trees = trees;
    return hp;
}

} // namespace

TEST_SUITE("models") {

TEST_CASE("gini examples") {
    CHECK(gini({5, 5, 0, 0}) == 0.5);
    CHECK(gini({10, 0, 0, 0}) == 0.0);
    CHECK(gini({1, 1, 1, 1}) == 0.75);
    CHECK(gini({0, 0, 3, 1}) == doctest::Approx(1.0 - (9.0 + 1.0) / 16.0));
    CHECK(code_of([] { gini({0, 0, 0, 0}); }) == Errc::empty_node);
}

TEST_CASE("gini with class weights counts weighted mass") {
    CHECK(gini({1, 2, 0, 0}, {2.0, 1.0, 1.0, 1.0}) == 0.5);
}

TEST_CASE("property: gini stays in [0, 0.75] and is zero only for pure nodes") {
    cftest::Gen g(17);
    for (int i = 0; i < 2000; ++i) {
        ClassCounts c{};
        for (auto& x : c) x = g.chance(0.4) ? 0 : g.int_in(0, 50);
        if (c[0] + c[1] + c[2] + c[3] == 0) c[static_cast<std::size_t>(g.label())] = 1;
        const double v = gini(c);
        const auto nonzero = std::count_if(c.begin(), c.end(), [](auto x) { return x > 0; });
        CHECK(v >= 0.0);
        CHECK(v <= 0.75 + 1e-15);
        CHECK((v == 0.0) == (nonzero == 1));
    }
}

TEST_CASE("best split takes the midpoint between the classes") {
    const auto rows = column({0, 1, 10, 11});
    const std::vector<int> labels{0, 0, 1, 1};
    const std::vector<std::size_t> features{0};
    const auto s = best_split(rows, labels, features);
    REQUIRE(s.has_value());
    CHECK(s->feature == 0);
    CHECK(s->threshold == 5.5);
    CHECK(s->impurity_decrease == 0.5);
}

TEST_CASE("best split on a pure or constant column is absent") {
    const std::vector<std::size_t> features{0};
    const std::vector<int> pure{2, 2, 2};
    CHECK_FALSE(best_split(column({1, 2, 3}), pure, features).has_value());
    const std::vector<int> mixed{0, 1, 0};
    CHECK_FALSE(best_split(column({4, 4, 4}), mixed, features).has_value());
}

TEST_CASE("best split prefers the informative feature") {
    const auto rows = RowMatrix::from_rows({{0, 7}, {1, 3}, {0, 8}, {1, 2}});
    const std::vector<int> labels{0, 1, 0, 1};
    const std::vector<std::size_t> features{0, 1};
    const auto s = best_split(rows, labels, features);
    REQUIRE(s.has_value());
    CHECK(s->impurity_decrease == 0.5);
    // both columns separate perfectly; the first one scanned wins
    CHECK(s->feature == 0);
    CHECK(s->threshold == 0.5);
}

TEST_CASE("property: best split matches a brute-force scan") {
    cftest::Gen g(23);
    for (int it = 0; it < 200; ++it) {
        const auto [rows, labels] = cftest::random_consistent_dataset(g, static_cast<std::size_t>(g.int_in(2, 30)), 3);
        const std::vector<std::size_t> features{0, 1, 2};
        double best = 0.0;
        const auto n = static_cast<double>(rows.rows());
        auto impurity = [](const std::array<double, 4>& c) {
            double t = c[0] + c[1] + c[2] + c[3], s = 0;
            for (double x : c) s += (x / t) * (x / t);
            return 1 - s;
        };
        std::array<double, 4> all{};
        for (int l : labels) all[static_cast<std::size_t>(l)] += 1;
        for (std::size_t f = 0; f < 3; ++f) {
            for (std::size_t a = 0; a < rows.rows(); ++a) {
                const double thr = rows.at(a, f);
                std::array<double, 4> left{}, right{};
                for (std::size_t r = 0; r < rows.rows(); ++r)
                    (rows.at(r, f) <= thr ? left : right)[static_cast<std::size_t>(labels[r])] += 1;
                const double nl = left[0] + left[1] + left[2] + left[3];
                const double nr = n - nl;
                if (nl == 0 || nr == 0) continue;
                best = std::max(best, impurity(all) - (nl * impurity(left) + nr * impurity(right)) / n);
            }
        }
        const auto s = best_split(rows, labels, features);
        if (best <= 1e-12) {
            CHECK_FALSE(s.has_value());
        } else {
            REQUIRE(s.has_value());
            CHECK(s->impurity_decrease == doctest::Approx(best).epsilon(1e-12));
        }
    }
}

TEST_CASE("a pure node is a single leaf") {
    std::mt19937_64 rng(1);
    const std::vector<int> labels{3, 3, 3};
    const auto t = build_tree(column({1, 5, 9}), labels, ForestParams{}, rng);
    REQUIRE(t.nodes.size() == 1);
    CHECK(t.nodes[0].is_leaf());
    CHECK(t.nodes[0].counts == ClassCounts{0, 0, 0, 3});
}

TEST_CASE("max_depth 0 yields a majority leaf") {
    std::mt19937_64 rng(1);
    ForestParams p;
    p.max_depth = 0;
    const std::vector<int> labels{0, 1, 1};
    const auto t = build_tree(column({1, 5, 9}), labels, p, rng);
    REQUIRE(t.nodes.size() == 1);
    const std::vector<double> q{100};
    CHECK(tree_predict(t, q).cls == 1);
}

TEST_CASE("a separable column grows one split") {
    std::mt19937_64 rng(1);
    const std::vector<int> labels{0, 0, 1, 1};
    const auto t = build_tree(column({0, 1, 10, 11}), labels, ForestParams{}, rng);
    REQUIRE(t.nodes.size() == 3);
    CHECK(t.nodes[0].threshold == 5.5);
    const std::vector<double> lo{5.5}, hi{5.6};
    CHECK(tree_predict(t, lo).cls == 0);
    CHECK(tree_predict(t, hi).cls == 1);
}

TEST_CASE("tree_predict breaks leaf ties toward the lower class") {
    const auto t = leaf_tree({0, 2, 2, 0});
    const std::vector<double> q{0};
    CHECK(tree_predict(t, q).cls == 1);
    const std::vector<double> wrong{0, 0};
    CHECK(code_of([&] { tree_predict(t, wrong); }) == Errc::schema_mismatch);
}

TEST_CASE("build_tree rejects labels outside the classes and empty samples") {
    std::mt19937_64 rng(1);
    const std::vector<int> bad{0, 4};
    CHECK(code_of([&] { build_tree(column({1, 2}), bad, ForestParams{}, rng); }) == Errc::unknown_label);
    const std::vector<int> short_labels{0};
    CHECK(code_of([&] { build_tree(column({1, 2}), short_labels, ForestParams{}, rng); }) == Errc::length_mismatch);
}

TEST_CASE("xor layout has no gainful first cut but the tree still separates it") {
    const auto rows = RowMatrix::from_rows({{0, 0}, {0, 1}, {1, 0}, {1, 1}});
    const std::vector<int> labels{0, 1, 1, 0};
    const std::vector<std::size_t> features{0, 1};
    CHECK_FALSE(best_split(rows, labels, features).has_value());
    std::mt19937_64 rng(1);
    const auto t = build_tree(rows, labels, ForestParams{}, rng);
    for (std::size_t i = 0; i < 4; ++i) CHECK(tree_predict(t, rows.row(i)).cls == labels[i]);
    CHECK(depth_of(t) == 2);
}

TEST_CASE("property: unrestricted trees fit consistent training data exactly") {
    cftest::Gen g(41);
    for (int it = 0; it < 100; ++it) {
        const auto [rows, labels] = cftest::random_consistent_dataset(g, static_cast<std::size_t>(g.int_in(2, 60)), 4);
        std::mt19937_64 rng(g.next());
        ForestParams p;
        p.features_per_split = 1;
        const auto t = build_tree(rows, labels, p, rng);
        for (std::size_t i = 0; i < rows.rows(); ++i) CHECK(tree_predict(t, rows.row(i)).cls == labels[i]);
        for (std::size_t i = 0; i < t.nodes.size(); ++i) {
            const auto& n = t.nodes[i];
            if (n.is_leaf()) continue;
            CHECK(static_cast<std::size_t>(n.left) > i);
            CHECK(static_cast<std::size_t>(n.right) > i);
            const auto& l = t.nodes[static_cast<std::size_t>(n.left)].counts;
            const auto& r = t.nodes[static_cast<std::size_t>(n.right)].counts;
            for (int c = 0; c < 4; ++c) CHECK(l[c] + r[c] == n.counts[c]);
        }
    }
}

TEST_CASE("property: max_depth bounds tree depth") {
    cftest::Gen g(43);
    for (int it = 0; it < 60; ++it) {
        const auto [rows, labels] = cftest::random_consistent_dataset(g, 50, 3);
        std::mt19937_64 rng(g.next());
        ForestParams p;
        p.max_depth = static_cast<std::size_t>(g.int_in(0, 4));
        CHECK(depth_of(build_tree(rows, labels, p, rng)) <= *p.max_depth);
    }
}

TEST_CASE("forest takes the majority of tree votes") {
    ForestModel f;
    f.n_features = 1;
    f.trees = {leaf_tree({0, 1, 0, 0}), leaf_tree({0, 1, 0, 0}), leaf_tree({0, 0, 0, 1})};
    const std::vector<double> q{0};
    const auto v = forest_predict(f, q);
    CHECK(v.cls == 1);
    CHECK(v.vote_shares[1] == doctest::Approx(2.0 / 3.0));
    CHECK(v.vote_shares[3] == doctest::Approx(1.0 / 3.0));

    f.trees = {leaf_tree({1, 0, 0, 0}), leaf_tree({0, 0, 1, 0})};
    CHECK(forest_predict(f, q).cls == 0);
}

TEST_CASE("forest training is deterministic per seed and independent of thread count") {
    cftest::Gen g(5);
    const auto [rows, labels] = cftest::random_consistent_dataset(g, 120, 5);
    const auto a = train_forest(rows, labels, small_forest(9), 1);
    const auto b = train_forest(rows, labels, small_forest(9), 1);
    const auto c = train_forest(rows, labels, small_forest(9), 4);
    CHECK(a == b);
    CHECK(a == c);
    CHECK(serialize_model(a) == serialize_model(c));
    const auto d = train_forest(rows, labels, small_forest(10), 1);
    CHECK_FALSE(a == d);
}

TEST_CASE("forest training validates hyperparameters") {
    const std::vector<int> labels{0, 1};
    auto hp = small_forest();
    hp.forest.n_trees = 0;
    CHECK(code_of([&] { train_forest(column({1, 2}), labels, hp); }) == Errc::invalid_argument);
    hp = small_forest();
    hp.forest.min_samples_split = 1;
    CHECK(code_of([&] { train_forest(column({1, 2}), labels, hp); }) == Errc::invalid_argument);
    const std::vector<int> one{0};
    CHECK(code_of([&] { train_forest(column({1}), one, small_forest()); }) == Errc::insufficient_data);
}

TEST_CASE("property: forest vote shares sum to one") {
    cftest::Gen g(12);
    const auto [rows, labels] = cftest::random_consistent_dataset(g, 80, 4);
    const auto f = train_forest(rows, labels, small_forest(2, 11));
    for (int i = 0; i < 200; ++i) {
        std::vector<double> q(4);
        for (auto& x : q) x = g.real_in(-1, 4);
        const auto v = forest_predict(f, q);
        CHECK(v.vote_shares[0] + v.vote_shares[1] + v.vote_shares[2] + v.vote_shares[3] == doctest::Approx(1.0));
        CHECK(v.vote_shares[static_cast<std::size_t>(v.cls)] ==
              *std::max_element(v.vote_shares.begin(), v.vote_shares.end()));
    }
}

TEST_CASE("property: forest predictions survive a positive affine change of units") {
    cftest::Gen g(61);
    for (int it = 0; it < 10; ++it) {
        const auto [rows, labels] = cftest::random_consistent_dataset(g, 60, 3);
        RowMatrix moved(3);
        for (std::size_t i = 0; i < rows.rows(); ++i) {
            std::vector<double> r(rows.row(i).begin(), rows.row(i).end());
            for (auto& x : r) x = 4.0 * x + 3.0;
            moved.push_back(r);
        }
        const auto hp = small_forest(g.next(), 9);
        const auto a = train_forest(rows, labels, hp);
        const auto b = train_forest(moved, labels, hp);
        for (int q = 0; q < 50; ++q) {
            std::vector<double> x(3), y(3);
            for (std::size_t k = 0; k < 3; ++k) {
                x[k] = static_cast<double>(g.int_in(0, 12)) / 4.0;
                y[k] = 4.0 * x[k] + 3.0;
            }
            CHECK(forest_predict(a, x).cls == forest_predict(b, y).cls);
        }
    }
}

TEST_CASE("knn examples") {
    const auto rows = RowMatrix::from_rows({{0, 0}, {0, 1}, {5, 5}, {5, 6}, {6, 5}});
    const std::vector<int> labels{0, 0, 2, 2, 2};
    Hyperparams hp;
    hp.knn.k = 3;
    const auto m = train_knn(rows, labels, hp);
    const std::vector<double> near_origin{0.2, 0.3}, near_five{5.2, 5.1};
    CHECK(knn_predict(m, near_origin) == 0);
    CHECK(knn_predict(m, near_five) == 2);

    hp.knn.k = 1;
    const auto one = train_knn(rows, labels, hp);
    const std::vector<double> exact{5, 6};
    CHECK(knn_predict(one, exact) == 2);
}

TEST_CASE("knn vote ties go to the lower class") {
    const auto rows = RowMatrix::from_rows({{0}, {2}});
    const std::vector<int> labels{3, 1};
    Hyperparams hp;
    hp.knn.k = 2;
    const std::vector<double> q{1};
    CHECK(knn_predict(train_knn(rows, labels, hp), q) == 1);
}

TEST_CASE("knn needs at least k rows") {
    Hyperparams hp;
    hp.knn.k = 5;
    const std::vector<int> labels{0, 1};
    CHECK(code_of([&] { train_knn(column({1, 2}), labels, hp); }) == Errc::insufficient_data);
    hp.knn.k = 0;
    CHECK(code_of([&] { train_knn(column({1, 2}), labels, hp); }) == Errc::invalid_argument);
}

TEST_CASE("property: knn agrees with a full-sort oracle") {
    cftest::Gen g(77);
    for (int it = 0; it < 40; ++it) {
        const std::size_t n = static_cast<std::size_t>(g.int_in(5, 80));
        RowMatrix rows(3);
        std::vector<int> labels;
        for (std::size_t i = 0; i < n; ++i) {
            rows.push_back(std::vector<double>{g.real_in(0, 1), g.real_in(0, 1), g.real_in(0, 1)});
            labels.push_back(g.label());
        }
        Hyperparams hp;
        hp.knn.k = static_cast<std::size_t>(g.int_in(1, 5));
        const auto m = train_knn(rows, labels, hp);
        const auto plain = to_rows(rows);
        for (int q = 0; q < 25; ++q) {
            const std::vector<double> x{g.real_in(0, 1), g.real_in(0, 1), g.real_in(0, 1)};
            CHECK(knn_predict(m, x) == cftest::oracle::knn(plain, labels, x, hp.knn.k));
        }
    }
}

TEST_CASE("svm separates well separated clusters") {
    cftest::Gen g(3);
    RowMatrix rows(2);
    std::vector<int> labels;
    const double cx[4] = {0, 1, 0, 1}, cy[4] = {0, 0, 1, 1};
    for (int i = 0; i < 200; ++i) {
        const int c = i % 4;
        rows.push_back(std::vector<double>{cx[c] + g.real_in(-0.1, 0.1), cy[c] + g.real_in(-0.1, 0.1)});
        labels.push_back(c);
    }
    Hyperparams hp;
    hp.svm.lambda = 1e-3;
    hp.svm.epochs = 100;
    const auto m = train_svm(rows, labels, hp);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < rows.rows(); ++i) correct += svm_predict(m, rows.row(i)) == labels[i];
    for (int c = 0; c < 4; ++c) {
        const std::vector<double> centre{cx[c], cy[c]};
        CHECK(svm_predict(m, centre) == c);
    }
    CHECK(correct >= 180);
}

TEST_CASE("svm on two separable classes in one dimension") {
    RowMatrix rows(1);
    std::vector<int> labels;
    for (int i = 0; i < 20; ++i) {
        rows.push_back(std::vector<double>{i < 10 ? -1.0 - i * 0.1 : 1.0 + (i - 10) * 0.1});
        labels.push_back(i < 10 ? 0 : 2);
    }
    Hyperparams hp;
    hp.svm.lambda = 1e-2;
    const auto m = train_svm(rows, labels, hp);
    for (std::size_t i = 0; i < rows.rows(); ++i) CHECK(svm_predict(m, rows.row(i)) == labels[i]);
    CHECK_FALSE(m.trained[1]);
    CHECK_FALSE(m.trained[3]);
    const auto values = svm_decision_values(m, rows.row(0));
    CHECK(std::isinf(values[1]));
    CHECK(values[0] > values[2]);
}

TEST_CASE("svm training is deterministic per seed") {
    cftest::Gen g(8);
    const auto [rows, labels] = cftest::random_consistent_dataset(g, 60, 3);
    Hyperparams hp;
    hp.seed = 4;
    CHECK(train_svm(rows, labels, hp) == train_svm(rows, labels, hp));
    hp.svm.lambda = 0;
    CHECK(code_of([&] { train_svm(rows, labels, hp); }) == Errc::invalid_argument);
}

TEST_CASE("models survive serialization for every type") {
    cftest::Gen g(90);
    const auto [rows, labels] = cftest::random_consistent_dataset(g, 50, 4);
    auto hp = small_forest(5, 7);
    hp.knn.k = 3;
    for (auto type : {ModelType::forest, ModelType::svm, ModelType::knn}) {
        CAPTURE(to_string(type));
        Model m = train_model(type, rows, labels, hp);
        set_model_schema_hash(m, "00000000deadbeef");
        const auto bytes = serialize_model(m);
        const auto back = deserialize_model(bytes, std::string_view("00000000deadbeef"));
        CHECK(back == m);
        CHECK(serialize_model(back) == bytes);
        CHECK(model_type(back) == type);
        CHECK(model_n_features(back) == 4);
        for (std::size_t i = 0; i < rows.rows(); ++i)
            CHECK(predict(back, rows.row(i)).cls == predict(m, rows.row(i)).cls);
        CHECK(code_of([&] { deserialize_model(bytes, std::string_view("ffffffffffffffff")); }) == Errc::corrupt_model);
    }
}

TEST_CASE("damaged model documents are rejected") {
    cftest::Gen g(91);
    const auto [rows, labels] = cftest::random_consistent_dataset(g, 30, 2);
    const auto bytes = serialize_model(train_model(ModelType::forest, rows, labels, small_forest(1, 3)));
    CHECK(code_of([&] { deserialize_model(bytes.substr(0, bytes.size() / 2)); }) == Errc::corrupt_model);
    CHECK(code_of([] { deserialize_model(""); }) == Errc::corrupt_model);
    CHECK(code_of([] { deserialize_model("[1,2,3]"); }) == Errc::corrupt_model);
    CHECK(code_of([] { deserialize_model(R"({"format":"cfready.model"})"); }) == Errc::corrupt_model);

    auto j = nlohmann::json::parse(bytes);
    j["model_type"] = "perceptron";
    CHECK(code_of([&] { deserialize_model(j.dump()); }) == Errc::corrupt_model);

    // a child index pointing backwards would loop forever at prediction time
    j = nlohmann::json::parse(bytes);
    bool edited = false;
    for (auto& tree : j["trees"]) {
        if (tree.size() > 1) {
            tree[0]["l"] = 0;
            edited = true;
            break;
        }
    }
    REQUIRE(edited);
    CHECK(code_of([&] { deserialize_model(j.dump()); }) == Errc::corrupt_model);
}

TEST_CASE("predict reports vote shares for forests only") {
    cftest::Gen g(92);
    const auto [rows, labels] = cftest::random_consistent_dataset(g, 40, 2);
    auto hp = small_forest(1, 5);
    hp.knn.k = 3;
    CHECK(predict(train_model(ModelType::forest, rows, labels, hp), rows.row(0)).vote_shares.has_value());
    CHECK_FALSE(predict(train_model(ModelType::svm, rows, labels, hp), rows.row(0)).vote_shares.has_value());
    CHECK_FALSE(predict(train_model(ModelType::knn, rows, labels, hp), rows.row(0)).vote_shares.has_value());
}

TEST_CASE("model type names") {
    CHECK(model_type_from_string("forest") == ModelType::forest);
    CHECK(model_type_from_string("svm") == ModelType::svm);
    CHECK(model_type_from_string("knn") == ModelType::knn);
    CHECK(code_of([] { model_type_from_string("mlp"); }) == Errc::invalid_argument);
}

}

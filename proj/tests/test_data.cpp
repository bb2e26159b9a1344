#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_helpers.hpp"
#include "uncattr/data.hpp"
#include "uncattr/errors.hpp"

using namespace uncattr;

TEST_CASE("ingest wine subset") {
    const auto t = testutil::load_wine();
    CHECK(t.n() == 1599);
    CHECK(t.d() == 5);
    CHECK(t.feature_names[0] == "alcohol");
    CHECK(t.labels.minCoeff() >= 0.0);
    CHECK(t.labels.maxCoeff() <= 10.0);
}

TEST_CASE("ingest identity subset and errors") {
    const auto path = testutil::write_temp_csv("ingest_small.csv",
                                               "a,b,c,y\n1,2,3,4\n5,6,7,8\n");
    const auto t = ingest(path, {"a", "b", "c"}, "y");
    CHECK(t.d() == 3);  // all columns except label
    CHECK(t.rows(1, 2) == doctest::Approx(7.0));

    CHECK_THROWS_AS(ingest(path, {"a", "alchol"}, "y"), DataError);
    CHECK_THROWS_WITH_AS(ingest(path, {"a"}, "nope"), doctest::Contains("nope"),
                         DataError);

    const auto bad = testutil::write_temp_csv("ingest_bad.csv",
                                              "a,y\n1,2\nfoo,3\n");
    CHECK_THROWS_WITH_AS(ingest(bad, {"a"}, "y"), doctest::Contains("row 2"), DataError);
}

TEST_CASE("split sizes and determinism") {
    const auto wine = testutil::load_wine();
    const auto [train, test] = split(wine, 0.2, 7);
    CHECK(train.n() == 1280);
    CHECK(test.n() == 319);

    const auto [train2, test2] = split(wine, 0.2, 7);
    CHECK(train.rows == train2.rows);
    CHECK(test.labels == test2.labels);

    RawTable small;
    small.feature_names = {"x"};
    small.rows = Eigen::MatrixXd{{1.0}, {2.0}, {3.0}, {4.0}};
    small.labels = Eigen::VectorXd{{1.0, 2.0, 3.0, 4.0}};
    const auto [a, b] = split(small, 0.5, 3);
    CHECK(a.n() == 2);
    CHECK(b.n() == 2);
    CHECK(a.labels.sum() + b.labels.sum() == doctest::Approx(10.0));  // union preserved

    CHECK_THROWS_AS(split(small, 0.0, 1), ArgumentError);
    CHECK_THROWS_AS(split(small, 1.0, 1), ArgumentError);
}

TEST_CASE("standardization") {
    RawTable t;
    t.feature_names = {"x"};
    t.rows = Eigen::MatrixXd{{1.0}, {3.0}};
    t.labels = Eigen::VectorXd{{0.0, 1.0}};
    const auto [scaler, ds] = fit_standardize(t);
    CHECK(scaler.means(0) == doctest::Approx(2.0));
    CHECK(scaler.sds(0) == doctest::Approx(1.0));  // population sd
    CHECK(ds.features(0, 0) == doctest::Approx(-1.0));
    CHECK(ds.features(1, 0) == doctest::Approx(1.0));
    CHECK(ds.labels == t.labels);  // labels pass through unscaled

    const auto wine = testutil::load_wine();
    const auto [train, test] = split(wine, 0.2, 7);
    const auto [ws, wtrain] = fit_standardize(train);
    for (Eigen::Index j = 0; j < wtrain.d(); ++j) {
        CHECK(std::abs(wtrain.features.col(j).mean()) < 1e-9);
        const double sd = std::sqrt(wtrain.features.col(j).array().square().mean());
        CHECK(std::abs(sd - 1.0) < 1e-9);
    }
    const auto wtest = transform(ws, test);
    for (Eigen::Index j = 0; j < wtest.d(); ++j)
        CHECK(std::abs(wtest.features.col(j).mean()) < 0.5);

    RawTable degen;
    degen.feature_names = {"flat"};
    degen.rows = Eigen::MatrixXd{{5.0}, {5.0}};
    degen.labels = Eigen::VectorXd{{0.0, 1.0}};
    CHECK_THROWS_WITH_AS(fit_standardize(degen), doctest::Contains("flat"), DataError);
}

TEST_CASE("transform then inverse_transform is identity") {
    const auto wine = testutil::load_wine();
    const auto [scaler, ds] = fit_standardize(wine);
    for (Eigen::Index i = 0; i < 20; ++i) {
        const Eigen::VectorXd raw = inverse_transform(scaler, ds.features.row(i * 7));
        CHECK((raw - wine.rows.row(i * 7).transpose()).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("uncertainty spec") {
    const auto wine = testutil::load_wine();
    const auto [scaler, ds] = fit_standardize(wine);

    const auto high = make_uncertainty_spec(NoiseLevel::high,
                                            {"alcohol", "volatile acidity"}, ds);
    Eigen::VectorXd expected{{1.0, 0.0, 0.0, 0.0, 1.0}};
    CHECK(high.sigma == expected);

    const auto med = make_uncertainty_spec(NoiseLevel::medium, {"alcohol"}, ds);
    CHECK(med.sigma(0) == doctest::Approx(0.5));
    CHECK(med.sigma.tail(4).cwiseAbs().maxCoeff() == 0.0);

    const auto none = make_uncertainty_spec(NoiseLevel::none, {}, ds);
    CHECK(none.sigma.isZero());
    CHECK_FALSE(none.any_uncertain());

    CHECK_THROWS_AS(make_uncertainty_spec(NoiseLevel::high, {"bogus"}, ds),
                    ArgumentError);
    CHECK(noise_level_from_string("low") == NoiseLevel::low);
    CHECK_THROWS_AS(noise_level_from_string("extreme"), ArgumentError);
}

TEST_CASE("scaler json round trip") {
    Scaler s;
    s.means = Eigen::VectorXd{{1.5, -2.0}};
    s.sds = Eigen::VectorXd{{0.5, 3.0}};
    s.feature_names = {"a", "b"};
    const auto back = scaler_from_json(scaler_to_json(s));
    CHECK(back.means == s.means);
    CHECK(back.sds == s.sds);
    CHECK(back.feature_names == s.feature_names);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "support.hpp"
#include "vizsig/container.hpp"
#include "vizsig/distance_matrix.hpp"

using namespace vizsig;

TEST_CASE("distance CSV round trip keeps labels, NA and exact doubles") {
    const auto dir = testing::scratch("dm_roundtrip");
    Eigen::MatrixXd v(3, 3);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    v << 0, 0.1 + 0.2, nan, 0.1 + 0.2, 0, 1e-300, nan, 1e-300, 0;
    const auto dm = testing::make_dm({"cs.CL", "odd,label", "q\"uote"}, v);
    write_distance_csv(dm, dir / "d.csv", {"seed=7"});
    const auto text = testing::slurp(dir / "d.csv");
    CHECK(text.rfind("# seed=7\n", 0) == 0);
    CHECK(text.find("NA") != std::string::npos);

    CHECK_THROWS_AS(read_distance_csv(dir / "d.csv"), Error);
    const auto back = read_distance_csv(dir / "d.csv", true);
    CHECK(back.labels == dm.labels);
    CHECK(back.values(0, 1) == 0.1 + 0.2);
    CHECK(back.values(1, 2) == 1e-300);
    CHECK(std::isnan(back.values(0, 2)));
}

TEST_CASE("format_double is shortest round-trip") {
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(1.0) == "1");
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double x = u(gen);
        CHECK(std::stod(format_double(x)) == x);
    }
}

TEST_CASE("validation rejects malformed matrices") {
    Eigen::MatrixXd v(2, 2);
    v << 0, 1, 1, 0;
    CHECK_NOTHROW(testing::make_dm({"a", "b"}, v).validate());
    Eigen::MatrixXd asym = v;
    asym(0, 1) = 2;
    CHECK_THROWS_AS(testing::make_dm({"a", "b"}, asym).validate(), Error);
    Eigen::MatrixXd diag = v;
    diag(0, 0) = 1;
    CHECK_THROWS_AS(testing::make_dm({"a", "b"}, diag).validate(), Error);
    Eigen::MatrixXd neg = -v;
    CHECK_THROWS_AS(testing::make_dm({"a", "b"}, neg).validate(), Error);
    CHECK_THROWS_AS(testing::make_dm({"a", "a"}, v).validate(), Error);
    CHECK_THROWS_AS(testing::make_dm({"a"}, v).validate(), Error);
}

TEST_CASE("malformed CSV input names the line") {
    const auto dir = testing::scratch("dm_bad");
    testing::spit(dir / "short.csv", "a,b\n0,1\n");
    CHECK_THROWS_AS(read_distance_csv(dir / "short.csv"), Error);
    testing::spit(dir / "text.csv", "a,b\n0,x\n1,0\n");
    try {
        read_distance_csv(dir / "text.csv");
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("reordered aligns by label") {
    Eigen::MatrixXd v(3, 3);
    v << 0, 1, 2, 1, 0, 3, 2, 3, 0;
    const auto dm = testing::make_dm({"a", "b", "c"}, v);
    const auto r = dm.reordered({FieldLabel("c"), FieldLabel("a"), FieldLabel("b")});
    CHECK(r.values(0, 1) == 2);
    CHECK(r.values(0, 2) == 3);
    CHECK(r.values(1, 2) == 1);
    CHECK_THROWS_AS(dm.reordered({FieldLabel("a"), FieldLabel("b"), FieldLabel("z")}), Error);
}

TEST_CASE("labeled container round trip") {
    const auto dir = testing::scratch("container");
    LabeledContainer c;
    Eigen::MatrixXd m(2, 3);
    m << 1, 2, 3, 4, 5, 6.5;
    c.put("weights", m);
    c.put_strings("classes", {"a", "b\xc3\xa9"});
    c.save(dir / "c.vsic");
    const auto back = LabeledContainer::load(dir / "c.vsic");
    CHECK(back.matrix("weights") == m);
    CHECK(back.strings("classes") == std::vector<std::string>{"a", "b\xc3\xa9"});
    CHECK_FALSE(back.has("other"));
    CHECK_THROWS_AS(back.matrix("other"), Error);

    auto bytes = testing::slurp(dir / "c.vsic");
    testing::spit(dir / "t.vsic", bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(LabeledContainer::load(dir / "t.vsic"), Error);
    bytes[0] = 'X';
    testing::spit(dir / "m.vsic", bytes);
    CHECK_THROWS_AS(LabeledContainer::load(dir / "m.vsic"), Error);
}

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "dnrr/errors.hpp"
#include "dnrr/io.hpp"
#include "support.hpp"

using namespace dnrr;

TEST_CASE("decimal form round-trips every double") {
    Rng rng(17);
    for (int rep = 0; rep < 10000; ++rep) {
        const double v = draw_normal(rng) * std::pow(10.0, 40.0 * draw_uniform(rng) - 20.0);
        CHECK(std::stod(io::format_double(v)) == v);
    }
    CHECK(std::strtod(io::format_double(std::numeric_limits<double>::denorm_min()).c_str(), nullptr) ==
          std::numeric_limits<double>::denorm_min());
    CHECK(io::format_double(0.5) == "0.5");
}

TEST_CASE("trajectory file round trip is bit exact") {
    const auto dir = testing::scratch_dir("io-roundtrip");
    Rng rng(3);
    Trajectory t;
    t.initial = {0.5, -1.0 / 3.0};
    for (int i = 0; i < 1000; ++i) t.values.push_back(draw_normal(rng) / 7.0);
    t.meta["seed"] = "42";
    t.meta["map"] = "lag=2 degree=2";
    io::write_trajectory(dir / "t.csv", t);
    const auto back = io::read_trajectory(dir / "t.csv");
    CHECK(back.values == t.values);
    CHECK(back.initial == t.initial);
    CHECK(back.meta == t.meta);
}

TEST_CASE("empty trajectory file") {
    const auto dir = testing::scratch_dir("io-empty");
    io::write_trajectory(dir / "t.csv", Trajectory{{}, {0.0}, {}});
    const auto back = io::read_trajectory(dir / "t.csv");
    CHECK(back.values.empty());
    CHECK(back.initial == std::vector<double>{0.0});
}

TEST_CASE("malformed trajectory names the line") {
    const auto dir = testing::scratch_dir("io-bad");
    io::write_text(dir / "bad.csv", "# initial: 0.5;0.5\n1.0\n2.0\nnot-a-number\n");
    try {
        io::read_trajectory(dir / "bad.csv");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 4);
        CHECK(std::string(e.what()).find(":4:") != std::string::npos);
    }
    io::write_text(dir / "noinit.csv", "1.0\n");
    CHECK_THROWS_AS(io::read_trajectory(dir / "noinit.csv"), ParseError);
    io::write_text(dir / "inf.csv", "# initial: 0\ninf\n");
    CHECK_THROWS_AS(io::read_trajectory(dir / "inf.csv"), ParseError);
    CHECK_THROWS_AS(io::read_trajectory(dir / "missing.csv"), IoError);
}

TEST_CASE("matrix CSV round trip") {
    const auto dir = testing::scratch_dir("io-matrix");
    Eigen::MatrixXd m(3, 2);
    m << 1.0 / 3.0, -2.0, 1e-300, 4.5, 0.0, -0.1;
    io::write_matrix_csv(dir / "m.csv", {"a", "b"}, m);
    std::vector<std::string> cols;
    const auto back = io::read_matrix_csv(dir / "m.csv", &cols);
    CHECK(cols == std::vector<std::string>{"a", "b"});
    CHECK(back == m);
    io::write_text(dir / "short.csv", "a,b\n1,2\n3\n");
    try {
        io::read_matrix_csv(dir / "short.csv");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
}

TEST_CASE("CSV field quoting") {
    CHECK(io::csv_field("plain") == "plain");
    CHECK(io::csv_field("a,b") == "\"a,b\"");
    CHECK(io::csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
}

TEST_CASE("git blob hashes") {
    CHECK(io::git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
    CHECK(io::git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

#include "doctest.h"

#include <cmath>
#include <numbers>

#include "cascadelab/error.hpp"
#include "cascadelab/ifs.hpp"

using namespace cascadelab;

namespace {

Similarity line(double r, double t) {
    Similarity f;
    f.ratio = r;
    f.rotation = Mat::Identity(1, 1);
    f.translation = Vec::Constant(1, t);
    return f;
}

IfsSpec cantor() { return IfsSpec({line(1.0 / 3, 0.0), line(1.0 / 3, 2.0 / 3)}); }

IfsSpec planar_rotating() {
    return IfsSpec({Similarity::planar(0.4, 1.0, 0.3, -0.2), Similarity::planar(0.5, 2.5, -0.4, 0.1),
                    Similarity::planar(0.3, 0.0, 0.0, 0.5)});
}

}  // namespace

TEST_CASE("words parse and print one-based") {
    const Word w = Word::parse("1.2.2");
    CHECK(w.size() == 3);
    CHECK(w[0] == 0);
    CHECK(w[2] == 1);
    CHECK(w.to_string() == "1.2.2");
    CHECK(Word::parse("-").empty());
    CHECK(Word{}.to_string() == "-");
    CHECK_THROWS_AS(Word::parse("0"), Error);
    CHECK_THROWS_AS(Word::parse("1..2"), Error);
    CHECK_THROWS_AS(Word::parse("1.x"), Error);
    CHECK(Word::parse("1.2").concat(Word::parse("3")) == Word::parse("1.2.3"));
    CHECK(Word::parse("1.2.3").starts_with(Word::parse("1.2")));
    CHECK(Word::parse("1.2.3").prefix(1) == Word::parse("1"));
}

TEST_CASE("invalid words are rejected against the alphabet") {
    const auto ifs = cantor();
    CHECK_NOTHROW(ifs.check_word(Word::parse("2.1")));
    try {
        ifs.check_word(Word::parse("1.3"));
        FAIL("expected InvalidWord");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidWord);
    }
}

TEST_CASE("compose of the empty word is the identity") {
    const auto ifs = planar_rotating();
    const auto f = compose(ifs, Word{});
    CHECK(f.ratio == 1.0);
    CHECK((f.rotation - Mat::Identity(2, 2)).norm() == 0.0);
    CHECK(f.translation.norm() == 0.0);
}

TEST_CASE("compose on the Cantor IFS") {
    const auto f = compose(cantor(), Word::parse("1.2"));
    CHECK(f.ratio == doctest::Approx(1.0 / 9).epsilon(1e-15));
    CHECK(f.translation[0] == doctest::Approx(2.0 / 9).epsilon(1e-15));
}

TEST_CASE("planar compose adds angles and multiplies ratios") {
    const auto ifs = planar_rotating();
    const auto f = compose(ifs, Word::parse("1.2"));
    CHECK(f.ratio == doctest::Approx(0.2).epsilon(1e-15));
    const Mat expected = rotation2d(std::fmod(1.0 + 2.5, 2 * std::numbers::pi));
    CHECK((f.rotation - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("compose is a homomorphism on words") {
    const auto ifs = planar_rotating();
    const Word u = Word::parse("1.3.2"), v = Word::parse("2.2.1.3");
    const auto uv = compose(ifs, u.concat(v));
    const auto sequential = compose(ifs, u).then_inner(compose(ifs, v));
    CHECK(uv.ratio == sequential.ratio);
    CHECK((uv.rotation - sequential.rotation).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((uv.translation - sequential.translation).cwiseAbs().maxCoeff() < 1e-10);
    const Vec x = Vec::Constant(2, 0.37);
    CHECK((uv.apply(x) - compose(ifs, u).apply(compose(ifs, v).apply(x))).norm() < 1e-12);
}

TEST_CASE("cylinder points on the Cantor IFS") {
    const auto ifs = cantor();
    const Vec zero = Vec::Zero(1);
    CHECK(cylinder_point(ifs, Word(std::vector<Symbol>(12, 0)), zero)[0] == 0.0);
    CHECK(cylinder_point(ifs, Word::parse("2"), zero)[0] == doctest::Approx(2.0 / 3));
    CHECK(cylinder_point(ifs, Word::parse("2.1"), zero)[0] == doctest::Approx(2.0 / 3));
}

TEST_CASE("attractor cloud enumerates words lexicographically") {
    const auto ifs = cantor();
    const Vec zero = Vec::Zero(1);
    const auto one = attractor_cloud(ifs, 1, zero);
    REQUIRE(one.size() == 2);
    CHECK(one[0].word == Word::parse("1"));
    CHECK(one[1].point[0] == doctest::Approx(2.0 / 3));

    const auto two = attractor_cloud(ifs, 2, zero);
    REQUIRE(two.size() == 4);
    const double expected[] = {0.0, 2.0 / 9, 2.0 / 3, 8.0 / 9};
    for (int i = 0; i < 4; ++i) CHECK(two[static_cast<std::size_t>(i)].point[0] == doctest::Approx(expected[i]));

    const auto none = attractor_cloud(ifs, 0, zero);
    REQUIRE(none.size() == 1);
    CHECK(none[0].word.empty());
    CHECK(none[0].point[0] == 0.0);

    CHECK_THROWS_AS(attractor_cloud(ifs, 30, zero, 1000), Error);
}

TEST_CASE("ratio bounds") {
    CHECK(ratio_bounds(cantor()).c == doctest::Approx(1.0 / 3));
    CHECK(ratio_bounds(cantor()).rho == doctest::Approx(1.0 / 3));
    const IfsSpec two({line(0.5, 0.0), line(0.25, 0.75)});
    CHECK(ratio_bounds(two).c == 0.25);
    CHECK(ratio_bounds(two).rho == 0.5);
    std::vector<Similarity> grid;
    for (double a : {0.0, 0.5})
        for (double b : {0.0, 0.5}) grid.push_back(Similarity::planar(0.5, 0.0, a, b));
    const IfsSpec g(grid);
    CHECK(ratio_bounds(g).c == 0.5);
    CHECK(ratio_bounds(g).rho == 0.5);
}

TEST_CASE("default x0 is the fixed point of the first map") {
    const auto ifs = planar_rotating();
    const auto& f = ifs.map(0);
    CHECK((f.apply(ifs.x0()) - ifs.x0()).norm() < 1e-14);
    CHECK(ifs.x0().norm() <= ifs.radius_bound());
}

TEST_CASE("cylinder diameters and refinement respect R") {
    const auto ifs = planar_rotating();
    const double R = ifs.radius_bound();
    const auto coarse = attractor_cloud(ifs, 4, ifs.x0());
    const auto fine = attractor_cloud(ifs, 5, ifs.x0());
    for (std::size_t i = 0; i < fine.size(); ++i) {
        const auto& parent = coarse[i / 3];
        REQUIRE(fine[i].word.prefix(4) == parent.word);
        const double rw = ifs.word_ratio(parent.word);
        CHECK(rw <= std::pow(ifs.rho(), 4) * (1 + 1e-12));
        // Both points lie in f_w(B(0, R)), whose diameter is 2 R r_w.
        CHECK((fine[i].point - parent.point).norm() <= 2 * R * rw * (1 + 1e-12));
    }
    // Images of the ball boundary stay within the diameter bound.
    for (const auto& e : coarse) {
        const auto f = compose(ifs, e.word);
        for (int k = 0; k < 16; ++k) {
            const double t = 2 * std::numbers::pi * k / 16;
            Vec a(2), b(2);
            a << R * std::cos(t), R * std::sin(t);
            b = -a;
            CHECK((f.apply(a) - f.apply(b)).norm() <= 2 * R * f.ratio * (1 + 1e-12));
        }
    }
}

TEST_CASE("IFS validation reports the offending map") {
    auto bad_rotation = Similarity::planar(0.5, 0.0, 0.0, 0.0);
    bad_rotation.rotation(0, 0) = 1.1;
    bad_rotation.angle.reset();
    try {
        IfsSpec({Similarity::planar(0.5, 0.0, 0.0, 0.0), bad_rotation});
        FAIL("expected InvalidIfs");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidIfs);
        CHECK(std::string(e.what()).find("1") != std::string::npos);
    }
    CHECK_THROWS_AS(IfsSpec({line(1.0, 0.0), line(0.5, 0.5)}), Error);
    CHECK_THROWS_AS(IfsSpec({line(0.5, 0.0)}), Error);
    CHECK_THROWS_AS(IfsSpec({line(0.5, 0.0), Similarity::planar(0.5, 0.0, 0.0, 0.0)}), Error);
    // A reflection has determinant -1.
    Similarity mirror = Similarity::planar(0.5, 0.0, 0.0, 0.0);
    mirror.rotation(1, 1) = -1.0;
    mirror.angle.reset();
    CHECK_THROWS_AS(IfsSpec({Similarity::planar(0.5, 0.0, 0.0, 0.0), mirror}), Error);
}

TEST_CASE("checked_power detects overflow") {
    CHECK(checked_power(3, 4).value() == 81);
    CHECK(checked_power(2, 0).value() == 1);
    CHECK_FALSE(checked_power(2, 64).has_value());
    CHECK_FALSE(checked_power(10, 30).has_value());
}

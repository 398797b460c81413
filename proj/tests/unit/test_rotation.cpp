#include "doctest.h"

#include <cmath>
#include <map>
#include <numbers>

#include "cascadelab/error.hpp"
#include "cascadelab/rotation.hpp"

using namespace cascadelab;

namespace {

Mat rot3_z(double a) {
    Mat m = Mat::Identity(3, 3);
    m.topLeftCorner(2, 2) = rotation2d(a);
    return m;
}

Mat rot3_x(double a) {
    Mat m = Mat::Identity(3, 3);
    m.bottomRightCorner(2, 2) = rotation2d(a);
    return m;
}

std::size_t element_index(const RotationGroupInfo& info, const Mat& g) {
    for (std::size_t i = 0; i < info.elements.size(); ++i)
        if ((info.elements[i] - g).cwiseAbs().maxCoeff() < 1e-9) return i;
    return info.elements.size();
}

}  // namespace

TEST_CASE("quarter turn generates the cyclic group of order 4") {
    const auto info = classify_group({rotation2d(std::numbers::pi / 2)});
    CHECK(info.kind == GroupKind::Finite);
    REQUIRE(info.elements.size() == 4);
    CHECK((info.elements[0] - Mat::Identity(2, 2)).norm() < 1e-12);
    for (const auto& a : info.elements)
        for (const auto& b : info.elements) CHECK(element_index(info, a * b) < 4);
}

TEST_CASE("identity generates the trivial group") {
    const auto info = classify_group({Mat::Identity(2, 2), Mat::Identity(2, 2)});
    CHECK(info.kind == GroupKind::Finite);
    CHECK(info.elements.size() == 1);
}

TEST_CASE("one radian generates a dense subgroup") {
    const auto info = classify_group({rotation2d(1.0), Mat::Identity(2, 2)});
    CHECK(info.kind == GroupKind::Dense);
    CHECK(to_string(info.kind) == "dense");
}

TEST_CASE("rational multiples of pi combine by lcm") {
    const auto info = classify_group({rotation2d(2 * std::numbers::pi / 3), rotation2d(std::numbers::pi / 2)});
    CHECK(info.kind == GroupKind::Finite);
    CHECK(info.elements.size() == 12);
}

TEST_CASE("finite groups in three dimensions") {
    // Rotations by pi/2 about two orthogonal axes generate the cube group.
    const auto info = classify_group({rot3_z(std::numbers::pi / 2), rot3_x(std::numbers::pi / 2)});
    CHECK(info.kind == GroupKind::Finite);
    CHECK(info.elements.size() == 24);
}

TEST_CASE("irrational rotations in three dimensions are dense") {
    const auto info = classify_group({rot3_z(1.0), rot3_x(1.0)});
    CHECK(info.kind == GroupKind::Dense);
}

TEST_CASE("infinite groups fixing an axis are not called dense") {
    const auto info = classify_group({rot3_z(1.0), rot3_z(2.0)});
    CHECK(info.kind == GroupKind::Undetermined);
}

TEST_CASE("classify_group rejects non-rotations") {
    Mat bad = rotation2d(0.3);
    bad(0, 1) += 0.01;
    try {
        classify_group({bad});
        FAIL("expected NotARotation");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotARotation);
    }
}

TEST_CASE("continued fractions recover small rationals") {
    const auto f = rational_approximation(3.0 / 7.0, 1000000, 1e-13);
    CHECK(f.p == 3);
    CHECK(f.q == 7);
    CHECK(rational_approximation(1.0 / std::numbers::pi, 1000000, 1e-13).q == 0);
}

TEST_CASE("planar Haar samples are centred") {
    const std::size_t n = 20000;
    const auto samples = haar_sample(2, n, 17);
    double c = 0;
    for (const auto& g : samples) c += g(0, 0);
    CHECK(std::abs(c / n) < 3 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("Haar samples in three dimensions move a vector uniformly") {
    const std::size_t n = 20000;
    const auto samples = haar_sample(3, n, 23);
    Vec v(3);
    v << 0.6, 0.0, 0.8;
    Vec mean = Vec::Zero(3);
    for (const auto& g : samples) {
        CHECK(orthonormality_defect(g) < 1e-12);
        CHECK(determinant_defect(g) < 1e-9);
        mean += g * v;
    }
    mean /= static_cast<double>(n);
    // Each coordinate of a uniform unit vector has variance 1/3.
    CHECK(mean.cwiseAbs().maxCoeff() < 4 * std::sqrt(1.0 / 3 / n));
}

TEST_CASE("Haar samples are reproducible") {
    const auto a = haar_sample(3, 10, 5);
    const auto b = haar_sample(3, 10, 5);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    CHECK(haar_rotation(3, 5, 4) == a[4]);
    CHECK_FALSE(haar_sample(3, 1, 6)[0] == a[0]);
}

TEST_CASE("uniform draws on a finite group") {
    const auto info = classify_group({rotation2d(std::numbers::pi / 2)});
    const auto draws = haar_on_finite(info, 4000, 31);
    std::vector<int> counts(4, 0), shifted(4, 0);
    const Mat g = info.elements[1];
    for (const auto& d : draws) {
        ++counts[element_index(info, d)];
        ++shifted[element_index(info, g * d)];
    }
    for (int i = 0; i < 4; ++i) {
        CHECK(std::abs(counts[static_cast<std::size_t>(i)] - 1000) < 3 * std::sqrt(1000.0));
        CHECK(std::abs(shifted[static_cast<std::size_t>(i)] - 1000) < 3 * std::sqrt(1000.0));
    }

    const auto trivial = classify_group({Mat::Identity(2, 2)});
    for (const auto& d : haar_on_finite(trivial, 50, 3)) CHECK(d == Mat::Identity(2, 2));
}

TEST_CASE("undetermined groups need an explicit density assumption") {
    RotationGroupInfo info;
    info.dim = 2;
    info.kind = GroupKind::Undetermined;
    CHECK_THROWS_AS(sample_group_rotation(info, 1, 0), Error);
    CHECK(orthonormality_defect(sample_group_rotation(info, 1, 0, true)) < 1e-12);
}

namespace {

Similarity line(double r, double t) {
    Similarity f;
    f.ratio = r;
    f.rotation = Mat::Identity(1, 1);
    f.translation = Vec::Constant(1, t);
    return f;
}

bool is_prefix_free_and_complete(const IfsSpec& ifs, const StoppingAlphabet& a, double s) {
    for (std::size_t i = 0; i < a.words.size(); ++i)
        for (std::size_t j = 0; j < a.words.size(); ++j)
            if (i != j && a.words[j].starts_with(a.words[i])) return false;
    // Completeness: the self-similar weights r_i^s sum to one over the alphabet.
    double total = 0;
    for (const auto& w : a.words) total += std::pow(ifs.word_ratio(w), s);
    return std::abs(total - 1.0) < 1e-12;
}

}  // namespace

TEST_CASE("stopping alphabet for equal ratios is a full level") {
    const IfsSpec cantor({line(1.0 / 3, 0.0), line(1.0 / 3, 2.0 / 3)});
    const auto a = stopping_alphabet(cantor, 2);
    REQUIRE(a.words.size() == 4);
    for (const auto& w : a.words) CHECK(w.size() == 2);
    CHECK(stopping_alphabet(cantor, 1).words.size() == 2);
}

TEST_CASE("stopping alphabet for ratios one half and one quarter") {
    const IfsSpec ifs({line(0.5, 0.0), line(0.25, 0.75)});
    const auto a = stopping_alphabet(ifs, 2);
    REQUIRE(a.words.size() == 3);
    CHECK(a.words[0] == Word::parse("1.1"));
    CHECK(a.words[1] == Word::parse("1.2"));
    CHECK(a.words[2] == Word::parse("2"));
    const double s = std::log2((1 + std::sqrt(5.0)) / 2);
    CHECK(is_prefix_free_and_complete(ifs, a, s));
    const auto deep = stopping_alphabet(ifs, 9);
    CHECK(is_prefix_free_and_complete(ifs, deep, s));
    const double rho9 = std::pow(0.5, 9);
    for (const auto& w : deep.words) {
        CHECK(ifs.word_ratio(w) <= rho9);
        CHECK(ifs.word_ratio(w) > 0.25 * rho9);
    }
}

#include "doctest.h"

#include <cmath>

#include "cascadelab/cascade.hpp"
#include "cascadelab/error.hpp"
#include "cascadelab/information.hpp"
#include "cascadelab/projection.hpp"

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
IfsSpec overlap() { return IfsSpec({line(0.5, 0.5), line(0.5, 0.5)}); }

IfsSpec grid4() {
    std::vector<Similarity> maps;
    for (double b : {0.0, 0.5})
        for (double a : {0.0, 0.5}) maps.push_back(Similarity::planar(0.5, 0.0, a, b));
    return IfsSpec(maps);
}

std::shared_ptr<const WeightModel> bernoulli(const IfsSpec& ifs) {
    return std::make_shared<const WeightModel>(bernoulli_weights(ifs));
}

}  // namespace

TEST_CASE("conditional information on separated cylinders is zero") {
    const auto ifs = cantor();
    const auto nu = cascade_measure(CascadeRealization(bernoulli(ifs), 1), ifs, 8);
    for (std::size_t i = 0; i < nu.size(); i += 11) {
        const auto info = conditional_information(nu, i, 0.2);
        CHECK(info.value == 0.0);
        CHECK_FALSE(info.saturated);
    }
}

TEST_CASE("exact overlap splits every ball in half") {
    const auto ifs = overlap();
    const auto nu = cascade_measure(CascadeRealization(bernoulli(ifs), 1), ifs, 6);
    for (double r : {1e-3, 0.1, 2.0})
        for (std::size_t i = 0; i < nu.size(); i += 7)
            CHECK(conditional_information(nu, i, r).value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("depth zero gives minus log of the first cylinder mass") {
    const auto ifs = cantor();
    const auto model = std::make_shared<const WeightModel>(WeightModel(DeterministicWeights{{0.3, 0.7}}));
    const auto nu = cascade_measure(CascadeRealization(model, 1), ifs, 5);
    // Radius R covers everything.
    CHECK(conditional_information(nu, 0, 2 * ifs.radius_bound()).value == doctest::Approx(-std::log(0.3)));
    CHECK(conditional_information(nu, nu.size() - 1, 2 * ifs.radius_bound()).value ==
          doctest::Approx(-std::log(0.7)));
}

TEST_CASE("missing label mass saturates at the cap") {
    DiscreteMeasure nu(1);
    const double x = 0.0;
    const Symbol a[] = {0}, b[] = {1};
    nu.add(std::span<const double>(&x, 1), 1.0, a);
    const auto index = nu.index_or_build();
    const auto info = conditional_information(*index, std::span<const double>(&x, 1), 0.1, b[0]);
    CHECK(info.saturated);
    CHECK(info.value == kInformationCap);
    const double far = 5.0;
    CHECK_THROWS_AS(conditional_information(*index, std::span<const double>(&far, 1), 0.1, 0), Error);
}

TEST_CASE("conditional entropy examples") {
    const auto c = conditional_entropy(bernoulli(cantor()), cantor(), ImageFamily::identity(), 10, 256, 3);
    CHECK(c.value <= 0.02);
    CHECK(c.reliable);

    const auto o = conditional_entropy(bernoulli(overlap()), overlap(), ImageFamily::identity(), 6, 256, 3);
    CHECK(o.value == doctest::Approx(std::log(2.0)).epsilon(0.01 / 0.693));
    const auto o2 = conditional_entropy(bernoulli(overlap()), overlap(), ImageFamily::identity(), 10, 64, 4);
    CHECK(o2.value == doctest::Approx(std::log(2.0)).epsilon(0.01 / 0.693));
}

TEST_CASE("projected conditional entropy of the Cantor product") {
    // The coordinate projection of the product makes pairs of first-level
    // cylinders coincide, so one bit of the first symbol is lost.
    std::vector<Similarity> maps;
    for (double a : {0.0, 2.0 / 3})
        for (double b : {0.0, 2.0 / 3}) maps.push_back(Similarity::planar(1.0 / 3, 0.0, a, b));
    const IfsSpec ifs(maps);
    const auto family =
        ImageFamily::projected(ProjectionFrame::coordinate(2, {0}).rows(), classify_group(ifs.rotations()));
    const auto est = conditional_entropy(bernoulli(ifs), ifs, family, 4, 128, 2);
    CHECK(est.value == doctest::Approx(std::log(2.0)).epsilon(0.02));
}

TEST_CASE("percolation conditional entropy under separation") {
    const auto law = SubsetLaw::uniform_keep(4, 0.7);
    const auto g = grid4();
    const auto model = std::make_shared<const WeightModel>(percolation_weights(law, g.ratios(), 2 + std::log2(0.7)));
    // Grid cylinders touch, so use a small radius multiple via a deep level.
    const auto est = conditional_entropy(model, g, ImageFamily::identity(), 6, 64, 5);
    CHECK(est.value >= 0.0);
    CHECK(est.samples == 64);
}

TEST_CASE("Peyriere expectations") {
    const auto det = std::make_shared<const WeightModel>(WeightModel(DeterministicWeights{{0.3, 0.7}}));
    const auto ratios = cantor().ratios();
    const auto one = peyriere_expectation(det, ratios, [](const PeyrierePath&) { return 1.0; }, 5, 100, 1);
    CHECK(one.value == doctest::Approx(1.0));
    CHECK(one.standard_error == doctest::Approx(0.0));

    const auto terms = expectation_terms(*det, ratios);
    const auto logw = peyriere_expectation(
        det, ratios, [](const PeyrierePath& p) { return p.log_q[1]; }, 1, 20000, 2);
    CHECK(std::abs(logw.value - terms.weight_entropy) <= 3 * logw.standard_error + 1e-12);

    const auto perc = std::make_shared<const WeightModel>(
        percolation_weights(SubsetLaw::uniform_keep(4, 0.7), grid4().ratios(), 2 + std::log2(0.7)));
    const auto pt = expectation_terms(*perc, grid4().ratios());
    const auto logr = peyriere_expectation(
        perc, grid4().ratios(), [](const PeyrierePath& p) { return p.log_r[1]; }, 1, 20000, 3);
    CHECK(std::abs(logr.value - pt.log_ratio) <= 3 * logr.standard_error + 1e-12);
    const auto logq = peyriere_expectation(
        perc, grid4().ratios(), [](const PeyrierePath& p) { return p.log_q[1]; }, 1, 20000, 4);
    CHECK(std::abs(logq.value - pt.weight_entropy) <= 3 * logq.standard_error + 1e-12);
}

TEST_CASE("strong-law diagnostics on a two-scale model") {
    const double ratios[] = {0.5, 0.25};
    const auto model = std::make_shared<const WeightModel>(WeightModel(
        GeneralDiscreteWeights{{{0.5, {0.8, 0.2}}, {0.5, {0.4, 0.6}}}}));
    const auto rep = lln_diagnostics(model, ratios, 5, 15, 4000, 6);
    CHECK(rep.q_match);
    CHECK(rep.r_match);
    CHECK_THROWS_AS(lln_diagnostics(model, ratios, 5, 6, 10, 6), Error);
}

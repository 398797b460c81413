#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "cascadelab/cascade.hpp"
#include "cascadelab/measure.hpp"
#include "cascadelab/rotation.hpp"

namespace cascadelab {

// log(1e6): stands in for an infinite conditional information.
inline constexpr double kInformationCap = 13.815510557964274;

struct InformationValue {
    double value = 0.0;
    bool saturated = false;
};

// -log[ nu(B(y, r) with first symbol `first`) / nu(B(y, r)) ] on a labelled
// image measure. EmptyBall when the ball holds no mass.
InformationValue conditional_information(const BallIndex& image, std::span<const double> y, double radius,
                                         Symbol first);
// Same, centred on atom `atom` of the image and using its label.
InformationValue conditional_information(const DiscreteMeasure& image, std::size_t atom, double radius);

// The map phi applied before measuring balls: the identity embedding, or
// pi o g with g drawn from the rotation group per replica.
struct ImageFamily {
    std::optional<Mat> frame;  // k x d rows
    std::optional<RotationGroupInfo> group;
    bool assume_dense = false;

    static ImageFamily identity() { return {}; }
    static ImageFamily projected(Mat frame, RotationGroupInfo group, bool assume_dense = false) {
        return {std::move(frame), std::move(group), assume_dense};
    }
    // Linear map for one replica (identity when no frame is set).
    [[nodiscard]] Mat sample(int dim, std::uint64_t seed, std::uint64_t index) const;
};

struct MonteCarloEstimate {
    double value = 0.0;
    double standard_error = 0.0;
    std::size_t samples = 0;
    std::size_t saturated = 0;
    // False when more than 1% of the samples hit the information cap.
    bool reliable = true;
    std::size_t rejections = 0;
};

struct ConditionalEntropyOptions {
    // Atoms are built at level n + extra_levels.
    int extra_levels = 2;
    TailPolicy tail;
    std::size_t max_attempts = 1000;
};

// Peyriere-weighted estimate of E H(P | B_phi) at depth n: per replica a
// surviving realization, a path drawn from the normalized measure, and the
// conditional information at radius R r_{i|n}, weighted by the replica's
// total mass (self-normalized).
MonteCarloEstimate conditional_entropy(std::shared_ptr<const WeightModel> model, const IfsSpec& ifs,
                                       const ImageFamily& family, int n, std::size_t replicas, std::uint64_t seed,
                                       const ConditionalEntropyOptions& options = {});

struct PeyrierePath {
    std::vector<Symbol> symbols;     // i|n
    std::vector<double> log_q;       // log Q_{i|k}, k = 0..n
    std::vector<double> log_r;       // log r_{i|k}, k = 0..n
    std::vector<double> root_weights;
};

using PathFunctional = std::function<double(const PeyrierePath&)>;

// E over the Peyriere measure of a path functional of depth n. Each sample
// descends the cascade choosing child j with probability W_j / sum W and
// carries the product of the sums as its weight, which reproduces the
// weighting by Q along the path.
MonteCarloEstimate peyriere_expectation(std::shared_ptr<const WeightModel> model, std::span<const double> ratios,
                                        const PathFunctional& functional, int n, std::size_t samples,
                                        std::uint64_t seed);

struct LlnReport {
    ExpectationTerms expected{};
    double q_slope = 0.0, q_stderr = 0.0;
    double r_slope = 0.0, r_stderr = 0.0;
    bool q_match = false;
    bool r_match = false;
    std::size_t paths = 0;
};

// Per-path least-squares slopes of log Q_{i|n} and log r_{i|n} over
// n in [n_lo, n_hi], averaged under the Peyriere measure and compared with
// expectation_terms within max(3 stderr, 1e-9).
LlnReport lln_diagnostics(std::shared_ptr<const WeightModel> model, std::span<const double> ratios, int n_lo,
                          int n_hi, std::size_t paths, std::uint64_t seed);

}  // namespace cascadelab

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cascadelab/ifs.hpp"
#include "cascadelab/measure.hpp"
#include "cascadelab/rng.hpp"

namespace cascadelab {

// Law of the random subset S of retained children in fractal percolation.
// Either independent per-symbol retention or an explicit outcome list.
struct SubsetOutcome {
    std::vector<Symbol> members;  // ascending, zero-based
    double probability = 0.0;
};

class SubsetLaw {
public:
    static constexpr std::size_t kMaxOutcomes = std::size_t{1} << 16;

    static SubsetLaw independent(std::vector<double> keep);
    static SubsetLaw uniform_keep(std::size_t m, double keep) { return independent(std::vector<double>(m, keep)); }
    static SubsetLaw explicit_list(std::size_t m, std::vector<SubsetOutcome> outcomes);

    [[nodiscard]] std::size_t size() const noexcept { return m_; }
    [[nodiscard]] bool is_independent() const noexcept { return !keep_.empty(); }
    [[nodiscard]] const std::vector<double>& keep() const noexcept { return keep_; }
    [[nodiscard]] const std::vector<SubsetOutcome>& outcomes() const noexcept { return outcomes_; }

    // P(i in S) per symbol, and E card S.
    [[nodiscard]] std::vector<double> inclusion() const;
    [[nodiscard]] double expected_size() const;
    // P(card S >= 2).
    [[nodiscard]] double prob_at_least_two() const;
    // Full outcome table; independent laws are expanded (2^m outcomes, capped).
    [[nodiscard]] std::vector<SubsetOutcome> expand() const;

    // Membership mask for one node; a pure function of (seed, node).
    void draw(std::uint64_t seed, const WordHash& node, std::span<std::uint8_t> mask) const;

private:
    std::size_t m_ = 0;
    std::vector<double> keep_;
    std::vector<SubsetOutcome> outcomes_;
    std::vector<double> cumulative_;
};

struct DeterministicWeights {
    std::vector<double> p;
};

struct PercolationWeights {
    SubsetLaw law;
    std::vector<double> ratios;
    double alpha = 0.0;
};

struct DiscreteOutcome {
    double probability = 0.0;
    std::vector<double> weights;
};

struct GeneralDiscreteWeights {
    std::vector<DiscreteOutcome> outcomes;
};

class WeightModel {
public:
    using Variant = std::variant<DeterministicWeights, PercolationWeights, GeneralDiscreteWeights>;

    // Structural checks only (sizes, non-negativity, probabilities summing
    // to 1); the cascade assumptions are checked by validate_weight_model.
    explicit WeightModel(Variant v);

    [[nodiscard]] const Variant& variant() const noexcept { return v_; }
    [[nodiscard]] std::size_t size() const noexcept { return m_; }
    [[nodiscard]] std::string kind() const;
    [[nodiscard]] bool is_deterministic() const noexcept { return std::holds_alternative<DeterministicWeights>(v_); }

    // Exact moments of the discrete law.
    [[nodiscard]] std::vector<double> mean() const;
    [[nodiscard]] std::vector<double> moment(double p) const;
    // E(W_i log W_i), with 0 log 0 = 0.
    [[nodiscard]] std::vector<double> entropy_moment() const;
    // P(at least two strictly positive entries).
    [[nodiscard]] double prob_two_positive() const;

    // Weight vector of one node; a pure function of (seed, node).
    void draw(std::uint64_t seed, const WordHash& node, std::span<double> out) const;

private:
    Variant v_;
    std::size_t m_ = 0;
    // Outcome CDF for GeneralDiscrete; r_i^alpha for Percolation.
    std::vector<double> cumulative_;
};

inline constexpr double kA1Grid[] = {1.01, 1.1, 1.5, 2.0};

struct MomentWitness {
    double p;
    double value;  // sum_i E(W_i^p)
};

struct ValidationReport {
    double mean_sum = 0.0;
    bool mean_one = false;
    double a0_probability = 0.0;
    bool a0 = false;
    std::vector<MomentWitness> a1_moments;
    std::optional<double> a1_witness;
    bool passed = false;
    std::vector<std::string> failures;
};

ValidationReport validate_weight_model(const WeightModel& model);

// Seeded lazy realization of the cascade. Weight vectors are drawn on demand
// from a counter-based generator keyed by (seed, word hash), so any word's
// draw is reproducible without touching its ancestors' siblings.
class CascadeRealization {
public:
    CascadeRealization(std::shared_ptr<const WeightModel> model, std::uint64_t seed);
    CascadeRealization(const WeightModel& model, std::uint64_t seed)
        : CascadeRealization(std::make_shared<const WeightModel>(model), seed) {}

    [[nodiscard]] const WeightModel& model() const noexcept { return *model_; }
    [[nodiscard]] std::shared_ptr<const WeightModel> model_ptr() const noexcept { return model_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::size_t size() const noexcept { return model_->size(); }

    void draw(const WordHash& node, std::span<double> out) const { model_->draw(seed_, node, out); }
    [[nodiscard]] std::vector<double> draw_weights(const Word& w) const;
    [[nodiscard]] double q_value(const Word& w) const;

private:
    std::shared_ptr<const WeightModel> model_;
    std::uint64_t seed_;
};

WordHash hash_word(const Word& w);

// Y_n = sum over |j| = n of Q_j, by pruned enumeration (zero subtrees are
// skipped). CapExceeded when more than `cap` nodes survive at any level.
double martingale_mass(const CascadeRealization& real, int n, std::size_t cap = kDefaultAtomCap);
// Unbiased estimate m^n * mean of Q over uniformly drawn level-n words.
double martingale_mass_sampled(const CascadeRealization& real, int n, std::size_t samples, std::uint64_t seed);

struct TailPolicy {
    enum class Kind { Expectation, Simulated } kind = Kind::Expectation;
    int depth = 8;

    static TailPolicy expectation() { return {}; }
    static TailPolicy simulated(int depth = 8) { return {Kind::Simulated, depth}; }
};

// One atom per surviving level-n word at f_w(x0), mass Q_w * tau_w. Atoms
// carry their words. Extinct when every mass is zero.
DiscreteMeasure cascade_measure(const CascadeRealization& real, const IfsSpec& ifs, int n,
                                TailPolicy tail = {}, std::size_t cap = kDefaultAtomCap);

DiscreteMeasure normalized(const DiscreteMeasure& measure);

struct SurvivingCascade {
    CascadeRealization realization;
    DiscreteMeasure measure;
    std::size_t rejections = 0;
};

// Conditions on survival by rejection: tries seeds derived from `seed` until
// the level-n measure has positive mass. Extinct after max_attempts.
SurvivingCascade surviving_cascade(std::shared_ptr<const WeightModel> model, const IfsSpec& ifs, int n,
                                   std::uint64_t seed, TailPolicy tail = {}, std::size_t max_attempts = 1000,
                                   std::size_t cap = kDefaultAtomCap);

// Root of sum r_i^s = 1.
double similarity_dimension(std::span<const double> ratios);
WeightModel bernoulli_weights(const IfsSpec& ifs);

// Root of E(sum_{i in S} r_i^alpha) = 1. Subcritical when E card S <= 1.
double percolation_exponent(const SubsetLaw& law, std::span<const double> ratios);
WeightModel percolation_weights(const SubsetLaw& law, std::span<const double> ratios, double alpha);
// The same law as an explicit outcome table, one outcome per subset.
WeightModel expand_to_general(const WeightModel& model);

struct PercolationSample {
    std::vector<std::vector<Word>> levels;  // S_0 = {empty word}, ..., S_n
    bool extinct = false;

    [[nodiscard]] std::string to_text() const;
};

PercolationSample sample_percolation_set(const SubsetLaw& law, const IfsSpec& ifs, int n, std::uint64_t seed,
                                         std::size_t cap = kDefaultAtomCap);

struct ExpectationTerms {
    double weight_entropy;  // sum_i E(W_i log W_i)
    double log_ratio;       // sum_i E(W_i) log r_i
};

ExpectationTerms expectation_terms(const WeightModel& model, std::span<const double> ratios);

struct AlphaReport {
    double value = 0.0;
    bool clamped = false;  // raw value fell outside [0, dim]
    double raw = 0.0;
};

AlphaReport theoretical_alpha(const WeightModel& model, std::span<const double> ratios, double cond_entropy,
                              int dim);

}  // namespace cascadelab

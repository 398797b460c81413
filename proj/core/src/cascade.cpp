#include "cascadelab/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "cascadelab/error.hpp"
#include "cascadelab/table.hpp"

namespace cascadelab {

namespace {

// Bisection on a strictly decreasing function with f(lo) > 0 > f(hi), run
// until the bracket can no longer shrink in double precision.
double bisect_decreasing(const std::function<double(double)>& f, double lo, double hi) {
    for (int iter = 0; iter < 2000; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (f(mid) > 0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double upper_bracket(const std::function<double(double)>& f) {
    double hi = 1.0;
    for (int i = 0; i < 1100 && f(hi) > 0; ++i) hi *= 2.0;
    if (f(hi) > 0) throw Error(ErrorKind::NoRoot, "no sign change found while bracketing the root");
    return hi;
}

double xlogx(double x) { return x > 0 ? x * std::log(x) : 0.0; }

}  // namespace

// ---------------------------------------------------------------------------
// SubsetLaw

SubsetLaw SubsetLaw::independent(std::vector<double> keep) {
    if (keep.size() < 2) throw Error(ErrorKind::InvalidWeightModel, "subset law needs at least two symbols");
    for (std::size_t i = 0; i < keep.size(); ++i) {
        if (!(keep[i] >= 0.0 && keep[i] <= 1.0))
            throw Error(ErrorKind::InvalidWeightModel, "keep[" + std::to_string(i) + "] must lie in [0, 1]");
    }
    SubsetLaw law;
    law.m_ = keep.size();
    law.keep_ = std::move(keep);
    return law;
}

SubsetLaw SubsetLaw::explicit_list(std::size_t m, std::vector<SubsetOutcome> outcomes) {
    if (m < 2) throw Error(ErrorKind::InvalidWeightModel, "subset law needs at least two symbols");
    if (outcomes.empty()) throw Error(ErrorKind::InvalidWeightModel, "explicit subset law has no outcomes");
    if (outcomes.size() > kMaxOutcomes)
        throw Error(ErrorKind::InvalidWeightModel, "explicit subset law exceeds 65536 outcomes");
    SubsetLaw law;
    law.m_ = m;
    double acc = 0.0;
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
        auto& o = outcomes[k];
        if (!(o.probability >= 0.0))
            throw Error(ErrorKind::InvalidWeightModel, "outcomes[" + std::to_string(k) + "].probability is negative");
        std::sort(o.members.begin(), o.members.end());
        if (std::adjacent_find(o.members.begin(), o.members.end()) != o.members.end())
            throw Error(ErrorKind::InvalidWeightModel, "outcomes[" + std::to_string(k) + "] repeats a symbol");
        if (!o.members.empty() && o.members.back() >= m)
            throw Error(ErrorKind::InvalidWeightModel, "outcomes[" + std::to_string(k) + "] has a symbol out of range");
        acc += o.probability;
        law.cumulative_.push_back(acc);
    }
    if (std::abs(acc - 1.0) > 1e-9)
        throw Error(ErrorKind::InvalidWeightModel, "subset probabilities sum to " + std::to_string(acc));
    law.outcomes_ = std::move(outcomes);
    return law;
}

std::vector<double> SubsetLaw::inclusion() const {
    if (is_independent()) return keep_;
    std::vector<double> p(m_, 0.0);
    for (const auto& o : outcomes_)
        for (Symbol s : o.members) p[s] += o.probability;
    return p;
}

double SubsetLaw::expected_size() const {
    const auto p = inclusion();
    return std::accumulate(p.begin(), p.end(), 0.0);
}

double SubsetLaw::prob_at_least_two() const {
    if (!is_independent()) {
        double total = 0.0;
        for (const auto& o : outcomes_)
            if (o.members.size() >= 2) total += o.probability;
        return total;
    }
    double none = 1.0, one = 0.0;
    for (double k : keep_) {
        one = one * (1.0 - k) + none * k;
        none *= 1.0 - k;
    }
    return std::max(0.0, 1.0 - none - one);
}

std::vector<SubsetOutcome> SubsetLaw::expand() const {
    if (!is_independent()) return outcomes_;
    if (m_ > 16) throw Error(ErrorKind::CapExceeded, "independent law over more than 16 symbols is too large to expand");
    std::vector<SubsetOutcome> out;
    for (std::size_t mask = 0; mask < (std::size_t{1} << m_); ++mask) {
        SubsetOutcome o;
        o.probability = 1.0;
        for (std::size_t i = 0; i < m_; ++i) {
            if (mask >> i & 1U) {
                o.members.push_back(static_cast<Symbol>(i));
                o.probability *= keep_[i];
            } else {
                o.probability *= 1.0 - keep_[i];
            }
        }
        out.push_back(std::move(o));
    }
    return out;
}

void SubsetLaw::draw(std::uint64_t seed, const WordHash& node, std::span<std::uint8_t> mask) const {
    KeyedStream stream(seed, node);
    if (is_independent()) {
        for (std::size_t i = 0; i < m_; ++i) mask[i] = stream.uniform() < keep_[i] ? 1 : 0;
        return;
    }
    std::fill(mask.begin(), mask.end(), std::uint8_t{0});
    const double u = stream.uniform() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), outcomes_.size() - 1);
    for (Symbol s : outcomes_[k].members) mask[s] = 1;
}

// ---------------------------------------------------------------------------
// WeightModel

WeightModel::WeightModel(Variant v) : v_(std::move(v)) {
    if (const auto* det = std::get_if<DeterministicWeights>(&v_)) {
        m_ = det->p.size();
        if (m_ < 2) throw Error(ErrorKind::InvalidWeightModel, "deterministic weights need at least two entries");
        for (std::size_t i = 0; i < m_; ++i)
            if (!(det->p[i] >= 0.0) || !std::isfinite(det->p[i]))
                throw Error(ErrorKind::InvalidWeightModel, "p[" + std::to_string(i) + "] must be finite and >= 0");
    } else if (const auto* perc = std::get_if<PercolationWeights>(&v_)) {
        m_ = perc->law.size();
        if (perc->ratios.size() != m_)
            throw Error(ErrorKind::InvalidWeightModel, "percolation ratios and subset law disagree on m");
        for (std::size_t i = 0; i < m_; ++i)
            if (!(perc->ratios[i] > 0.0 && perc->ratios[i] < 1.0))
                throw Error(ErrorKind::InvalidWeightModel, "ratios[" + std::to_string(i) + "] must lie in (0, 1)");
        if (!(perc->alpha >= 0.0) || !std::isfinite(perc->alpha))
            throw Error(ErrorKind::InvalidWeightModel, "percolation exponent must be finite and >= 0");
        for (double r : perc->ratios) cumulative_.push_back(std::pow(r, perc->alpha));
    } else {
        const auto& gen = std::get<GeneralDiscreteWeights>(v_);
        if (gen.outcomes.empty()) throw Error(ErrorKind::InvalidWeightModel, "general law has no outcomes");
        m_ = gen.outcomes.front().weights.size();
        if (m_ < 2) throw Error(ErrorKind::InvalidWeightModel, "weight vectors need at least two entries");
        double acc = 0.0;
        for (std::size_t k = 0; k < gen.outcomes.size(); ++k) {
            const auto& o = gen.outcomes[k];
            const std::string at = "outcomes[" + std::to_string(k) + "]";
            if (o.weights.size() != m_) throw Error(ErrorKind::InvalidWeightModel, at + ".weights has the wrong length");
            if (!(o.probability >= 0.0)) throw Error(ErrorKind::InvalidWeightModel, at + ".probability is negative");
            for (double w : o.weights)
                if (!(w >= 0.0) || !std::isfinite(w))
                    throw Error(ErrorKind::InvalidWeightModel, at + ".weights must be finite and >= 0");
            acc += o.probability;
            cumulative_.push_back(acc);
        }
        if (std::abs(acc - 1.0) > 1e-9)
            throw Error(ErrorKind::InvalidWeightModel, "outcome probabilities sum to " + std::to_string(acc));
    }
}

std::string WeightModel::kind() const {
    switch (v_.index()) {
        case 0: return "deterministic";
        case 1: return "percolation";
        default: return "general";
    }
}

std::vector<double> WeightModel::moment(double p) const {
    std::vector<double> out(m_, 0.0);
    if (const auto* det = std::get_if<DeterministicWeights>(&v_)) {
        for (std::size_t i = 0; i < m_; ++i) out[i] = det->p[i] > 0 ? std::pow(det->p[i], p) : 0.0;
    } else if (const auto* perc = std::get_if<PercolationWeights>(&v_)) {
        const auto incl = perc->law.inclusion();
        for (std::size_t i = 0; i < m_; ++i) out[i] = incl[i] * std::pow(cumulative_[i], p);
    } else {
        for (const auto& o : std::get<GeneralDiscreteWeights>(v_).outcomes)
            for (std::size_t i = 0; i < m_; ++i)
                if (o.weights[i] > 0) out[i] += o.probability * std::pow(o.weights[i], p);
    }
    return out;
}

std::vector<double> WeightModel::mean() const {
    std::vector<double> out(m_, 0.0);
    if (const auto* det = std::get_if<DeterministicWeights>(&v_)) return det->p;
    if (const auto* perc = std::get_if<PercolationWeights>(&v_)) {
        const auto incl = perc->law.inclusion();
        for (std::size_t i = 0; i < m_; ++i) out[i] = incl[i] * cumulative_[i];
        return out;
    }
    for (const auto& o : std::get<GeneralDiscreteWeights>(v_).outcomes)
        for (std::size_t i = 0; i < m_; ++i) out[i] += o.probability * o.weights[i];
    return out;
}

std::vector<double> WeightModel::entropy_moment() const {
    std::vector<double> out(m_, 0.0);
    if (const auto* det = std::get_if<DeterministicWeights>(&v_)) {
        for (std::size_t i = 0; i < m_; ++i) out[i] = xlogx(det->p[i]);
    } else if (const auto* perc = std::get_if<PercolationWeights>(&v_)) {
        const auto incl = perc->law.inclusion();
        for (std::size_t i = 0; i < m_; ++i) out[i] = incl[i] * xlogx(cumulative_[i]);
    } else {
        for (const auto& o : std::get<GeneralDiscreteWeights>(v_).outcomes)
            for (std::size_t i = 0; i < m_; ++i) out[i] += o.probability * xlogx(o.weights[i]);
    }
    return out;
}

double WeightModel::prob_two_positive() const {
    if (const auto* det = std::get_if<DeterministicWeights>(&v_))
        return std::count_if(det->p.begin(), det->p.end(), [](double x) { return x > 0; }) >= 2 ? 1.0 : 0.0;
    if (const auto* perc = std::get_if<PercolationWeights>(&v_)) {
        // r^alpha > 0 always, so positivity is membership.
        return perc->law.prob_at_least_two();
    }
    double total = 0.0;
    for (const auto& o : std::get<GeneralDiscreteWeights>(v_).outcomes)
        if (std::count_if(o.weights.begin(), o.weights.end(), [](double x) { return x > 0; }) >= 2)
            total += o.probability;
    return total;
}

void WeightModel::draw(std::uint64_t seed, const WordHash& node, std::span<double> out) const {
    if (const auto* det = std::get_if<DeterministicWeights>(&v_)) {
        std::copy(det->p.begin(), det->p.end(), out.begin());
        return;
    }
    if (const auto* perc = std::get_if<PercolationWeights>(&v_)) {
        std::uint8_t mask[64];
        std::vector<std::uint8_t> big;
        std::span<std::uint8_t> view(mask, std::min<std::size_t>(m_, 64));
        if (m_ > 64) {
            big.resize(m_);
            view = big;
        }
        perc->law.draw(seed, node, view);
        for (std::size_t i = 0; i < m_; ++i) out[i] = view[i] ? cumulative_[i] : 0.0;
        return;
    }
    const auto& outcomes = std::get<GeneralDiscreteWeights>(v_).outcomes;
    KeyedStream stream(seed, node);
    const double u = stream.uniform() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), outcomes.size() - 1);
    std::copy(outcomes[k].weights.begin(), outcomes[k].weights.end(), out.begin());
}

ValidationReport validate_weight_model(const WeightModel& model) {
    ValidationReport report;
    const auto mean = model.mean();
    report.mean_sum = std::accumulate(mean.begin(), mean.end(), 0.0);
    report.mean_one = std::abs(report.mean_sum - 1.0) <= 1e-12;
    if (!report.mean_one) report.failures.push_back("sum of E(W_i) is " + format_number(report.mean_sum) + ", not 1");

    report.a0_probability = model.prob_two_positive();
    report.a0 = report.a0_probability > 0.0;
    if (!report.a0) report.failures.push_back("(a0): at most one weight is ever positive");

    for (double p : kA1Grid) {
        const auto mom = model.moment(p);
        const double v = std::accumulate(mom.begin(), mom.end(), 0.0);
        report.a1_moments.push_back({p, v});
        if (!report.a1_witness && v < 1.0) report.a1_witness = p;
    }
    if (!report.a1_witness) report.failures.push_back("(a1): no p in {1.01, 1.1, 1.5, 2} has sum E(W_i^p) < 1");
    report.passed = report.failures.empty();
    return report;
}

// ---------------------------------------------------------------------------
// Realizations

WordHash hash_word(const Word& w) {
    WordHash h;
    for (Symbol s : w.symbols()) h = h.extend(s);
    return h;
}

CascadeRealization::CascadeRealization(std::shared_ptr<const WeightModel> model, std::uint64_t seed)
    : model_(std::move(model)), seed_(seed) {
    if (!model_) throw Error(ErrorKind::InvalidWeightModel, "realization needs a weight model");
}

std::vector<double> CascadeRealization::draw_weights(const Word& w) const {
    std::vector<double> out(size());
    draw(hash_word(w), out);
    return out;
}

double CascadeRealization::q_value(const Word& w) const {
    std::vector<double> weights(size());
    WordHash h;
    double q = 1.0;
    for (Symbol s : w.symbols()) {
        if (s >= size()) throw Error(ErrorKind::InvalidWord, "symbol out of range in " + w.to_string());
        draw(h, weights);
        q *= weights[s];
        if (q == 0.0) return 0.0;
        h = h.extend(s);
    }
    return q;
}

namespace {

// Sum of Q over the level-`depth` descendants of the node `h`, relative to
// that node.
double subtree_mass(const CascadeRealization& real, const WordHash& h, int depth, std::size_t& leaves,
                    std::size_t cap) {
    if (depth == 0) {
        if (++leaves > cap) throw Error(ErrorKind::CapExceeded, "surviving words exceed the atom cap");
        return 1.0;
    }
    std::vector<double> w(real.size());
    real.draw(h, w);
    double total = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        if (w[j] == 0.0) continue;
        total += w[j] * subtree_mass(real, h.extend(static_cast<std::uint32_t>(j)), depth - 1, leaves, cap);
    }
    return total;
}

}  // namespace

double martingale_mass(const CascadeRealization& real, int n, std::size_t cap) {
    if (n < 0) throw Error(ErrorKind::InvalidArgument, "martingale level must be >= 0");
    std::size_t leaves = 0;
    return subtree_mass(real, WordHash{}, n, leaves, cap);
}

double martingale_mass_sampled(const CascadeRealization& real, int n, std::size_t samples, std::uint64_t seed) {
    if (samples == 0) throw Error(ErrorKind::InvalidArgument, "sampled martingale needs at least one sample");
    const std::size_t m = real.size();
    std::vector<double> w(m);
    double total = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
        KeyedStream stream(seed, derive_seed(seed, "martingale-path", k));
        WordHash h;
        double q = 1.0;
        for (int level = 0; level < n && q > 0.0; ++level) {
            const auto j = static_cast<std::uint32_t>(stream.below(m));
            real.draw(h, w);
            q *= w[j];
            h = h.extend(j);
        }
        total += q;
    }
    return total / static_cast<double>(samples) * std::pow(static_cast<double>(m), n);
}

DiscreteMeasure cascade_measure(const CascadeRealization& real, const IfsSpec& ifs, int n, TailPolicy tail,
                                std::size_t cap) {
    if (n < 1) throw Error(ErrorKind::InvalidArgument, "cascade level must be >= 1");
    if (real.size() != ifs.size())
        throw Error(ErrorKind::InvalidWeightModel, "weight model and IFS disagree on the number of maps");
    const std::size_t m = ifs.size();
    const auto d = static_cast<std::size_t>(ifs.dim());

    // Row-major r_j O_j and t_j per map.
    std::vector<double> lin(m * d * d), trans(m * d);
    for (std::size_t j = 0; j < m; ++j) {
        const auto& f = ifs.map(j);
        for (std::size_t a = 0; a < d; ++a) {
            trans[j * d + a] = f.translation[static_cast<Eigen::Index>(a)];
            for (std::size_t b = 0; b < d; ++b)
                lin[j * d * d + a * d + b] = f.ratio * f.rotation(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        }
    }
    const Vec& x0 = ifs.x0();

    struct Frame {
        std::vector<double> a, t, w;
        WordHash hash;
        double q = 1.0;
    };
    std::vector<Frame> stack(static_cast<std::size_t>(n) + 1);
    for (auto& f : stack) {
        f.a.assign(d * d, 0.0);
        f.t.assign(d, 0.0);
        f.w.assign(m, 0.0);
    }
    for (std::size_t a = 0; a < d; ++a) stack[0].a[a * d + a] = 1.0;

    DiscreteMeasure out(ifs.dim());
    std::vector<Symbol> word(static_cast<std::size_t>(n));
    std::vector<double> point(d);
    std::size_t leaf_budget = 0;

    std::function<void(int)> visit = [&](int depth) {
        Frame& cur = stack[static_cast<std::size_t>(depth)];
        if (depth == n) {
            double tau = 1.0;
            if (tail.kind == TailPolicy::Kind::Simulated) {
                std::size_t leaves = 0;
                tau = subtree_mass(real, cur.hash, tail.depth, leaves, cap);
            }
            const double mass = cur.q * tau;
            if (mass <= 0.0) return;
            for (std::size_t a = 0; a < d; ++a) {
                double s = cur.t[a];
                for (std::size_t b = 0; b < d; ++b) s += cur.a[a * d + b] * x0[static_cast<Eigen::Index>(b)];
                point[a] = s;
            }
            if (++leaf_budget > cap) throw Error(ErrorKind::CapExceeded, "surviving atoms exceed the atom cap");
            out.add(point, mass, word);
            return;
        }
        real.draw(cur.hash, cur.w);
        Frame& next = stack[static_cast<std::size_t>(depth) + 1];
        for (std::size_t j = 0; j < m; ++j) {
            if (cur.w[j] == 0.0) continue;
            next.q = cur.q * cur.w[j];
            next.hash = cur.hash.extend(static_cast<std::uint32_t>(j));
            const double* lj = &lin[j * d * d];
            const double* tj = &trans[j * d];
            for (std::size_t a = 0; a < d; ++a) {
                double s = cur.t[a];
                for (std::size_t b = 0; b < d; ++b) s += cur.a[a * d + b] * tj[b];
                next.t[a] = s;
                for (std::size_t c = 0; c < d; ++c) {
                    double v = 0.0;
                    for (std::size_t b = 0; b < d; ++b) v += cur.a[a * d + b] * lj[b * d + c];
                    next.a[a * d + c] = v;
                }
            }
            word[static_cast<std::size_t>(depth)] = static_cast<Symbol>(j);
            visit(depth + 1);
        }
    };
    visit(0);
    if (out.empty() || !(out.total_mass() > 0.0))
        throw Error(ErrorKind::Extinct, "cascade is extinct at level " + std::to_string(n));
    return out;
}

DiscreteMeasure normalized(const DiscreteMeasure& measure) {
    if (!(measure.total_mass() > 0.0)) throw Error(ErrorKind::Extinct, "cannot normalize a zero measure");
    return measure.scaled(1.0 / measure.total_mass());
}

SurvivingCascade surviving_cascade(std::shared_ptr<const WeightModel> model, const IfsSpec& ifs, int n,
                                   std::uint64_t seed, TailPolicy tail, std::size_t max_attempts, std::size_t cap) {
    for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
        const std::uint64_t s = attempt == 0 ? seed : derive_seed(seed, "survival", attempt);
        CascadeRealization real(model, s);
        try {
            auto measure = cascade_measure(real, ifs, n, tail, cap);
            return {std::move(real), std::move(measure), attempt};
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Extinct) throw;
        }
    }
    throw Error(ErrorKind::Extinct, "no surviving realization in " + std::to_string(max_attempts) + " attempts");
}

// ---------------------------------------------------------------------------
// Closed-form special cases

double similarity_dimension(std::span<const double> ratios) {
    if (ratios.size() < 2) throw Error(ErrorKind::InvalidIfs, "similarity dimension needs at least two ratios");
    for (double r : ratios)
        if (!(r > 0.0 && r < 1.0)) throw Error(ErrorKind::InvalidIfs, "ratios must lie in (0, 1)");
    const auto f = [&](double s) {
        double sum = 0.0;
        for (double r : ratios) sum += std::pow(r, s);
        return sum - 1.0;
    };
    return bisect_decreasing(f, 0.0, upper_bracket(f));
}

WeightModel bernoulli_weights(const IfsSpec& ifs) {
    const auto ratios = ifs.ratios();
    const double s = similarity_dimension(ratios);
    DeterministicWeights w;
    for (double r : ratios) w.p.push_back(std::pow(r, s));
    return WeightModel(std::move(w));
}

double percolation_exponent(const SubsetLaw& law, std::span<const double> ratios) {
    if (ratios.size() != law.size())
        throw Error(ErrorKind::InvalidWeightModel, "percolation ratios and subset law disagree on m");
    for (double r : ratios)
        if (!(r > 0.0 && r < 1.0)) throw Error(ErrorKind::InvalidWeightModel, "ratios must lie in (0, 1)");
    const double expected = law.expected_size();
    if (expected <= 1.0 + 1e-12)
        throw Error(ErrorKind::Subcritical, "expected number of retained children is " + format_number(expected));
    const auto incl = law.inclusion();
    const auto f = [&](double a) {
        double sum = 0.0;
        for (std::size_t i = 0; i < ratios.size(); ++i) sum += incl[i] * std::pow(ratios[i], a);
        return sum - 1.0;
    };
    if (!(f(0.0) > 0.0)) throw Error(ErrorKind::NoRoot, "percolation equation is non-positive at 0");
    return bisect_decreasing(f, 0.0, upper_bracket(f));
}

WeightModel percolation_weights(const SubsetLaw& law, std::span<const double> ratios, double alpha) {
    return WeightModel(PercolationWeights{law, std::vector<double>(ratios.begin(), ratios.end()), alpha});
}

WeightModel expand_to_general(const WeightModel& model) {
    GeneralDiscreteWeights gen;
    const std::size_t m = model.size();
    if (const auto* det = std::get_if<DeterministicWeights>(&model.variant())) {
        gen.outcomes.push_back({1.0, det->p});
    } else if (const auto* perc = std::get_if<PercolationWeights>(&model.variant())) {
        for (const auto& o : perc->law.expand()) {
            DiscreteOutcome out{o.probability, std::vector<double>(m, 0.0)};
            for (Symbol s : o.members) out.weights[s] = std::pow(perc->ratios[s], perc->alpha);
            gen.outcomes.push_back(std::move(out));
        }
    } else {
        return model;
    }
    return WeightModel(std::move(gen));
}

std::string PercolationSample::to_text() const {
    std::ostringstream out;
    for (std::size_t k = 0; k < levels.size(); ++k) {
        out << k << ':';
        for (const auto& w : levels[k]) out << ' ' << w.to_string();
        out << '\n';
    }
    out << "extinct: " << (extinct ? "yes" : "no") << '\n';
    return out.str();
}

PercolationSample sample_percolation_set(const SubsetLaw& law, const IfsSpec& ifs, int n, std::uint64_t seed,
                                         std::size_t cap) {
    if (n < 1) throw Error(ErrorKind::InvalidArgument, "percolation level must be >= 1");
    if (law.size() != ifs.size()) throw Error(ErrorKind::InvalidWeightModel, "subset law and IFS disagree on m");
    const std::size_t m = law.size();
    PercolationSample sample;
    std::vector<WordHash> hashes{WordHash{}};
    sample.levels.push_back({Word{}});
    std::vector<std::uint8_t> mask(m);
    for (int level = 1; level <= n; ++level) {
        std::vector<Word> next;
        std::vector<WordHash> next_hashes;
        const auto& parents = sample.levels.back();
        for (std::size_t p = 0; p < parents.size(); ++p) {
            law.draw(seed, hashes[p], mask);
            for (std::size_t j = 0; j < m; ++j) {
                if (!mask[j]) continue;
                next.push_back(parents[p].child(static_cast<Symbol>(j)));
                next_hashes.push_back(hashes[p].extend(static_cast<std::uint32_t>(j)));
            }
            if (next.size() > cap) throw Error(ErrorKind::CapExceeded, "percolation survivors exceed the atom cap");
        }
        sample.levels.push_back(std::move(next));
        hashes = std::move(next_hashes);
        if (sample.levels.back().empty()) sample.extinct = true;
    }
    return sample;
}

ExpectationTerms expectation_terms(const WeightModel& model, std::span<const double> ratios) {
    if (ratios.size() != model.size())
        throw Error(ErrorKind::InvalidWeightModel, "ratios and weight model disagree on m");
    const auto ent = model.entropy_moment();
    const auto mean = model.mean();
    ExpectationTerms terms{0.0, 0.0};
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        terms.weight_entropy += ent[i];
        terms.log_ratio += mean[i] * std::log(ratios[i]);
    }
    return terms;
}

AlphaReport theoretical_alpha(const WeightModel& model, std::span<const double> ratios, double cond_entropy,
                              int dim) {
    if (!(cond_entropy >= 0.0)) throw Error(ErrorKind::InvalidArgument, "conditional entropy must be >= 0");
    const auto terms = expectation_terms(model, ratios);
    if (!(std::abs(terms.log_ratio) > 0.0))
        throw Error(ErrorKind::DegenerateDenominator, "sum of E(W_i) log r_i is zero");
    AlphaReport report;
    report.raw = (cond_entropy + terms.weight_entropy) / terms.log_ratio;
    report.value = std::clamp(report.raw, 0.0, static_cast<double>(dim));
    report.clamped = report.value != report.raw;
    return report;
}

}  // namespace cascadelab

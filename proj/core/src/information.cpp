#include "cascadelab/information.hpp"

#include <algorithm>
#include <cmath>

#include "cascadelab/error.hpp"
#include "cascadelab/parallel.hpp"
#include "cascadelab/projection.hpp"
#include "cascadelab/regression.hpp"
#include "cascadelab/rng.hpp"

namespace cascadelab {

InformationValue conditional_information(const BallIndex& image, std::span<const double> y, double radius,
                                         Symbol first) {
    const double total = image.mass(y, radius);
    if (!(total > 0.0)) throw Error(ErrorKind::EmptyBall, "conditional information ball holds no mass");
    const double part = image.mass_with_label(y, radius, first);
    if (!(part > 0.0)) return {kInformationCap, true};
    // The label mass is a sub-sum of the total, but the two are accumulated
    // separately; clamp the ratio so rounding never gives a negative value.
    const double value = -std::log(std::min(1.0, part / total));
    if (value >= kInformationCap) return {kInformationCap, true};
    return {value, false};
}

InformationValue conditional_information(const DiscreteMeasure& image, std::size_t atom, double radius) {
    if (!image.has_words()) throw Error(ErrorKind::InvalidArgument, "conditional information needs labelled atoms");
    return conditional_information(*image.index_or_build(), image.point(atom), radius, image.label(atom));
}

Mat ImageFamily::sample(int dim, std::uint64_t seed, std::uint64_t index) const {
    if (!frame) return Mat::Identity(dim, dim);
    if (frame->cols() != dim) throw Error(ErrorKind::DimensionMismatch, "image frame does not match the IFS dimension");
    if (!group) return *frame;
    return *frame * sample_group_rotation(*group, seed, index, assume_dense);
}

namespace {

double prefix_ratio(const IfsSpec& ifs, std::span<const Symbol> word, int n) {
    double r = 1.0;
    for (int k = 0; k < n; ++k) r *= ifs.map(word[static_cast<std::size_t>(k)]).ratio;
    return r;
}

MonteCarloEstimate finish(std::vector<double> values, std::vector<double> weights, const std::vector<char>& saturated) {
    MonteCarloEstimate est;
    est.samples = values.size();
    for (char s : saturated) est.saturated += s ? 1 : 0;
    // A handful of saturated samples are dropped; more than 1% makes the
    // whole estimate unreliable and they are kept at the cap.
    if (est.saturated > 0 && static_cast<double>(est.saturated) < 0.01 * static_cast<double>(values.size())) {
        std::vector<double> v, w;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (saturated[i]) continue;
            v.push_back(values[i]);
            w.push_back(weights[i]);
        }
        values = std::move(v);
        weights = std::move(w);
    } else if (est.saturated > 0) {
        est.reliable = false;
    }
    const auto m = weighted_mean(values, weights);
    est.value = m.mean;
    est.standard_error = m.standard_error;
    return est;
}

}  // namespace

MonteCarloEstimate conditional_entropy(std::shared_ptr<const WeightModel> model, const IfsSpec& ifs,
                                       const ImageFamily& family, int n, std::size_t replicas, std::uint64_t seed,
                                       const ConditionalEntropyOptions& options) {
    if (n < 0) throw Error(ErrorKind::InvalidArgument, "conditional entropy depth must be >= 0");
    if (replicas == 0) throw Error(ErrorKind::InvalidArgument, "conditional entropy needs replicas");
    const int level = std::max(1, n + std::max(0, options.extra_levels));
    const double cell = ifs.radius_bound() * std::pow(ifs.rho(), n);
    const bool shared_image = model->is_deterministic() && !(family.frame && family.group);

    std::optional<DiscreteMeasure> fixed_image;
    std::optional<AtomSampler> fixed_sampler;
    std::optional<DiscreteMeasure> fixed_measure;
    if (model->is_deterministic()) {
        fixed_measure = cascade_measure(CascadeRealization(model, seed), ifs, level, options.tail);
        fixed_sampler.emplace(*fixed_measure);
        if (shared_image)
            fixed_image = indexed(linear_image(*fixed_measure, family.sample(ifs.dim(), seed, 0)), cell);
    }

    std::vector<double> values(replicas), weights(replicas);
    std::vector<char> saturated(replicas, 0);
    std::vector<std::size_t> rejections(replicas, 0);
    parallel_for(replicas, [&](std::size_t j) {
        KeyedStream stream(seed, derive_seed(seed, "cond-entropy-path", j));
        const DiscreteMeasure* source = nullptr;
        std::optional<SurvivingCascade> survivor;
        std::optional<AtomSampler> sampler;
        double weight = 1.0;
        if (fixed_measure) {
            source = &*fixed_measure;
            weight = fixed_measure->total_mass();
        } else {
            survivor = surviving_cascade(model, ifs, level, derive_seed(seed, "cond-entropy-replica", j), options.tail,
                                         options.max_attempts);
            rejections[j] = survivor->rejections;
            source = &survivor->measure;
            weight = source->total_mass();
            sampler.emplace(*source);
        }
        const AtomSampler& pick = fixed_sampler ? *fixed_sampler : *sampler;
        const std::size_t atom = pick.sample(stream.uniform());

        std::optional<DiscreteMeasure> own_image;
        const DiscreteMeasure* image = nullptr;
        if (fixed_image) {
            image = &*fixed_image;
        } else {
            own_image = indexed(linear_image(*source, family.sample(ifs.dim(), seed, j)), cell);
            image = &*own_image;
        }
        const double radius = ifs.radius_bound() * prefix_ratio(ifs, source->word_symbols(atom), n);
        const auto info = conditional_information(*image, atom, radius);
        values[j] = info.value;
        saturated[j] = info.saturated ? 1 : 0;
        weights[j] = weight;
    });
    auto est = finish(std::move(values), std::move(weights), saturated);
    for (auto r : rejections) est.rejections += r;
    return est;
}

namespace {

// One Peyriere path of depth n; returns its importance weight (0 when the
// descent hits a node whose weights are all zero).
double descend(const CascadeRealization& real, std::span<const double> ratios, int n, KeyedStream& stream,
               PeyrierePath& path) {
    const std::size_t m = real.size();
    std::vector<double> w(m);
    path.symbols.clear();
    path.log_q.assign(1, 0.0);
    path.log_r.assign(1, 0.0);
    WordHash h;
    double weight = 1.0;
    for (int level = 0; level < n; ++level) {
        real.draw(h, w);
        if (level == 0) path.root_weights = w;
        double sum = 0.0;
        for (double x : w) sum += x;
        if (!(sum > 0.0)) return 0.0;
        const double u = stream.uniform() * sum;
        std::size_t j = 0;
        double acc = w[0];
        while ((acc <= u || w[j] == 0.0) && j + 1 < m) acc += w[++j];
        weight *= sum;
        path.symbols.push_back(static_cast<Symbol>(j));
        path.log_q.push_back(path.log_q.back() + std::log(w[j]));
        path.log_r.push_back(path.log_r.back() + std::log(ratios[j]));
        h = h.extend(static_cast<std::uint32_t>(j));
    }
    if (n == 0) {
        real.draw(h, w);
        path.root_weights = w;
    }
    return weight;
}

}  // namespace

MonteCarloEstimate peyriere_expectation(std::shared_ptr<const WeightModel> model, std::span<const double> ratios,
                                        const PathFunctional& functional, int n, std::size_t samples,
                                        std::uint64_t seed) {
    if (ratios.size() != model->size()) throw Error(ErrorKind::InvalidWeightModel, "ratios and model disagree on m");
    if (samples == 0) throw Error(ErrorKind::InvalidArgument, "Peyriere expectation needs samples");
    std::vector<double> values(samples, 0.0), weights(samples, 0.0);
    parallel_for(samples, [&](std::size_t k) {
        const CascadeRealization real(model, derive_seed(seed, "peyriere-replica", k));
        KeyedStream stream(seed, derive_seed(seed, "peyriere-path", k));
        PeyrierePath path;
        weights[k] = descend(real, ratios, n, stream, path);
        if (weights[k] > 0.0) values[k] = functional(path);
    });
    return finish(std::move(values), std::move(weights), std::vector<char>(samples, 0));
}

LlnReport lln_diagnostics(std::shared_ptr<const WeightModel> model, std::span<const double> ratios, int n_lo,
                          int n_hi, std::size_t paths, std::uint64_t seed) {
    if (n_lo < 0 || n_hi - n_lo < 2) throw Error(ErrorKind::InsufficientRange, "need at least 3 depths for the fit");
    if (ratios.size() != model->size()) throw Error(ErrorKind::InvalidWeightModel, "ratios and model disagree on m");
    std::vector<double> q_slopes(paths, 0.0), r_slopes(paths, 0.0), weights(paths, 0.0);
    std::vector<double> xs;
    for (int k = n_lo; k <= n_hi; ++k) xs.push_back(static_cast<double>(k));
    parallel_for(paths, [&](std::size_t p) {
        const CascadeRealization real(model, derive_seed(seed, "lln-replica", p));
        KeyedStream stream(seed, derive_seed(seed, "lln-path", p));
        PeyrierePath path;
        weights[p] = descend(real, ratios, n_hi, stream, path);
        if (weights[p] <= 0.0) return;
        const auto lo = static_cast<std::size_t>(n_lo);
        const auto hi = static_cast<std::size_t>(n_hi) + 1;
        q_slopes[p] = fit_line(xs, std::span<const double>(path.log_q).subspan(lo, hi - lo)).slope;
        r_slopes[p] = fit_line(xs, std::span<const double>(path.log_r).subspan(lo, hi - lo)).slope;
    });
    LlnReport report;
    report.expected = expectation_terms(*model, ratios);
    const auto q = weighted_mean(q_slopes, weights);
    const auto r = weighted_mean(r_slopes, weights);
    report.q_slope = q.mean;
    report.q_stderr = q.standard_error;
    report.r_slope = r.mean;
    report.r_stderr = r.standard_error;
    report.paths = paths;
    // When every increment is the same constant the standard error is zero
    // and only rounding separates the two sides.
    report.q_match = std::abs(q.mean - report.expected.weight_entropy) <= std::max(3.0 * q.standard_error, 1e-9);
    report.r_match = std::abs(r.mean - report.expected.log_ratio) <= std::max(3.0 * r.standard_error, 1e-9);
    return report;
}

}  // namespace cascadelab

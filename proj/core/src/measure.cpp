#include "cascadelab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <ostream>

#include "cascadelab/error.hpp"
#include "cascadelab/parallel.hpp"
#include "cascadelab/regression.hpp"
#include "cascadelab/rng.hpp"
#include "cascadelab/table.hpp"

namespace cascadelab {

// ---------------------------------------------------------------------------
// DiscreteMeasure

DiscreteMeasure::DiscreteMeasure(int dim) : dim_(dim) {
    if (dim < 1) throw Error(ErrorKind::InvalidArgument, "measure dimension must be >= 1");
}

DiscreteMeasure::DiscreteMeasure(int dim, std::vector<double> coords, std::vector<double> masses)
    : dim_(dim), coords_(std::move(coords)), masses_(std::move(masses)) {
    if (dim < 1) throw Error(ErrorKind::InvalidArgument, "measure dimension must be >= 1");
    if (coords_.size() != masses_.size() * static_cast<std::size_t>(dim))
        throw Error(ErrorKind::DimensionMismatch, "coordinate count does not match atoms * dim");
    for (double m : masses_) {
        if (!(m >= 0.0)) throw Error(ErrorKind::InvalidArgument, "atom masses must be non-negative");
        total_mass_ += m;
    }
}

void DiscreteMeasure::reserve(std::size_t atoms, std::size_t word_length) {
    coords_.reserve(atoms * static_cast<std::size_t>(dim_));
    masses_.reserve(atoms);
    symbols_.reserve(atoms * word_length);
}

void DiscreteMeasure::add(std::span<const double> point, double mass) {
    if (point.size() != static_cast<std::size_t>(dim_))
        throw Error(ErrorKind::DimensionMismatch, "atom dimension does not match the measure");
    if (word_length_ > 0) throw Error(ErrorKind::InvalidArgument, "this measure requires a word per atom");
    if (!(mass >= 0.0)) throw Error(ErrorKind::InvalidArgument, "atom masses must be non-negative");
    coords_.insert(coords_.end(), point.begin(), point.end());
    masses_.push_back(mass);
    total_mass_ += mass;
    index_.reset();
}

void DiscreteMeasure::add(std::span<const double> point, double mass, std::span<const Symbol> word) {
    if (point.size() != static_cast<std::size_t>(dim_))
        throw Error(ErrorKind::DimensionMismatch, "atom dimension does not match the measure");
    if (word.empty()) throw Error(ErrorKind::InvalidWord, "atom words must be non-empty");
    if (masses_.empty() && word_length_ == 0) word_length_ = word.size();
    if (word.size() != word_length_) throw Error(ErrorKind::InvalidWord, "all atom words must share one length");
    if (!(mass >= 0.0)) throw Error(ErrorKind::InvalidArgument, "atom masses must be non-negative");
    coords_.insert(coords_.end(), point.begin(), point.end());
    masses_.push_back(mass);
    symbols_.insert(symbols_.end(), word.begin(), word.end());
    total_mass_ += mass;
    index_.reset();
}

Vec DiscreteMeasure::point_vec(std::size_t i) const {
    const auto p = point(i);
    return Eigen::Map<const Vec>(p.data(), static_cast<Eigen::Index>(p.size()));
}

Word DiscreteMeasure::word(std::size_t i) const {
    const auto s = word_symbols(i);
    return Word(std::vector<Symbol>(s.begin(), s.end()));
}

std::pair<Vec, Vec> DiscreteMeasure::bounding_box() const {
    Vec lo = Vec::Constant(dim_, std::numeric_limits<double>::infinity());
    Vec hi = Vec::Constant(dim_, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < size(); ++i) {
        const auto p = point(i);
        for (int k = 0; k < dim_; ++k) {
            lo[k] = std::min(lo[k], p[static_cast<std::size_t>(k)]);
            hi[k] = std::max(hi[k], p[static_cast<std::size_t>(k)]);
        }
    }
    if (empty()) {
        lo.setZero();
        hi.setZero();
    }
    return {lo, hi};
}

double DiscreteMeasure::diameter_bound() const {
    const auto [lo, hi] = bounding_box();
    return (hi - lo).norm();
}

void DiscreteMeasure::build_index(double cell_size) { index_ = std::make_shared<const BallIndex>(*this, cell_size); }

std::shared_ptr<const BallIndex> DiscreteMeasure::index_or_build() const {
    if (index_) return index_;
    const double diam = diameter_bound();
    const double n = std::max<double>(1.0, std::pow(static_cast<double>(std::max<std::size_t>(size(), 1)),
                                                    1.0 / static_cast<double>(dim_)));
    return std::make_shared<const BallIndex>(*this, diam > 0 ? diam / n : 1.0);
}

DiscreteMeasure DiscreteMeasure::scaled(double factor) const {
    if (!(factor >= 0.0)) throw Error(ErrorKind::InvalidArgument, "mass scale factor must be non-negative");
    DiscreteMeasure out = *this;
    out.index_.reset();
    out.total_mass_ = 0.0;
    for (double& m : out.masses_) {
        m *= factor;
        out.total_mass_ += m;
    }
    return out;
}

DiscreteMeasure DiscreteMeasure::with_points(std::vector<double> coords, int dim) const {
    if (coords.size() != size() * static_cast<std::size_t>(dim))
        throw Error(ErrorKind::DimensionMismatch, "replacement coordinates do not match the atom count");
    DiscreteMeasure out(dim);
    out.coords_ = std::move(coords);
    out.masses_ = masses_;
    out.symbols_ = symbols_;
    out.word_length_ = word_length_;
    out.total_mass_ = total_mass_;
    return out;
}

DiscreteMeasure DiscreteMeasure::subset(std::span<const std::size_t> atoms) const {
    DiscreteMeasure out(dim_);
    out.reserve(atoms.size(), word_length_);
    for (std::size_t i : atoms) {
        if (has_words())
            out.add(point(i), masses_[i], word_symbols(i));
        else
            out.add(point(i), masses_[i]);
    }
    return out;
}

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return s;
}

// ---------------------------------------------------------------------------
// BallIndex

struct BallIndex::Sink {
    enum class Mode { Mass, Label, Atoms } mode = Mode::Mass;
    Symbol label = 0;
    double total = 0.0;
    std::vector<std::size_t>* atoms = nullptr;
};

BallIndex::BallIndex(const DiscreteMeasure& measure, double cell_size) : dim_(measure.dim()), cell_(cell_size) {
    if (!(cell_size > 0.0)) throw Error(ErrorKind::InvalidArgument, "index cell size must be positive");
    const std::size_t n = measure.size();
    const auto d = static_cast<std::size_t>(dim_);
    const auto [lo, hi] = measure.bounding_box();
    origin_.assign(lo.data(), lo.data() + d);
    const double max_extent = (hi - lo).maxCoeff();
    cell_ = std::max(cell_, max_extent / static_cast<double>(1 << 30));
    extent_.resize(d);
    for (std::size_t k = 0; k < d; ++k)
        extent_[k] = static_cast<std::int32_t>(std::floor((hi[static_cast<Eigen::Index>(k)] - lo[static_cast<Eigen::Index>(k)]) / cell_)) + 1;

    std::vector<std::int32_t> cells(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = measure.point(i);
        for (std::size_t k = 0; k < d; ++k) {
            auto c = static_cast<std::int32_t>(std::floor((p[k] - origin_[k]) / cell_));
            cells[i * d + k] = std::clamp<std::int32_t>(c, 0, extent_[k] - 1);
        }
    }
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (dim_ == 1) {
        std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
            return measure.point(a)[0] < measure.point(b)[0];
        });
    } else {
        std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
            return std::lexicographical_compare(cells.begin() + static_cast<std::ptrdiff_t>(a * d),
                                                cells.begin() + static_cast<std::ptrdiff_t>((a + 1) * d),
                                                cells.begin() + static_cast<std::ptrdiff_t>(b * d),
                                                cells.begin() + static_cast<std::ptrdiff_t>((b + 1) * d));
        });
    }

    coords_.resize(n * d);
    masses_.resize(n);
    prefix_.assign(n + 1, 0.0);
    const bool labelled = measure.has_words();
    Symbol max_label = 0;
    if (labelled) {
        labels_.resize(n);
        for (std::size_t i = 0; i < n; ++i) max_label = std::max(max_label, measure.label(i));
        label_prefix_.assign(static_cast<std::size_t>(max_label) + 1, std::vector<double>(n + 1, 0.0));
    }
    for (std::size_t pos = 0; pos < n; ++pos) {
        const std::size_t i = order_[pos];
        const auto p = measure.point(i);
        std::copy(p.begin(), p.end(), coords_.begin() + static_cast<std::ptrdiff_t>(pos * d));
        masses_[pos] = measure.mass(i);
        prefix_[pos + 1] = prefix_[pos] + masses_[pos];
        if (labelled) {
            labels_[pos] = measure.label(i);
            for (std::size_t l = 0; l < label_prefix_.size(); ++l)
                label_prefix_[l][pos + 1] = label_prefix_[l][pos] + (labels_[pos] == l ? masses_[pos] : 0.0);
        }
    }

    if (dim_ >= 2) {
        for (std::size_t pos = 0; pos < n; ++pos) {
            const std::int32_t* c = &cells[order_[pos] * d];
            const bool fresh =
                cell_begin_.empty() ||
                !std::equal(c, c + d, cell_coords_.end() - static_cast<std::ptrdiff_t>(d));
            if (fresh) {
                cell_coords_.insert(cell_coords_.end(), c, c + d);
                cell_begin_.push_back(pos);
            }
        }
        cell_begin_.push_back(n);
    }
}

void BallIndex::query(std::span<const double> x, double r, Sink& sink) const {
    if (x.size() != static_cast<std::size_t>(dim_))
        throw Error(ErrorKind::DimensionMismatch, "query point dimension does not match the index");
    if (masses_.empty() || !(r >= 0.0)) return;
    if (dim_ == 1)
        query_line(x, r, sink);
    else
        query_grid(x, r, sink);
}

namespace {

inline void take_range(const std::vector<double>& prefix, const std::vector<std::vector<double>>& label_prefix,
                       const std::vector<std::size_t>& order, std::size_t b, std::size_t e, auto& sink) {
    using Mode = std::remove_reference_t<decltype(sink)>::Mode;
    if (b >= e) return;
    switch (sink.mode) {
        case Mode::Mass: sink.total += prefix[e] - prefix[b]; break;
        case Mode::Label:
            if (sink.label < label_prefix.size()) sink.total += label_prefix[sink.label][e] - label_prefix[sink.label][b];
            break;
        case Mode::Atoms:
            for (std::size_t i = b; i < e; ++i) sink.atoms->push_back(order[i]);
            break;
    }
}

}  // namespace

void BallIndex::query_line(std::span<const double> x, double r, Sink& sink) const {
    const double c = x[0];
    const double r2 = r * r;
    const auto first = std::partition_point(coords_.begin(), coords_.end(), [&](double a) {
        const double dd = a - c;
        return a < c && dd * dd > r2;
    });
    const auto last = std::partition_point(first, coords_.end(), [&](double a) {
        const double dd = a - c;
        return a <= c || dd * dd <= r2;
    });
    const auto b = static_cast<std::size_t>(first - coords_.begin());
    const auto e = static_cast<std::size_t>(last - coords_.begin());
    if (sink.mode == Sink::Mode::Label && labels_.empty()) {
        if (sink.label == 0) sink.total += prefix_[e] - prefix_[b];
        return;
    }
    take_range(prefix_, label_prefix_, order_, b, e, sink);
}

std::size_t BallIndex::cell_lower(std::span<const std::int32_t> prefix, std::int32_t last) const {
    const auto d = static_cast<std::size_t>(dim_);
    std::size_t lo = 0, hi = cell_begin_.size() - 1;
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        const std::int32_t* c = &cell_coords_[mid * d];
        bool less = false;  // cell(mid) < key
        std::size_t k = 0;
        for (; k + 1 < d; ++k) {
            if (c[k] != prefix[k]) {
                less = c[k] < prefix[k];
                break;
            }
        }
        if (k + 1 == d) less = c[d - 1] < last;
        if (less)
            lo = mid + 1;
        else
            hi = mid;
    }
    return lo;
}

void BallIndex::query_grid(std::span<const double> x, double r, Sink& sink) const {
    const auto d = static_cast<std::size_t>(dim_);
    const double r2 = r * r;
    // Cells are widened by `margin` in every geometric test so atoms whose
    // cell assignment rounded across a boundary are still handled exactly.
    const double margin = std::max(1e-7 * cell_, 1e-12 * r);
    const bool no_labels = labels_.empty();

    auto check_atoms = [&](std::size_t cell_lo, std::size_t cell_hi) {
        for (std::size_t pos = cell_begin_[cell_lo]; pos < cell_begin_[cell_hi]; ++pos) {
            const std::span<const double> p(coords_.data() + pos * d, d);
            if (squared_distance(p, x) > r2) continue;
            switch (sink.mode) {
                case Sink::Mode::Mass: sink.total += masses_[pos]; break;
                case Sink::Mode::Label:
                    if ((no_labels && sink.label == 0) || (!no_labels && labels_[pos] == sink.label))
                        sink.total += masses_[pos];
                    break;
                case Sink::Mode::Atoms: sink.atoms->push_back(order_[pos]); break;
            }
        }
    };
    auto take_cells = [&](std::size_t cell_lo, std::size_t cell_hi) {
        if (cell_lo >= cell_hi) return;
        const std::size_t b = cell_begin_[cell_lo], e = cell_begin_[cell_hi];
        if (sink.mode == Sink::Mode::Label && no_labels) {
            if (sink.label == 0) sink.total += prefix_[e] - prefix_[b];
            return;
        }
        take_range(prefix_, label_prefix_, order_, b, e, sink);
    };
    auto axis_range = [&](std::size_t k, double reach, std::int32_t& lo, std::int32_t& hi) {
        const double a = std::floor((x[k] - reach - margin - origin_[k]) / cell_);
        const double b = std::floor((x[k] + reach + margin - origin_[k]) / cell_);
        lo = static_cast<std::int32_t>(std::clamp(a, -1.0, static_cast<double>(extent_[k])));
        hi = static_cast<std::int32_t>(std::clamp(b, -1.0, static_cast<double>(extent_[k])));
        lo = std::max<std::int32_t>(lo, 0);
        hi = std::min<std::int32_t>(hi, extent_[k] - 1);
    };

    std::vector<std::int32_t> prefix(d - 1);
    std::function<void(std::size_t, double, double)> recurse = [&](std::size_t k, double min2, double max2) {
        if (k + 1 == d) {
            const double budget = r2 - min2;
            if (budget < 0) return;
            std::int32_t lo, hi;
            axis_range(k, std::sqrt(budget), lo, hi);
            if (lo > hi) return;
            const std::size_t all_lo = cell_lower(prefix, lo);
            const std::size_t all_hi = cell_lower(prefix, hi + 1);
            if (all_lo == all_hi) return;
            const double inner = r2 - max2;
            if (inner >= 0) {
                const double t = std::sqrt(inner);
                const double a = std::ceil((x[k] - t + margin - origin_[k]) / cell_);
                const double b = std::floor((x[k] + t - margin - origin_[k]) / cell_) - 1.0;
                const auto ia = static_cast<std::int32_t>(std::clamp(a, static_cast<double>(lo), static_cast<double>(hi) + 1));
                const auto ib = static_cast<std::int32_t>(std::clamp(b, static_cast<double>(lo) - 1, static_cast<double>(hi)));
                if (ia <= ib) {
                    const std::size_t in_lo = cell_lower(prefix, ia);
                    const std::size_t in_hi = cell_lower(prefix, ib + 1);
                    check_atoms(all_lo, in_lo);
                    take_cells(in_lo, in_hi);
                    check_atoms(in_hi, all_hi);
                    return;
                }
            }
            check_atoms(all_lo, all_hi);
            return;
        }
        std::int32_t lo, hi;
        axis_range(k, std::sqrt(std::max(0.0, r2 - min2)), lo, hi);
        for (std::int32_t c = lo; c <= hi; ++c) {
            const double left = origin_[k] + c * cell_ - margin;
            const double right = origin_[k] + (c + 1) * cell_ + margin;
            double near = 0.0;
            if (x[k] < left)
                near = left - x[k];
            else if (x[k] > right)
                near = x[k] - right;
            const double far = std::max(std::abs(x[k] - left), std::abs(x[k] - right));
            const double next_min = min2 + near * near;
            if (next_min > r2) continue;
            prefix[k] = c;
            recurse(k + 1, next_min, max2 + far * far);
        }
    };
    recurse(0, 0.0, 0.0);
}

double BallIndex::mass(std::span<const double> x, double r) const {
    Sink sink;
    query(x, r, sink);
    return sink.total;
}

double BallIndex::mass_with_label(std::span<const double> x, double r, Symbol label) const {
    Sink sink;
    sink.mode = Sink::Mode::Label;
    sink.label = label;
    query(x, r, sink);
    return sink.total;
}

std::vector<std::size_t> BallIndex::atoms_in_ball(std::span<const double> x, double r) const {
    std::vector<std::size_t> atoms;
    Sink sink;
    sink.mode = Sink::Mode::Atoms;
    sink.atoms = &atoms;
    query(x, r, sink);
    std::sort(atoms.begin(), atoms.end());
    return atoms;
}

double ball_mass(const DiscreteMeasure& nu, std::span<const double> x, double r) {
    if (!(r > 0.0)) throw Error(ErrorKind::InvalidArgument, "ball radius must be positive");
    return nu.index_or_build()->mass(x, r);
}

double ball_mass_linear(const DiscreteMeasure& nu, std::span<const double> x, double r) {
    const double r2 = r * r;
    double total = 0.0;
    for (std::size_t i = 0; i < nu.size(); ++i) {
        if (squared_distance(nu.point(i), x) <= r2) total += nu.mass(i);
    }
    return total;
}

// ---------------------------------------------------------------------------
// Sampling and schedules

AtomSampler::AtomSampler(const DiscreteMeasure& nu) : cumulative_(nu.size()) {
    double acc = 0.0;
    for (std::size_t i = 0; i < nu.size(); ++i) {
        acc += nu.mass(i);
        cumulative_[i] = acc;
    }
    if (!(acc > 0.0)) throw Error(ErrorKind::Extinct, "cannot sample from a zero measure");
}

std::size_t AtomSampler::sample(double uniform01) const {
    const double target = uniform01 * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
}

std::vector<std::size_t> sample_atoms(const DiscreteMeasure& nu, std::size_t count, std::uint64_t seed) {
    const AtomSampler sampler(nu);
    KeyedStream stream(seed, derive_seed(seed, "atom-sample", 0));
    std::vector<std::size_t> out(count);
    for (auto& idx : out) idx = sampler.sample(stream.uniform());
    return out;
}

std::vector<double> radius_schedule(double r_max, double r_min, double factor) {
    if (!(r_max > 0.0) || !(r_min > 0.0) || !(factor > 0.0 && factor < 1.0))
        throw Error(ErrorKind::InvalidArgument, "radius schedule needs r_max, r_min > 0 and factor in (0, 1)");
    std::vector<double> radii;
    for (double r = r_max; r >= r_min * (1 - 1e-12); r *= factor) radii.push_back(r);
    return radii;
}

std::vector<double> default_radii(const IfsSpec& ifs, int level) {
    const double R = ifs.radius_bound();
    return radius_schedule(R / 4.0, 8.0 * R * std::pow(ifs.rho(), level));
}

// ---------------------------------------------------------------------------
// Entropy and dimension estimators

ScalingEntropy scaling_entropy(const DiscreteMeasure& nu, double r, std::size_t samples, std::uint64_t seed) {
    if (!(r > 0.0)) throw Error(ErrorKind::InvalidArgument, "scaling entropy radius must be positive");
    const double total = nu.total_mass();
    if (!(total > 0.0)) throw Error(ErrorKind::Extinct, "scaling entropy of a zero measure");
    const auto index = nu.index_or_build();
    ScalingEntropy out;
    if (nu.size() <= samples) {
        double h = 0.0;
        for (std::size_t i = 0; i < nu.size(); ++i) {
            if (nu.mass(i) <= 0.0) continue;
            const double b = index->mass(nu.point(i), r);
            h -= nu.mass(i) / total * std::log(std::min(1.0, b / total));
        }
        out.value = std::max(0.0, h);
        out.exact = true;
        return out;
    }
    const auto picks = sample_atoms(nu, samples, derive_seed(seed, "scaling-entropy", 0));
    std::vector<double> values(picks.size());
    for (std::size_t j = 0; j < picks.size(); ++j) {
        const double b = index->mass(nu.point(picks[j]), r);
        values[j] = -std::log(std::min(1.0, b / total));
    }
    const auto mean = sample_mean(values);
    out.value = std::max(0.0, mean.mean);
    out.standard_error = mean.standard_error;
    return out;
}

EntropyCurve entropy_curve(const DiscreteMeasure& nu, std::span<const double> radii, const EntropyOptions& options) {
    EntropyCurve curve(radii.size());
    parallel_for(radii.size(), [&](std::size_t i) {
        const auto h = scaling_entropy(nu, radii[i], options.samples, derive_seed(options.seed, "entropy-radius", i));
        curve[i] = {radii[i], h.value, h.standard_error};
    });
    return curve;
}

DimensionEstimate entropy_dimension(const DiscreteMeasure& nu, std::span<const double> radii,
                                    const EntropyOptions& options) {
    if (radii.size() < 4) throw Error(ErrorKind::InsufficientRange, "entropy dimension needs at least 4 radii");
    const auto [rmin, rmax] = std::minmax_element(radii.begin(), radii.end());
    if (*rmax / *rmin < 100.0 * (1 - 1e-12))
        throw Error(ErrorKind::InsufficientRange, "entropy dimension needs radii spanning two decades");
    const auto curve = entropy_curve(nu, radii, options);
    std::vector<double> xs, ys;
    for (const auto& p : curve) {
        xs.push_back(std::log(1.0 / p.r));
        ys.push_back(p.entropy);
    }
    const auto fit = fit_line(xs, ys);
    DimensionEstimate est;
    est.value = fit.slope;
    est.standard_error = fit.slope_stderr;
    est.regression_r2 = fit.r2;
    est.radii_used.assign(radii.begin(), radii.end());
    est.sample_count = std::min(nu.size(), options.samples);
    return est;
}

DimensionEstimate local_dimension(const DiscreteMeasure& nu, std::span<const double> x, std::span<const double> radii) {
    if (radii.empty()) throw Error(ErrorKind::InsufficientRange, "local dimension needs radii");
    const double total = nu.total_mass();
    const auto index = nu.index_or_build();
    const double r_max = *std::max_element(radii.begin(), radii.end());
    if (!(index->mass(x, r_max) > 0.0))
        throw Error(ErrorKind::EmptyNeighborhood, "no mass within the largest radius");

    const double full = total * (1 - 1e-12);
    std::vector<double> xs, ys, used;
    bool all_full = true;
    for (double r : radii) {
        const double b = index->mass(x, r);
        if (b < full) all_full = false;
        if (b > 0.0 && b < full) {
            xs.push_back(std::log(r));
            ys.push_back(std::log(b / total));
            used.push_back(r);
        }
    }
    DimensionEstimate est;
    est.sample_count = 1;
    if (all_full) {
        // Point-like at every probed scale.
        est.value = 0.0;
        est.regression_r2 = 1.0;
        est.radii_used.assign(radii.begin(), radii.end());
        return est;
    }
    if (xs.size() < 4) throw Error(ErrorKind::InsufficientRange, "fewer than 4 usable radii for local dimension");
    const auto fit = fit_line(xs, ys);
    est.value = fit.slope;
    est.standard_error = fit.slope_stderr;
    est.regression_r2 = fit.r2;
    est.radii_used = std::move(used);
    return est;
}

ExactnessReport exactness_diagnostic(const DiscreteMeasure& nu, std::span<const double> radii,
                                     const ExactnessOptions& options) {
    if (!(nu.total_mass() > 0.0)) throw Error(ErrorKind::Extinct, "exactness diagnostic of a zero measure");
    const auto picks = sample_atoms(nu, options.points, derive_seed(options.seed, "exactness", 0));
    const auto index = nu.index_or_build();
    DiscreteMeasure indexed = nu;
    if (!nu.index()) indexed.build_index(index->cell_size());

    std::vector<double> values(picks.size(), std::numeric_limits<double>::quiet_NaN());
    std::vector<double> r2s(picks.size(), 0.0);
    parallel_for(picks.size(), [&](std::size_t j) {
        try {
            const auto est = local_dimension(indexed, nu.point(picks[j]), radii);
            values[j] = est.value;
            r2s[j] = est.regression_r2;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::InsufficientRange && e.kind() != ErrorKind::EmptyNeighborhood) throw;
        }
    });

    ExactnessReport report;
    double r2_sum = 0.0;
    for (std::size_t j = 0; j < values.size(); ++j) {
        if (std::isnan(values[j])) {
            ++report.failures;
            continue;
        }
        report.values.push_back(values[j]);
        r2_sum += r2s[j];
    }
    if (report.values.empty())
        throw Error(ErrorKind::InsufficientRange, "no sample point produced a local dimension estimate");
    const auto mean = sample_mean(report.values);
    report.mean = mean.mean;
    report.standard_error = mean.standard_error;
    report.mean_r2 = r2_sum / static_cast<double>(report.values.size());
    std::vector<double> sorted = report.values;
    std::sort(sorted.begin(), sorted.end());
    report.median = quantile(sorted, 0.5);
    report.spread = quantile(sorted, 0.75) - quantile(sorted, 0.25);
    report.exact = report.spread < options.threshold;

    const std::size_t bins = std::max<std::size_t>(1, options.histogram_bins);
    report.histogram_lo = std::floor(sorted.front() * 10.0) / 10.0;
    report.histogram_hi = std::max(report.histogram_lo + 0.1, std::ceil(sorted.back() * 10.0) / 10.0);
    report.histogram.assign(bins, 0);
    const double width = (report.histogram_hi - report.histogram_lo) / static_cast<double>(bins);
    for (double v : sorted) {
        auto b = static_cast<std::size_t>((v - report.histogram_lo) / width);
        report.histogram[std::min(b, bins - 1)]++;
    }
    return report;
}

void write_entropy_curve_csv(std::ostream& out, const EntropyCurve& curve) {
    Table table({"r", "H_r", "stderr"});
    for (const auto& p : curve) table.row().add(p.r).add(p.entropy).add(p.standard_error);
    table.write(out);
}

void write_dimension_estimates_csv(std::ostream& out, std::span<const DimensionEstimate> estimates) {
    Table table({"value", "stderr", "r2", "n_samples"});
    for (const auto& e : estimates) table.row().add(e.value).add(e.standard_error).add(e.regression_r2).add(e.sample_count);
    table.write(out);
}

}  // namespace cascadelab

#include "cascadelab/projection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_set>

#include "cascadelab/error.hpp"
#include "cascadelab/parallel.hpp"
#include "cascadelab/regression.hpp"
#include "cascadelab/rng.hpp"
#include "cascadelab/table.hpp"

namespace cascadelab {

ProjectionFrame::ProjectionFrame(Mat rows) : rows_(std::move(rows)) {
    const auto k = rows_.rows(), d = rows_.cols();
    if (k < 1 || k >= d) throw Error(ErrorKind::DimensionMismatch, "projection frame needs 1 <= k < d");
    const double defect = (rows_ * rows_.transpose() - Mat::Identity(k, k)).cwiseAbs().maxCoeff();
    if (defect > 1e-12) throw Error(ErrorKind::InvalidArgument, "projection frame rows are not orthonormal");
}

ProjectionFrame ProjectionFrame::angle(double theta) {
    Mat rows(1, 2);
    rows << std::cos(theta), std::sin(theta);
    ProjectionFrame frame(rows);
    frame.theta_ = theta;
    return frame;
}

ProjectionFrame ProjectionFrame::coordinate(int dim, std::vector<int> axes) {
    Mat rows = Mat::Zero(static_cast<Eigen::Index>(axes.size()), dim);
    for (std::size_t i = 0; i < axes.size(); ++i) {
        if (axes[i] < 0 || axes[i] >= dim) throw Error(ErrorKind::DimensionMismatch, "coordinate axis out of range");
        rows(static_cast<Eigen::Index>(i), axes[i]) = 1.0;
    }
    ProjectionFrame frame(rows);
    if (dim == 2 && axes.size() == 1) frame.theta_ = axes[0] == 0 ? 0.0 : std::numbers::pi / 2;
    return frame;
}

ProjectionFrame ProjectionFrame::haar(int dim, int k, std::uint64_t seed, std::uint64_t index) {
    const Mat g = haar_rotation(dim, seed, index);
    if (k < 1 || k >= dim) throw Error(ErrorKind::DimensionMismatch, "projection frame needs 1 <= k < d");
    // Re-orthonormalize so the 1e-12 frame check holds after rounding.
    Mat rows = g.topRows(k);
    Eigen::HouseholderQR<Mat> qr(rows.transpose());
    Mat q = qr.householderQ() * Mat::Identity(dim, k);
    const Mat r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    for (int c = 0; c < k; ++c)
        if (r(c, c) < 0) q.col(c) *= -1.0;
    return ProjectionFrame(q.transpose());
}

std::vector<ProjectionFrame> angle_frames(std::size_t count) {
    std::vector<ProjectionFrame> frames;
    frames.reserve(count);
    for (std::size_t j = 0; j < count; ++j)
        frames.push_back(ProjectionFrame::angle(std::numbers::pi * static_cast<double>(j) / static_cast<double>(count)));
    return frames;
}

std::vector<ProjectionFrame> haar_frames(int dim, int k, std::size_t count, std::uint64_t seed) {
    std::vector<ProjectionFrame> frames;
    frames.reserve(count);
    for (std::size_t j = 0; j < count; ++j) frames.push_back(ProjectionFrame::haar(dim, k, seed, j));
    return frames;
}

DiscreteMeasure linear_image(const DiscreteMeasure& nu, const Mat& map) {
    if (map.cols() != nu.dim()) throw Error(ErrorKind::DimensionMismatch, "map width does not match the measure");
    const auto d = static_cast<std::size_t>(nu.dim());
    const auto k = static_cast<std::size_t>(map.rows());
    std::vector<double> coords(nu.size() * k);
    for (std::size_t i = 0; i < nu.size(); ++i) {
        const auto p = nu.point(i);
        for (std::size_t a = 0; a < k; ++a) {
            double s = 0.0;
            for (std::size_t b = 0; b < d; ++b)
                s += map(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) * p[b];
            coords[i * k + a] = s;
        }
    }
    return nu.with_points(std::move(coords), static_cast<int>(k));
}

DiscreteMeasure project_measure(const DiscreteMeasure& nu, const ProjectionFrame& frame) {
    if (frame.dim() != nu.dim())
        throw Error(ErrorKind::DimensionMismatch, "frame dimension " + std::to_string(frame.dim()) +
                                                      " does not match measure dimension " + std::to_string(nu.dim()));
    return linear_image(nu, frame.rows());
}

DiscreteMeasure rotate_measure(const DiscreteMeasure& nu, const Mat& rotation) {
    if (rotation.rows() != nu.dim() || rotation.cols() != nu.dim())
        throw Error(ErrorKind::DimensionMismatch, "rotation size does not match the measure");
    return linear_image(nu, rotation);
}

DiscreteMeasure indexed(DiscreteMeasure nu, double cell_size) {
    nu.build_index(cell_size);
    return nu;
}

namespace {

double min_radius(std::span<const double> radii) {
    if (radii.empty()) throw Error(ErrorKind::InsufficientRange, "radius schedule is empty");
    return *std::min_element(radii.begin(), radii.end());
}

}  // namespace

std::vector<ProfileRow> projected_dimension_profile(const DiscreteMeasure& nu, std::span<const ProjectionFrame> frames,
                                                    const ProfileOptions& options) {
    const double cell = min_radius(options.radii);
    std::vector<ProfileRow> rows(frames.size());
    // Frames run one after another; the diagnostic inside parallelizes over
    // sample points.
    for (std::size_t f = 0; f < frames.size(); ++f) {
        const auto image = indexed(project_measure(nu, frames[f]), cell);
        auto opts = options.exactness;
        opts.seed = derive_seed(options.exactness.seed, "profile-frame", f);
        const auto report = exactness_diagnostic(image, options.radii, opts);
        rows[f] = {f, frames[f].theta(), report.mean, report.standard_error, report.spread, report.mean_r2};
    }
    return rows;
}

MarstrandReport marstrand_check(std::span<const ProfileRow> profile, double alpha, int k, double tol) {
    if (profile.empty()) throw Error(ErrorKind::InvalidArgument, "marstrand check needs a nonempty profile");
    MarstrandReport report;
    report.target = std::min(static_cast<double>(k), alpha);
    std::size_t passed = 0;
    for (const auto& row : profile) {
        const bool ok = std::isinf(tol) || std::abs(row.value - report.target) <= tol;
        report.rows.push_back({row.frame, row.value, ok});
        if (ok) ++passed;
    }
    report.pass_fraction = static_cast<double>(passed) / static_cast<double>(profile.size());
    report.all_passed = passed == profile.size();
    return report;
}

DiscreteMeasure slice_measure(const DiscreteMeasure& nu, const ProjectionFrame& frame, const Vec& y, double width) {
    if (frame.dim() != nu.dim() || y.size() != frame.k())
        throw Error(ErrorKind::DimensionMismatch, "slice frame, measure and center dimensions disagree");
    if (!(width >= 0.0)) throw Error(ErrorKind::InvalidArgument, "slab width must be non-negative");
    const Mat& rows = frame.rows();
    const auto d = static_cast<std::size_t>(nu.dim());
    const double w2 = width * width;
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < nu.size(); ++i) {
        const auto p = nu.point(i);
        double dist2 = 0.0;
        for (Eigen::Index a = 0; a < rows.rows(); ++a) {
            double s = 0.0;
            for (std::size_t b = 0; b < d; ++b) s += rows(a, static_cast<Eigen::Index>(b)) * p[b];
            const double diff = s - y[a];
            dist2 += diff * diff;
        }
        if (dist2 <= w2 && nu.mass(i) > 0.0) keep.push_back(i);
    }
    const auto slab = nu.subset(keep);
    if (!(slab.total_mass() > 0.0)) throw Error(ErrorKind::EmptySlab, "no mass within the slab");
    return normalized(slab);
}

ConservationReport dimension_conservation_check(const DiscreteMeasure& nu, const ProjectionFrame& frame,
                                                 const ConservationOptions& options) {
    if (options.widths.empty()) throw Error(ErrorKind::InvalidArgument, "conservation check needs slab widths");
    if (options.slices == 0) throw Error(ErrorKind::InvalidArgument, "conservation check needs slices");
    const double cell = min_radius(options.radii);
    ConservationReport report;

    const auto source = indexed(nu, cell);
    auto opts = options.exactness;
    opts.seed = derive_seed(options.seed, "conservation-source", 0);
    const auto alpha = exactness_diagnostic(source, options.radii, opts);
    report.alpha = alpha.mean;
    report.alpha_se = alpha.standard_error;

    const auto image = indexed(project_measure(nu, frame), cell);
    opts.seed = derive_seed(options.seed, "conservation-image", 0);
    const auto beta = exactness_diagnostic(image, options.radii, opts);
    report.beta = beta.mean;
    report.beta_se = beta.standard_error;

    // Slice centers are shared across widths so the width schedule compares
    // like with like.
    const auto centers = sample_atoms(nu, options.slices, derive_seed(options.seed, "slice-centers", 0));
    for (std::size_t wi = 0; wi < options.widths.size(); ++wi) {
        const double width = options.widths[wi];
        std::vector<double> radii;
        for (double r : options.radii)
            if (r >= 2.0 * width) radii.push_back(r);
        std::vector<double> values(centers.size(), std::numeric_limits<double>::quiet_NaN());
        parallel_for(centers.size(), [&](std::size_t j) {
            const Vec y = frame.apply(nu.point_vec(centers[j]));
            try {
                const auto slice = indexed(slice_measure(nu, frame, y, width), cell);
                ExactnessOptions so = options.exactness;
                so.points = options.slice_points;
                so.seed = derive_seed(options.seed, "slice", wi * centers.size() + j);
                values[j] = exactness_diagnostic(slice, radii, so).mean;
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::InsufficientRange && e.kind() != ErrorKind::EmptySlab) throw;
            }
        });
        std::vector<double> ok;
        for (double v : values)
            if (!std::isnan(v)) ok.push_back(v);
        SliceWidthRow row;
        row.width = width;
        row.slices_used = ok.size();
        if (!ok.empty()) {
            const auto m = sample_mean(ok);
            row.mean = m.mean;
            row.standard_error = m.standard_error;
        } else {
            row.mean = std::numeric_limits<double>::quiet_NaN();
        }
        report.widths.push_back(row);
    }

    const auto& last = report.widths.back();
    if (last.slices_used == 0) throw Error(ErrorKind::InsufficientRange, "no slice produced a dimension estimate");
    report.gamma = last.mean;
    report.gamma_se = last.standard_error;
    if (report.widths.size() >= 2) {
        const auto& prev = report.widths[report.widths.size() - 2];
        report.stable = prev.slices_used > 0 && std::abs(prev.mean - last.mean) < options.stability;
    }
    report.residual = report.beta + report.gamma - report.alpha;
    report.combined_se =
        std::sqrt(report.alpha_se * report.alpha_se + report.beta_se * report.beta_se + report.gamma_se * report.gamma_se);
    return report;
}

EqValue e_q_entropy(const DiscreteMeasure& nu, const ProjectionFrame* frame, int q, const IfsSpec& ifs,
                    std::size_t samples, std::uint64_t seed) {
    if (q < 1) throw Error(ErrorKind::InvalidArgument, "q must be >= 1");
    const double r = std::pow(ifs.rho(), q);
    const auto image = frame ? indexed(project_measure(nu, *frame), r) : indexed(nu, r);
    const auto h = scaling_entropy(image, r, samples, seed);
    const double scale = static_cast<double>(q) * std::log(1.0 / ifs.rho());
    EqValue out;
    out.raw = h.value / scale;
    out.standard_error = h.standard_error / scale;
    const double k = frame ? frame->k() : nu.dim();
    out.value = std::clamp(out.raw, 0.0, k);
    out.clamped = out.value != out.raw;
    return out;
}

EqEstimate E_q_estimate(std::shared_ptr<const WeightModel> model, const IfsSpec& ifs, const ProjectionFrame& frame,
                        const RotationGroupInfo& group, int q, std::size_t replicas, std::uint64_t seed,
                        const EqOptions& options) {
    if (replicas == 0) throw Error(ErrorKind::InvalidArgument, "E_q needs at least one replica");
    if (group.kind == GroupKind::Undetermined && !options.assume_dense)
        throw Error(ErrorKind::UndeterminedGroup,
                    "rotation group could not be classified; assert density explicitly to sample SO(d)");
    std::optional<DiscreteMeasure> fixed;
    if (model->is_deterministic())
        fixed = normalized(cascade_measure(CascadeRealization(model, seed), ifs, options.level, options.tail));

    std::vector<double> values(replicas);
    std::vector<std::size_t> rejections(replicas, 0);
    std::vector<char> clamped(replicas, 0);
    parallel_for(replicas, [&](std::size_t j) {
        DiscreteMeasure nu(ifs.dim());
        if (fixed) {
            nu = *fixed;
        } else {
            auto sc = surviving_cascade(model, ifs, options.level, derive_seed(seed, "eq-replica", j), options.tail);
            rejections[j] = sc.rejections;
            nu = normalized(sc.measure);
        }
        const Mat g = sample_group_rotation(group, derive_seed(seed, "eq-rotation", 0), j, options.assume_dense);
        const auto rotated = rotate_measure(nu, g);
        const auto e = e_q_entropy(rotated, &frame, q, ifs, options.samples, derive_seed(seed, "eq-entropy", j));
        values[j] = e.value;
        clamped[j] = e.clamped;
    });
    const auto m = sample_mean(values);
    EqEstimate out;
    out.value = m.mean;
    out.standard_error = m.standard_error;
    out.replicas = replicas;
    for (std::size_t j = 0; j < replicas; ++j) {
        out.rejections += rejections[j];
        out.clamped += clamped[j] ? 1 : 0;
    }
    return out;
}

double jacobian_consistency(const SmoothMap& h, std::span<const Vec> points, double step) {
    double worst = 0.0;
    for (const auto& x : points) {
        const Mat jac = h.jacobian(x);
        Mat fd(jac.rows(), jac.cols());
        for (Eigen::Index c = 0; c < x.size(); ++c) {
            Vec xp = x, xm = x;
            xp[c] += step;
            xm[c] -= step;
            fd.col(c) = (h.eval(xp) - h.eval(xm)) / (2.0 * step);
        }
        const double scale = std::max(jac.norm(), 1e-12);
        worst = std::max(worst, (jac - fd).norm() / scale);
    }
    return worst;
}

C1Image c1_image_measure(const DiscreteMeasure& nu, const SmoothMap& h, std::size_t checks, std::uint64_t seed) {
    std::vector<std::size_t> probe;
    if (nu.size() <= checks) {
        for (std::size_t i = 0; i < nu.size(); ++i)
            if (nu.mass(i) > 0.0) probe.push_back(i);
    } else {
        probe = sample_atoms(nu, checks, derive_seed(seed, "c1-check", 0));
    }
    double worst = std::numeric_limits<double>::infinity();
    std::size_t worst_atom = 0;
    for (std::size_t i : probe) {
        const double s = smallest_singular_value(h.jacobian(nu.point_vec(i)));
        if (s < worst) {
            worst = s;
            worst_atom = i;
        }
    }
    if (worst <= 1e-6) {
        const Vec p = nu.point_vec(worst_atom);
        std::string where;
        for (Eigen::Index a = 0; a < p.size(); ++a) where += (a ? ", " : "") + format_number(p[a]);
        throw Error(ErrorKind::SingularPointDetected,
                    "smallest singular value " + format_number(worst) + " at (" + where + ")");
    }
    const auto k = static_cast<std::size_t>(h.out_dim);
    std::vector<double> coords(nu.size() * k);
    for (std::size_t i = 0; i < nu.size(); ++i) {
        const Vec y = h.eval(nu.point_vec(i));
        if (static_cast<std::size_t>(y.size()) != k) throw Error(ErrorKind::DimensionMismatch, "map output size mismatch");
        for (std::size_t a = 0; a < k; ++a) coords[i * k + a] = y[static_cast<Eigen::Index>(a)];
    }
    return {nu.with_points(std::move(coords), h.out_dim), worst};
}

DiscreteMeasure pinned_distance_measure(const DiscreteMeasure& nu, const Vec& a, const PinnedRestriction& restriction) {
    if (a.size() != nu.dim()) throw Error(ErrorKind::DimensionMismatch, "pin dimension does not match the measure");
    if (restriction.cylinder && !nu.has_words())
        throw Error(ErrorKind::InvalidArgument, "cylinder restriction needs atoms with words");
    const std::span<const double> pin(a.data(), static_cast<std::size_t>(a.size()));
    const double ex2 = restriction.exclusion_radius * restriction.exclusion_radius;
    std::vector<double> coords;
    DiscreteMeasure out(1);
    for (std::size_t i = 0; i < nu.size(); ++i) {
        if (nu.mass(i) <= 0.0) continue;
        if (restriction.cylinder) {
            const auto& c = restriction.cylinder->symbols();
            const auto w = nu.word_symbols(i);
            if (c.size() > w.size() || !std::equal(c.begin(), c.end(), w.begin())) continue;
        }
        const double d2 = squared_distance(nu.point(i), pin);
        if (restriction.exclusion_radius > 0.0 && d2 <= ex2) continue;
        const double dist = std::sqrt(d2);
        out.add(std::span<const double>(&dist, 1), nu.mass(i));
    }
    if (!(out.total_mass() > 0.0)) throw Error(ErrorKind::ExclusionEmpty, "restriction leaves no mass");
    return normalized(out);
}

std::vector<double> distance_set_cloud(std::span<const Vec> points, std::size_t pairs, std::uint64_t seed) {
    const std::size_t n = points.size();
    if (n < 2) throw Error(ErrorKind::InvalidArgument, "distance set needs at least two points");
    std::vector<double> out;
    if (n <= 2000) {
        out.reserve(n * (n - 1) / 2);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) out.push_back((points[i] - points[j]).norm());
        return out;
    }
    KeyedStream stream(seed, derive_seed(seed, "distance-pairs", 0));
    out.reserve(pairs);
    for (std::size_t k = 0; k < pairs; ++k) {
        const auto i = stream.below(n);
        auto j = stream.below(n - 1);
        if (j >= i) ++j;
        out.push_back((points[i] - points[j]).norm());
    }
    return out;
}

namespace {

struct CellHash {
    std::size_t operator()(const std::vector<std::int64_t>& c) const noexcept {
        std::uint64_t h = 0x9E3779B97F4A7C15ULL;
        for (auto v : c) h = splitmix64(h ^ static_cast<std::uint64_t>(v));
        return static_cast<std::size_t>(h);
    }
};

DimensionEstimate box_fit(std::size_t n, int dim, const std::function<double(std::size_t, int)>& coord,
                          std::span<const double> scales) {
    if (scales.size() < 4) throw Error(ErrorKind::InsufficientRange, "box dimension needs at least 4 scales");
    if (n == 0) throw Error(ErrorKind::InvalidArgument, "box dimension needs points");
    std::vector<double> xs, ys;
    for (double s : scales) {
        if (!(s > 0.0)) throw Error(ErrorKind::InvalidArgument, "box scales must be positive");
        std::unordered_set<std::vector<std::int64_t>, CellHash> boxes;
        std::vector<std::int64_t> cell(static_cast<std::size_t>(dim));
        for (std::size_t i = 0; i < n; ++i) {
            for (int a = 0; a < dim; ++a)
                cell[static_cast<std::size_t>(a)] = static_cast<std::int64_t>(std::floor(coord(i, a) / s));
            boxes.insert(cell);
        }
        xs.push_back(std::log(1.0 / s));
        ys.push_back(std::log(static_cast<double>(boxes.size())));
    }
    const auto fit = fit_line(xs, ys);
    DimensionEstimate est;
    est.value = fit.slope;
    est.standard_error = fit.slope_stderr;
    est.regression_r2 = fit.r2;
    est.radii_used.assign(scales.begin(), scales.end());
    est.sample_count = n;
    return est;
}

}  // namespace

DimensionEstimate box_dimension(std::span<const Vec> points, std::span<const double> scales) {
    const int dim = points.empty() ? 1 : static_cast<int>(points.front().size());
    return box_fit(points.size(), dim, [&](std::size_t i, int a) { return points[i][a]; }, scales);
}

DimensionEstimate box_dimension(std::span<const double> values, std::span<const double> scales) {
    return box_fit(values.size(), 1, [&](std::size_t i, int) { return values[i]; }, scales);
}

std::vector<Vec> atom_points(const DiscreteMeasure& nu) {
    std::vector<Vec> out;
    out.reserve(nu.size());
    for (std::size_t i = 0; i < nu.size(); ++i) out.push_back(nu.point_vec(i));
    return out;
}

}  // namespace cascadelab

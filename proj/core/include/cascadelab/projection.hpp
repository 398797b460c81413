#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "cascadelab/cascade.hpp"
#include "cascadelab/ifs.hpp"
#include "cascadelab/linalg.hpp"
#include "cascadelab/measure.hpp"
#include "cascadelab/rotation.hpp"

namespace cascadelab {

// Orthogonal projection R^d -> R^k given by k orthonormal rows.
class ProjectionFrame {
public:
    explicit ProjectionFrame(Mat rows);

    // Planar projection onto the line at angle theta.
    static ProjectionFrame angle(double theta);
    static ProjectionFrame coordinate(int dim, std::vector<int> axes);
    // First k rows of a Haar rotation.
    static ProjectionFrame haar(int dim, int k, std::uint64_t seed, std::uint64_t index);

    [[nodiscard]] int dim() const noexcept { return static_cast<int>(rows_.cols()); }
    [[nodiscard]] int k() const noexcept { return static_cast<int>(rows_.rows()); }
    [[nodiscard]] const Mat& rows() const noexcept { return rows_; }
    [[nodiscard]] Vec apply(const Vec& x) const { return rows_ * x; }
    // Angle for planar frames built by angle(); nullopt otherwise.
    [[nodiscard]] std::optional<double> theta() const noexcept { return theta_; }

private:
    Mat rows_;
    std::optional<double> theta_;
};

// count angles evenly spaced on [0, pi).
std::vector<ProjectionFrame> angle_frames(std::size_t count);
std::vector<ProjectionFrame> haar_frames(int dim, int k, std::size_t count, std::uint64_t seed);

// Pushforward under x -> L x (L is k x d). Masses and words are kept.
DiscreteMeasure linear_image(const DiscreteMeasure& nu, const Mat& map);
DiscreteMeasure project_measure(const DiscreteMeasure& nu, const ProjectionFrame& frame);
DiscreteMeasure rotate_measure(const DiscreteMeasure& nu, const Mat& rotation);

// Copy of nu with its ball index built at the given cell size.
DiscreteMeasure indexed(DiscreteMeasure nu, double cell_size);

struct ProfileOptions {
    std::vector<double> radii;
    ExactnessOptions exactness;
};

struct ProfileRow {
    std::size_t frame = 0;
    std::optional<double> theta;
    double value = 0.0;
    double standard_error = 0.0;
    double spread = 0.0;
    double r2 = 0.0;
};

// Exactness diagnostic of every projected measure, in frame order.
std::vector<ProfileRow> projected_dimension_profile(const DiscreteMeasure& nu, std::span<const ProjectionFrame> frames,
                                                    const ProfileOptions& options);

struct MarstrandRow {
    std::size_t frame = 0;
    double value = 0.0;
    bool passed = false;
};

struct MarstrandReport {
    double target = 0.0;  // min(k, alpha)
    std::vector<MarstrandRow> rows;
    double pass_fraction = 0.0;
    bool all_passed = false;
};

MarstrandReport marstrand_check(std::span<const ProfileRow> profile, double alpha, int k, double tol);

// Restriction of nu to {x : |pi x - y| <= width}, normalized. Atoms keep
// their source coordinates.
DiscreteMeasure slice_measure(const DiscreteMeasure& nu, const ProjectionFrame& frame, const Vec& y, double width);

struct ConservationOptions {
    std::size_t slices = 24;
    std::vector<double> widths;  // decreasing
    std::vector<double> radii;
    ExactnessOptions exactness;
    // Points per slice for the slice exactness diagnostic.
    std::size_t slice_points = 64;
    double stability = 0.05;
    std::uint64_t seed = 0;
};

struct SliceWidthRow {
    double width = 0.0;
    double mean = 0.0;
    double standard_error = 0.0;
    std::size_t slices_used = 0;
};

struct ConservationReport {
    double alpha = 0.0, alpha_se = 0.0;
    double beta = 0.0, beta_se = 0.0;
    double gamma = 0.0, gamma_se = 0.0;
    double residual = 0.0;
    double combined_se = 0.0;
    // Slice estimate varied by less than the stability threshold across the
    // last two widths.
    bool stable = false;
    std::vector<SliceWidthRow> widths;
};

ConservationReport dimension_conservation_check(const DiscreteMeasure& nu, const ProjectionFrame& frame,
                                                 const ConservationOptions& options);

struct EqValue {
    double value = 0.0;
    double raw = 0.0;
    double standard_error = 0.0;
    bool clamped = false;
};

// H at radius rho^q of the projected measure over q log(1/rho). An empty
// frame means no projection.
EqValue e_q_entropy(const DiscreteMeasure& nu, const ProjectionFrame* frame, int q, const IfsSpec& ifs,
                    std::size_t samples = 4096, std::uint64_t seed = 0);

struct EqOptions {
    int level = 10;
    std::size_t samples = 4096;
    bool assume_dense = false;
    TailPolicy tail;
};

struct EqEstimate {
    double value = 0.0;
    double standard_error = 0.0;
    std::size_t replicas = 0;
    std::size_t rejections = 0;
    std::size_t clamped = 0;
};

// Average of e_q(pi, g Phi mu) over cascade replicas conditioned on survival
// and rotations drawn from the Haar measure of the classified group.
EqEstimate E_q_estimate(std::shared_ptr<const WeightModel> model, const IfsSpec& ifs, const ProjectionFrame& frame,
                        const RotationGroupInfo& group, int q, std::size_t replicas, std::uint64_t seed,
                        const EqOptions& options = {});

struct SmoothMap {
    int out_dim = 1;
    std::function<Vec(const Vec&)> eval;
    std::function<Mat(const Vec&)> jacobian;
};

// Largest relative deviation between the jacobian and central differences.
double jacobian_consistency(const SmoothMap& h, std::span<const Vec> points, double step = 1e-6);

struct C1Image {
    DiscreteMeasure measure;
    double min_singular_value = 0.0;
};

// Pushforward under h after checking that D_x h has smallest singular value
// above 1e-6 at `checks` mass-weighted support points.
C1Image c1_image_measure(const DiscreteMeasure& nu, const SmoothMap& h, std::size_t checks = 1024,
                         std::uint64_t seed = 0);

struct PinnedRestriction {
    // Keep only atoms inside this cylinder, when set.
    std::optional<Word> cylinder;
    // Drop atoms within this distance of the pin.
    double exclusion_radius = 0.0;
};

// Normalized pushforward of the restricted measure under x -> |x - a|.
DiscreteMeasure pinned_distance_measure(const DiscreteMeasure& nu, const Vec& a, const PinnedRestriction& restriction);

// All pairwise distances when there are at most 2000 points, otherwise
// `pairs` sampled pairs of distinct points.
std::vector<double> distance_set_cloud(std::span<const Vec> points, std::size_t pairs, std::uint64_t seed);

// Slope of log(occupied boxes) against log(1/scale).
DimensionEstimate box_dimension(std::span<const Vec> points, std::span<const double> scales);
DimensionEstimate box_dimension(std::span<const double> values, std::span<const double> scales);

std::vector<Vec> atom_points(const DiscreteMeasure& nu);

}  // namespace cascadelab

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "cascadelab/ifs.hpp"
#include "cascadelab/linalg.hpp"

namespace cascadelab {

class BallIndex;

// Weighted atom cloud in R^dim. Atoms may carry the symbolic word that
// produced them (all of one length); the first symbol is the atom's label.
class DiscreteMeasure {
public:
    explicit DiscreteMeasure(int dim = 1);
    DiscreteMeasure(int dim, std::vector<double> coords, std::vector<double> masses);

    void reserve(std::size_t atoms, std::size_t word_length = 0);
    void add(std::span<const double> point, double mass);
    void add(std::span<const double> point, double mass, std::span<const Symbol> word);
    void add(const Vec& point, double mass) { add(std::span<const double>(point.data(), point.size()), mass); }

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t size() const noexcept { return masses_.size(); }
    [[nodiscard]] bool empty() const noexcept { return masses_.empty(); }
    [[nodiscard]] std::span<const double> point(std::size_t i) const {
        return {coords_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
    }
    [[nodiscard]] Vec point_vec(std::size_t i) const;
    [[nodiscard]] double mass(std::size_t i) const { return masses_[i]; }
    [[nodiscard]] const std::vector<double>& coords() const noexcept { return coords_; }
    [[nodiscard]] const std::vector<double>& masses() const noexcept { return masses_; }
    [[nodiscard]] double total_mass() const noexcept { return total_mass_; }

    [[nodiscard]] bool has_words() const noexcept { return word_length_ > 0; }
    [[nodiscard]] std::size_t word_length() const noexcept { return word_length_; }
    [[nodiscard]] std::span<const Symbol> word_symbols(std::size_t i) const {
        return {symbols_.data() + i * word_length_, word_length_};
    }
    [[nodiscard]] Word word(std::size_t i) const;
    // First symbol of the atom's word; 0 when the measure carries no words.
    [[nodiscard]] Symbol label(std::size_t i) const { return has_words() ? symbols_[i * word_length_] : Symbol{0}; }
    [[nodiscard]] const std::vector<Symbol>& flat_symbols() const noexcept { return symbols_; }

    // Bounding box (min, max) per axis and the box diagonal.
    [[nodiscard]] std::pair<Vec, Vec> bounding_box() const;
    [[nodiscard]] double diameter_bound() const;

    // Builds the uniform-grid index. The measure must not be modified
    // afterwards; copies share the immutable index.
    void build_index(double cell_size);
    [[nodiscard]] const BallIndex* index() const noexcept { return index_.get(); }
    // Index if built, else one built on the spot with a default cell size.
    [[nodiscard]] std::shared_ptr<const BallIndex> index_or_build() const;

    [[nodiscard]] DiscreteMeasure scaled(double factor) const;
    // Same atoms and masses at new points; word data kept.
    [[nodiscard]] DiscreteMeasure with_points(std::vector<double> coords, int dim) const;
    [[nodiscard]] DiscreteMeasure subset(std::span<const std::size_t> atoms) const;

private:
    int dim_;
    std::vector<double> coords_;
    std::vector<double> masses_;
    std::vector<Symbol> symbols_;
    std::size_t word_length_ = 0;
    double total_mass_ = 0.0;
    std::shared_ptr<const BallIndex> index_;
};

// Squared Euclidean distance; the one predicate both the index and the
// linear scan use, so they agree bit for bit.
double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;

// Uniform-grid index answering closed-ball mass queries. d = 1 uses a sorted
// array with prefix sums; d >= 2 sorts atoms by grid cell and answers each
// ball as per-column ranges of fully covered cells (prefix sums) plus exact
// checks on boundary cells.
class BallIndex {
public:
    BallIndex(const DiscreteMeasure& measure, double cell_size);

    [[nodiscard]] double cell_size() const noexcept { return cell_; }
    [[nodiscard]] double mass(std::span<const double> x, double r) const;
    // Mass of atoms in the ball whose label equals `label`.
    [[nodiscard]] double mass_with_label(std::span<const double> x, double r, Symbol label) const;
    // Original atom indices inside the closed ball, ascending.
    [[nodiscard]] std::vector<std::size_t> atoms_in_ball(std::span<const double> x, double r) const;

private:
    struct Sink;
    void query(std::span<const double> x, double r, Sink& sink) const;
    void query_line(std::span<const double> x, double r, Sink& sink) const;
    void query_grid(std::span<const double> x, double r, Sink& sink) const;
    [[nodiscard]] std::size_t cell_lower(std::span<const std::int32_t> prefix, std::int32_t last) const;

    int dim_;
    double cell_;
    std::vector<double> origin_;
    std::vector<std::int32_t> extent_;
    std::vector<double> coords_;  // sorted by cell
    std::vector<double> masses_;
    std::vector<Symbol> labels_;
    std::vector<std::size_t> order_;  // sorted position -> original atom
    std::vector<double> prefix_;
    std::vector<std::vector<double>> label_prefix_;
    std::vector<std::int32_t> cell_coords_;  // flattened, dim per cell
    std::vector<std::size_t> cell_begin_;    // cells + 1 entries
};

double ball_mass(const DiscreteMeasure& nu, std::span<const double> x, double r);
inline double ball_mass(const DiscreteMeasure& nu, const Vec& x, double r) {
    return ball_mass(nu, std::span<const double>(x.data(), x.size()), r);
}
// Reference implementation used to check the index.
double ball_mass_linear(const DiscreteMeasure& nu, std::span<const double> x, double r);

// Draws atom indices with probability proportional to mass.
class AtomSampler {
public:
    explicit AtomSampler(const DiscreteMeasure& nu);
    [[nodiscard]] std::size_t sample(double uniform01) const;

private:
    std::vector<double> cumulative_;
};

std::vector<std::size_t> sample_atoms(const DiscreteMeasure& nu, std::size_t count, std::uint64_t seed);

// r_max, r_max * factor, ... while >= r_min.
std::vector<double> radius_schedule(double r_max, double r_min, double factor = 0.5);
// From R/4 down to 8 R rho^level, factor 1/2.
std::vector<double> default_radii(const IfsSpec& ifs, int level);

struct DimensionEstimate {
    double value = 0.0;
    double standard_error = 0.0;
    std::vector<double> radii_used;
    double regression_r2 = 0.0;
    std::size_t sample_count = 0;
};

struct EntropyPoint {
    double r;
    double entropy;
    double standard_error;
};
using EntropyCurve = std::vector<EntropyPoint>;

struct ScalingEntropy {
    double value = 0.0;
    double standard_error = 0.0;
    bool exact = false;
};

// H_r = -E log nu(B(X, r)), X ~ nu. Exact weighted sum over atoms when the
// atom count is <= samples, Monte Carlo otherwise.
ScalingEntropy scaling_entropy(const DiscreteMeasure& nu, double r, std::size_t samples, std::uint64_t seed);

struct EntropyOptions {
    std::size_t samples = 4096;
    std::uint64_t seed = 0;
};

EntropyCurve entropy_curve(const DiscreteMeasure& nu, std::span<const double> radii, const EntropyOptions& options = {});

// Slope of H_r against log(1/r). Needs >= 4 radii spanning >= 2 decades.
DimensionEstimate entropy_dimension(const DiscreteMeasure& nu, std::span<const double> radii,
                                    const EntropyOptions& options = {});

// Slope of log nu(B(x, r)) against log r over radii where the ball mass is
// positive and below the total. A ball that holds everything at every
// radius yields 0.
DimensionEstimate local_dimension(const DiscreteMeasure& nu, std::span<const double> x, std::span<const double> radii);

struct ExactnessOptions {
    std::size_t points = 256;
    std::uint64_t seed = 0;
    double threshold = 0.1;
    std::size_t histogram_bins = 20;
};

struct ExactnessReport {
    double mean = 0.0;
    double standard_error = 0.0;
    double median = 0.0;
    double spread = 0.0;  // interquartile range
    double mean_r2 = 0.0;
    bool exact = false;
    std::size_t failures = 0;
    std::vector<double> values;
    double histogram_lo = 0.0;
    double histogram_hi = 0.0;
    std::vector<std::size_t> histogram;
};

ExactnessReport exactness_diagnostic(const DiscreteMeasure& nu, std::span<const double> radii,
                                     const ExactnessOptions& options = {});

void write_entropy_curve_csv(std::ostream& out, const EntropyCurve& curve);
void write_dimension_estimates_csv(std::ostream& out, std::span<const DimensionEstimate> estimates);

}  // namespace cascadelab

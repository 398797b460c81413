#include "cascadelab/rotation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_map>

#include "cascadelab/error.hpp"
#include "cascadelab/rng.hpp"

namespace cascadelab {

std::string to_string(GroupKind kind) {
    switch (kind) {
        case GroupKind::Finite: return "finite";
        case GroupKind::Dense: return "dense";
        case GroupKind::Undetermined: return "undetermined";
    }
    return "undetermined";
}

Fraction rational_approximation(double x, std::uint64_t max_denominator, double tolerance) {
    // Continued-fraction convergents h/k of x.
    std::int64_t h_prev = 1, h_prev2 = 0;
    std::int64_t k_prev = 0, k_prev2 = 1;
    double rem = x;
    for (int iter = 0; iter < 64; ++iter) {
        const double a_real = std::floor(rem);
        if (std::abs(a_real) > 1e15) break;
        const auto a = static_cast<std::int64_t>(a_real);
        const std::int64_t h = a * h_prev + h_prev2;
        const std::int64_t k = a * k_prev + k_prev2;
        if (k <= 0 || static_cast<std::uint64_t>(k) > max_denominator) break;
        if (std::abs(x - static_cast<double>(h) / static_cast<double>(k)) < tolerance)
            return {h, static_cast<std::uint64_t>(k)};
        const double frac = rem - a_real;
        if (frac <= 0) break;
        rem = 1.0 / frac;
        h_prev2 = h_prev;
        h_prev = h;
        k_prev2 = k_prev;
        k_prev = k;
    }
    return {0, 0};
}

namespace {

struct BucketKey {
    std::int64_t a;
    std::int64_t b;
    friend bool operator==(const BucketKey&, const BucketKey&) = default;
};

struct BucketHash {
    std::size_t operator()(const BucketKey& k) const noexcept {
        return static_cast<std::size_t>(splitmix64(static_cast<std::uint64_t>(k.a) * 0x9E3779B97F4A7C15ULL ^
                                                   static_cast<std::uint64_t>(k.b)));
    }
};

// Tolerance-aware set of rotations, bucketed on two matrix entries.
class RotationSet {
public:
    RotationSet(int dim, double tol) : dim_(dim), tol_(tol) {}

    // Index of an element within tol (operator norm), or -1.
    [[nodiscard]] long find(const Mat& g) const {
        const BucketKey key = key_of(g);
        for (std::int64_t da = -1; da <= 1; ++da) {
            for (std::int64_t db = -1; db <= 1; ++db) {
                const auto it = buckets_.find({key.a + da, key.b + db});
                if (it == buckets_.end()) continue;
                for (std::size_t idx : it->second) {
                    if (same(elements_[idx], g)) return static_cast<long>(idx);
                }
            }
        }
        return -1;
    }

    std::size_t insert(const Mat& g) {
        elements_.push_back(g);
        buckets_[key_of(g)].push_back(elements_.size() - 1);
        return elements_.size() - 1;
    }

    [[nodiscard]] const std::vector<Mat>& elements() const noexcept { return elements_; }
    std::vector<Mat> release() { return std::move(elements_); }

private:
    static constexpr double kGrid = 1e-4;

    [[nodiscard]] BucketKey key_of(const Mat& g) const {
        const double a = g(0, 0);
        const double b = dim_ >= 2 ? g(1, 0) : 0.0;
        return {static_cast<std::int64_t>(std::floor(a / kGrid)), static_cast<std::int64_t>(std::floor(b / kGrid))};
    }

    [[nodiscard]] bool same(const Mat& a, const Mat& b) const {
        const double fro = (a - b).norm();
        if (fro < tol_) return true;
        if (fro >= std::sqrt(static_cast<double>(dim_)) * tol_) return false;
        return operator_norm(a - b) < tol_;
    }

    int dim_;
    double tol_;
    std::vector<Mat> elements_;
    std::unordered_map<BucketKey, std::vector<std::size_t>, BucketHash> buckets_;
};

bool mesh_dense(int dim, const std::vector<Mat>& elements, const ClassifyOptions& options) {
    for (std::size_t s = 0; s < options.mesh_samples; ++s) {
        const Mat probe = haar_rotation(dim, 0x6d657368ULL, s);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& e : elements) {
            best = std::min(best, (e - probe).norm());
            if (best < options.mesh_tolerance) break;
        }
        if (best >= options.mesh_tolerance) return false;
    }
    return true;
}

}  // namespace

RotationGroupInfo classify_group(const std::vector<Mat>& generators, const ClassifyOptions& options) {
    RotationGroupInfo info;
    info.generators = generators;
    info.tolerance = options.tolerance;
    info.dim = generators.empty() ? 1 : static_cast<int>(generators.front().rows());
    for (std::size_t i = 0; i < generators.size(); ++i) {
        const Mat& g = generators[i];
        if (g.rows() != info.dim || g.cols() != info.dim)
            throw Error(ErrorKind::NotARotation, "generator " + std::to_string(i) + " has the wrong shape");
        if (orthonormality_defect(g) > 1e-9 || determinant_defect(g) > 1e-9)
            throw Error(ErrorKind::NotARotation, "generator " + std::to_string(i) + " is not in SO(d)");
    }

    if (info.dim == 2) {
        for (const auto& g : generators) {
            const double turns = rotation_angle(g) / std::numbers::pi;
            if (rational_approximation(turns, options.max_denominator, options.rational_tolerance).q == 0) {
                info.kind = GroupKind::Dense;
                return info;
            }
        }
    }

    RotationSet set(info.dim, options.tolerance);
    set.insert(Mat::Identity(info.dim, info.dim));
    for (std::size_t head = 0; head < set.elements().size(); ++head) {
        for (const auto& h : generators) {
            Mat product = set.elements()[head] * h;
            if (set.find(product) >= 0) continue;
            set.insert(product);
            if (set.elements().size() > options.cap) {
                info.kind = mesh_dense(info.dim, set.elements(), options) ? GroupKind::Dense : GroupKind::Undetermined;
                return info;
            }
        }
    }
    info.kind = GroupKind::Finite;
    info.elements = set.release();
    return info;
}

Mat haar_rotation(int dim, std::uint64_t seed, std::uint64_t index) {
    if (dim < 1) throw Error(ErrorKind::InvalidArgument, "haar_rotation: dimension must be >= 1");
    if (dim == 1) return Mat::Identity(1, 1);
    KeyedStream stream(seed, derive_seed(seed, "haar", index));
    if (dim == 2) return rotation2d(2.0 * std::numbers::pi * stream.uniform());

    Mat z(dim, dim);
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) z(r, c) = stream.normal();
    Eigen::HouseholderQR<Mat> qr(z);
    Mat q = qr.householderQ();
    const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int c = 0; c < dim; ++c) {
        if (r(c, c) < 0) q.col(c) *= -1.0;
    }
    if (q.determinant() < 0) q.row(0) *= -1.0;
    return q;
}

std::vector<Mat> haar_sample(int dim, std::size_t count, std::uint64_t seed) {
    if (dim < 2) throw Error(ErrorKind::InvalidArgument, "haar_sample: dimension must be >= 2");
    std::vector<Mat> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(haar_rotation(dim, seed, i));
    return out;
}

std::vector<Mat> haar_on_finite(const RotationGroupInfo& info, std::size_t count, std::uint64_t seed) {
    if (info.kind != GroupKind::Finite || info.elements.empty())
        throw Error(ErrorKind::WrongClassification, "haar_on_finite needs a finite group");
    std::vector<Mat> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(sample_group_rotation(info, seed, i));
    return out;
}

Mat sample_group_rotation(const RotationGroupInfo& info, std::uint64_t seed, std::uint64_t index, bool assume_dense) {
    switch (info.kind) {
        case GroupKind::Finite: {
            KeyedStream stream(seed, derive_seed(seed, "finite-haar", index));
            return info.elements[stream.below(info.elements.size())];
        }
        case GroupKind::Dense:
            return haar_rotation(info.dim, seed, index);
        case GroupKind::Undetermined:
            if (assume_dense) return haar_rotation(info.dim, seed, index);
            throw Error(ErrorKind::UndeterminedGroup,
                        "rotation group could not be classified; assert density explicitly to sample SO(d)");
    }
    throw Error(ErrorKind::UndeterminedGroup, "unknown group kind");
}

StoppingAlphabet stopping_alphabet(const IfsSpec& ifs, int q, std::size_t cap) {
    if (q < 1) throw Error(ErrorKind::InvalidArgument, "stopping_alphabet: q must be >= 1");
    const double threshold = std::pow(ifs.rho(), q);
    const double cutoff = threshold * (1.0 + 1e-12);
    StoppingAlphabet out;
    out.q = q;
    const auto m = static_cast<Symbol>(ifs.size());

    struct Frame {
        std::vector<Symbol> word;
        double ratio;
    };
    // Explicit stack; children are pushed in reverse so output is lexicographic.
    std::vector<Frame> stack{{{}, 1.0}};
    while (!stack.empty()) {
        Frame frame = std::move(stack.back());
        stack.pop_back();
        if (!frame.word.empty() && frame.ratio <= cutoff) {
            out.words.emplace_back(std::move(frame.word));
            if (out.words.size() > cap)
                throw Error(ErrorKind::CapExceeded, "stopping alphabet exceeds the atom cap");
            continue;
        }
        for (Symbol s = m; s-- > 0;) {
            Frame child{frame.word, frame.ratio * ifs.map(s).ratio};
            child.word.push_back(s);
            stack.push_back(std::move(child));
        }
    }
    return out;
}

}  // namespace cascadelab

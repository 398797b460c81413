#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cascadelab/ifs.hpp"
#include "cascadelab/linalg.hpp"

namespace cascadelab {

enum class GroupKind { Finite, Dense, Undetermined };

std::string to_string(GroupKind kind);

/// Closed rotation group generated by the IFS rotations, as far as it can
/// be recognised numerically.
struct RotationGroupInfo {
    int dim = 0;
    std::vector<Mat> generators;
    GroupKind kind = GroupKind::Undetermined;
    // Explicit elements when kind == Finite; identity is always first.
    std::vector<Mat> elements;
    double tolerance = 1e-9;
};

struct ClassifyOptions {
    double tolerance = 1e-9;
    std::size_t cap = 100000;
    // Largest continued-fraction denominator tried when deciding whether a
    // planar angle is a rational multiple of pi.
    std::uint64_t max_denominator = 1000000;
    // |angle/pi - p/q| below this counts as rational.
    double rational_tolerance = 1e-13;
    // Mesh test used when the closure overflows the cap.
    std::size_t mesh_samples = 256;
    double mesh_tolerance = 0.25;  // Frobenius distance
};

RotationGroupInfo classify_group(const std::vector<Mat>& generators, const ClassifyOptions& options = {});

// Returns the reduced fraction p/q (q <= max_denominator) within tolerance of
// x, or q = 0 when none exists.
struct Fraction {
    std::int64_t p = 0;
    std::uint64_t q = 0;
};
Fraction rational_approximation(double x, std::uint64_t max_denominator, double tolerance);

// Haar-distributed rotations on SO(d). Element i depends only on (seed, i).
std::vector<Mat> haar_sample(int dim, std::size_t count, std::uint64_t seed);
Mat haar_rotation(int dim, std::uint64_t seed, std::uint64_t index);

// Uniform draws from the element list of a finite group.
std::vector<Mat> haar_on_finite(const RotationGroupInfo& info, std::size_t count, std::uint64_t seed);

// Draws one rotation from the group's Haar measure: uniform over the
// elements when Finite, full SO(d) when Dense (or when the caller asserts
// density for an Undetermined group).
Mat sample_group_rotation(const RotationGroupInfo& info, std::uint64_t seed, std::uint64_t index,
                          bool assume_dense = false);

struct StoppingAlphabet {
    int q = 0;
    std::vector<Word> words;
};

// Words whose ratio first drops to <= rho^q: parent ratio > rho^q and
// own ratio <= rho^q. Prefix-free and complete.
StoppingAlphabet stopping_alphabet(const IfsSpec& ifs, int q, std::size_t cap = kDefaultAtomCap);

}  // namespace cascadelab

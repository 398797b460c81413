#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cascadelab/linalg.hpp"

namespace cascadelab {

using Symbol = std::uint16_t;

// Finite word over the alphabet {0, ..., m-1}. Symbols are zero-based in
// memory; the text form is one-based and dot separated ("1.2.2"), with "-"
// for the empty word.
class Word {
public:
    Word() = default;
    explicit Word(std::vector<Symbol> symbols) : symbols_(std::move(symbols)) {}
    Word(std::initializer_list<Symbol> symbols) : symbols_(symbols) {}

    static Word parse(std::string_view text);
    [[nodiscard]] std::string to_string() const;

    [[nodiscard]] std::size_t size() const noexcept { return symbols_.size(); }
    [[nodiscard]] bool empty() const noexcept { return symbols_.empty(); }
    [[nodiscard]] Symbol operator[](std::size_t i) const { return symbols_[i]; }
    [[nodiscard]] const std::vector<Symbol>& symbols() const noexcept { return symbols_; }

    [[nodiscard]] Word child(Symbol s) const;
    [[nodiscard]] Word prefix(std::size_t n) const;
    [[nodiscard]] Word concat(const Word& other) const;
    [[nodiscard]] bool starts_with(const Word& prefix) const noexcept;

    friend bool operator==(const Word&, const Word&) = default;
    friend auto operator<=>(const Word&, const Word&) = default;

private:
    std::vector<Symbol> symbols_;
};

// x -> ratio * rotation * x + translation.
struct Similarity {
    double ratio = 1.0;
    Mat rotation;
    Vec translation;
    // Cached for d = 2 so compositions add angles instead of multiplying
    // matrices.
    std::optional<double> angle;

    static Similarity identity(int dim);
    static Similarity planar(double ratio, double angle, double tx, double ty);

    [[nodiscard]] int dim() const noexcept { return static_cast<int>(translation.size()); }
    [[nodiscard]] Vec apply(const Vec& x) const;
    // this o other
    [[nodiscard]] Similarity then_inner(const Similarity& other) const;
    // Throws InvalidIfs when the rotation is not orthonormal (1e-12) with
    // determinant +1 (1e-9), or the ratio is outside (0, 1].
    void validate(std::string_view context) const;
};

inline constexpr std::size_t kDefaultAtomCap = std::size_t{1} << 26;

class IfsSpec {
public:
    // Validates the maps; x0 defaults to the fixed point of the first map.
    IfsSpec(std::vector<Similarity> maps, std::optional<Vec> x0 = std::nullopt);

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t size() const noexcept { return maps_.size(); }
    [[nodiscard]] const std::vector<Similarity>& maps() const noexcept { return maps_; }
    [[nodiscard]] const Similarity& map(std::size_t i) const { return maps_.at(i); }
    [[nodiscard]] std::vector<double> ratios() const;
    [[nodiscard]] std::vector<Mat> rotations() const;

    [[nodiscard]] double rho() const noexcept { return rho_; }
    [[nodiscard]] double c() const noexcept { return c_; }
    // max_i |t_i| / (1 - rho): an upper bound on sup{|x| : x in K}.
    [[nodiscard]] double radius_bound() const noexcept { return radius_bound_; }
    [[nodiscard]] const Vec& x0() const noexcept { return x0_; }

    [[nodiscard]] double word_ratio(const Word& w) const;
    void check_word(const Word& w) const;

private:
    int dim_ = 0;
    std::vector<Similarity> maps_;
    double rho_ = 0;
    double c_ = 0;
    double radius_bound_ = 0;
    Vec x0_;
};

Similarity compose(const IfsSpec& ifs, const Word& w);

Vec cylinder_point(const IfsSpec& ifs, const Word& w, const Vec& x0);
inline Vec cylinder_point(const IfsSpec& ifs, const Word& w) { return cylinder_point(ifs, w, ifs.x0()); }

struct CloudEntry {
    Word word;
    Vec point;
};

// All m^n level-n cylinder points f_w(x0), in lexicographic word order.
std::vector<CloudEntry> attractor_cloud(const IfsSpec& ifs, int level, const Vec& x0,
                                        std::size_t cap = kDefaultAtomCap);

struct RatioBounds {
    double c;
    double rho;
};
RatioBounds ratio_bounds(const IfsSpec& ifs);

// m^n, or nullopt when it overflows std::size_t.
std::optional<std::size_t> checked_power(std::size_t m, int n);

}  // namespace cascadelab

#include "cascadelab/ifs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cascadelab/error.hpp"

namespace cascadelab {

Word Word::parse(std::string_view text) {
    std::vector<Symbol> symbols;
    if (text.empty() || text == "-") return Word{};
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t dot = text.find('.', pos);
        const std::string_view token = text.substr(pos, dot == std::string_view::npos ? text.npos : dot - pos);
        if (token.empty()) throw Error(ErrorKind::InvalidWord, "empty symbol in '" + std::string(text) + "'");
        unsigned long value = 0;
        for (char ch : token) {
            if (ch < '0' || ch > '9') throw Error(ErrorKind::InvalidWord, "non-digit in '" + std::string(text) + "'");
            value = value * 10 + static_cast<unsigned long>(ch - '0');
            if (value > 65536) throw Error(ErrorKind::InvalidWord, "symbol too large in '" + std::string(text) + "'");
        }
        if (value == 0) throw Error(ErrorKind::InvalidWord, "symbols are one-based in '" + std::string(text) + "'");
        symbols.push_back(static_cast<Symbol>(value - 1));
        if (dot == std::string_view::npos) break;
        pos = dot + 1;
    }
    return Word(std::move(symbols));
}

std::string Word::to_string() const {
    if (symbols_.empty()) return "-";
    std::string out;
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
        if (i) out += '.';
        out += std::to_string(static_cast<unsigned>(symbols_[i]) + 1);
    }
    return out;
}

Word Word::child(Symbol s) const {
    std::vector<Symbol> next = symbols_;
    next.push_back(s);
    return Word(std::move(next));
}

Word Word::prefix(std::size_t n) const {
    n = std::min(n, symbols_.size());
    return Word(std::vector<Symbol>(symbols_.begin(), symbols_.begin() + static_cast<std::ptrdiff_t>(n)));
}

Word Word::concat(const Word& other) const {
    std::vector<Symbol> next = symbols_;
    next.insert(next.end(), other.symbols_.begin(), other.symbols_.end());
    return Word(std::move(next));
}

bool Word::starts_with(const Word& p) const noexcept {
    if (p.size() > size()) return false;
    return std::equal(p.symbols_.begin(), p.symbols_.end(), symbols_.begin());
}

Similarity Similarity::identity(int dim) {
    Similarity s;
    s.ratio = 1.0;
    s.rotation = Mat::Identity(dim, dim);
    s.translation = Vec::Zero(dim);
    if (dim == 2) s.angle = 0.0;
    return s;
}

Similarity Similarity::planar(double ratio, double angle, double tx, double ty) {
    Similarity s;
    s.ratio = ratio;
    const double two_pi = 2.0 * std::numbers::pi;
    s.angle = std::fmod(std::fmod(angle, two_pi) + two_pi, two_pi);
    s.rotation = rotation2d(*s.angle);
    s.translation = Vec(2);
    s.translation << tx, ty;
    return s;
}

Vec Similarity::apply(const Vec& x) const { return ratio * (rotation * x) + translation; }

Similarity Similarity::then_inner(const Similarity& inner) const {
    Similarity out;
    out.ratio = ratio * inner.ratio;
    out.translation = ratio * (rotation * inner.translation) + translation;
    if (angle && inner.angle) {
        const double two_pi = 2.0 * std::numbers::pi;
        out.angle = std::fmod(*angle + *inner.angle, two_pi);
        out.rotation = rotation2d(*out.angle);
    } else {
        out.rotation = rotation * inner.rotation;
    }
    return out;
}

void Similarity::validate(std::string_view context) const {
    const std::string where(context);
    const auto d = translation.size();
    if (rotation.rows() != d || rotation.cols() != d)
        throw Error(ErrorKind::InvalidIfs, where + ".rotation: expected a " + std::to_string(d) + "x" +
                                               std::to_string(d) + " matrix");
    if (!(ratio > 0.0 && ratio <= 1.0))
        throw Error(ErrorKind::InvalidIfs, where + ".ratio: must lie in (0, 1]");
    if (orthonormality_defect(rotation) > 1e-12)
        throw Error(ErrorKind::InvalidIfs, where + ".rotation: columns are not orthonormal");
    if (determinant_defect(rotation) > 1e-9)
        throw Error(ErrorKind::InvalidIfs, where + ".rotation: determinant is not +1");
}

IfsSpec::IfsSpec(std::vector<Similarity> maps, std::optional<Vec> x0) : maps_(std::move(maps)) {
    if (maps_.size() < 2) throw Error(ErrorKind::InvalidIfs, "an IFS needs at least two maps");
    dim_ = maps_.front().dim();
    if (dim_ < 1) throw Error(ErrorKind::InvalidIfs, "maps[0].translation: dimension must be positive");
    rho_ = 0.0;
    c_ = 1.0;
    double max_t = 0.0;
    for (std::size_t i = 0; i < maps_.size(); ++i) {
        auto& f = maps_[i];
        const std::string where = "maps[" + std::to_string(i) + "]";
        if (f.dim() != dim_) throw Error(ErrorKind::InvalidIfs, where + ".translation: dimension mismatch");
        f.validate(where);
        if (f.ratio >= 1.0) throw Error(ErrorKind::InvalidIfs, where + ".ratio: must be < 1 for a contraction");
        if (dim_ == 2 && !f.angle) f.angle = rotation_angle(f.rotation);
        rho_ = std::max(rho_, f.ratio);
        c_ = std::min(c_, f.ratio);
        max_t = std::max(max_t, f.translation.norm());
    }
    radius_bound_ = max_t / (1.0 - rho_);

    if (x0) {
        if (x0->size() != dim_) throw Error(ErrorKind::InvalidIfs, "x0: dimension mismatch");
        if (x0->norm() > radius_bound_ * (1 + 1e-12) + 1e-15)
            throw Error(ErrorKind::InvalidIfs, "x0: must satisfy |x0| <= R");
        x0_ = *x0;
    } else {
        const auto& f = maps_.front();
        const Mat a = Mat::Identity(dim_, dim_) - f.ratio * f.rotation;
        x0_ = a.partialPivLu().solve(f.translation);
    }
}

std::vector<double> IfsSpec::ratios() const {
    std::vector<double> r;
    r.reserve(maps_.size());
    for (const auto& f : maps_) r.push_back(f.ratio);
    return r;
}

std::vector<Mat> IfsSpec::rotations() const {
    std::vector<Mat> r;
    r.reserve(maps_.size());
    for (const auto& f : maps_) r.push_back(f.rotation);
    return r;
}

void IfsSpec::check_word(const Word& w) const {
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] >= maps_.size())
            throw Error(ErrorKind::InvalidWord, "symbol " + std::to_string(w[i] + 1) + " at position " +
                                                    std::to_string(i + 1) + " exceeds alphabet size " +
                                                    std::to_string(maps_.size()));
    }
}

double IfsSpec::word_ratio(const Word& w) const {
    check_word(w);
    double r = 1.0;
    for (Symbol s : w.symbols()) r *= maps_[s].ratio;
    return r;
}

Similarity compose(const IfsSpec& ifs, const Word& w) {
    ifs.check_word(w);
    Similarity acc = Similarity::identity(ifs.dim());
    for (Symbol s : w.symbols()) acc = acc.then_inner(ifs.map(s));
    return acc;
}

Vec cylinder_point(const IfsSpec& ifs, const Word& w, const Vec& x0) {
    ifs.check_word(w);
    // Innermost map first: f_{w1}(f_{w2}(...f_{wn}(x0))).
    Vec x = x0;
    for (auto it = w.symbols().rbegin(); it != w.symbols().rend(); ++it) x = ifs.map(*it).apply(x);
    return x;
}

std::optional<std::size_t> checked_power(std::size_t m, int n) {
    std::size_t total = 1;
    for (int i = 0; i < n; ++i) {
        if (total > std::numeric_limits<std::size_t>::max() / m) return std::nullopt;
        total *= m;
    }
    return total;
}

std::vector<CloudEntry> attractor_cloud(const IfsSpec& ifs, int level, const Vec& x0, std::size_t cap) {
    if (level < 0) throw Error(ErrorKind::InvalidArgument, "level must be >= 0");
    const auto count = checked_power(ifs.size(), level);
    if (!count || *count > cap)
        throw Error(ErrorKind::CapExceeded, "m^n = " + std::to_string(ifs.size()) + "^" + std::to_string(level) +
                                                " exceeds the atom cap " + std::to_string(cap));
    std::vector<CloudEntry> out;
    out.reserve(*count);

    // Depth-first over words; the stack holds f_{w|k} for the current path.
    const int m = static_cast<int>(ifs.size());
    std::vector<Similarity> stack(static_cast<std::size_t>(level) + 1);
    stack[0] = Similarity::identity(ifs.dim());
    std::vector<Symbol> path(static_cast<std::size_t>(level), 0);
    int depth = 0;
    std::vector<int> next_child(static_cast<std::size_t>(level) + 1, 0);
    while (depth >= 0) {
        if (depth == level) {
            out.push_back({Word(path), stack[static_cast<std::size_t>(depth)].apply(x0)});
            --depth;
            continue;
        }
        int& j = next_child[static_cast<std::size_t>(depth)];
        if (j == m) {
            j = 0;
            --depth;
            continue;
        }
        path[static_cast<std::size_t>(depth)] = static_cast<Symbol>(j);
        stack[static_cast<std::size_t>(depth) + 1] = stack[static_cast<std::size_t>(depth)].then_inner(ifs.map(j));
        ++j;
        ++depth;
    }
    return out;
}

RatioBounds ratio_bounds(const IfsSpec& ifs) { return {ifs.c(), ifs.rho()}; }

}  // namespace cascadelab

#include "cascadelab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"

#include "cascadelab/cascade.hpp"
#include "cascadelab/information.hpp"
#include "cascadelab/parallel.hpp"
#include "cascadelab/projection.hpp"
#include "cascadelab/regression.hpp"
#include "cascadelab/rng.hpp"
#include "cascadelab/rotation.hpp"
#include "cascadelab/version.hpp"

namespace cascadelab {

using json = nlohmann::ordered_json;

std::string_view version_string() noexcept { return kVersionString; }

const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> kinds{"validate", "simulate",  "dims",    "project", "conserve",
                                                "percolate", "distances", "eq-scan", "sweep"};
    return kinds;
}

std::optional<double> ResultRecord::scalar(std::string_view name) const {
    for (const auto& s : scalars)
        if (s.name == name) return s.value;
    return std::nullopt;
}

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::ConfigInvalid:
        case ErrorKind::MultipleGrids:
        case ErrorKind::InvalidIfs:
        case ErrorKind::InvalidWeightModel:
        case ErrorKind::InvalidWord:
        case ErrorKind::NotARotation:
        case ErrorKind::InvalidArgument:
        case ErrorKind::DimensionMismatch:
        case ErrorKind::UndeterminedGroup:
        case ErrorKind::WrongClassification:
        case ErrorKind::Io:
            return 2;
        case ErrorKind::Extinct:
            return 3;
        default:
            return 4;
    }
}

namespace {

[[noreturn]] void invalid(const std::string& path, const std::string& reason) {
    throw Error(ErrorKind::ConfigInvalid, (path.empty() ? std::string("<root>") : path) + ": " + reason);
}

std::string display(const std::string& pointer) { return pointer.empty() ? pointer : pointer.substr(1); }

// Reads values out of the parsed config, records every value actually used
// (defaults included) into `resolved`, and afterwards reports any key that
// was never read.
class Config {
public:
    explicit Config(json in) : in_(std::move(in)) {
        if (!in_.is_object()) invalid("", "config must be an object");
    }

    [[nodiscard]] bool has(const std::string& ptr) const { return in_.contains(json::json_pointer(ptr)); }

    const json* find(const std::string& ptr) {
        consumed_.insert(ptr);
        if (!has(ptr)) return nullptr;
        return &in_.at(json::json_pointer(ptr));
    }

    void put(const std::string& ptr, json value) { resolved_[json::json_pointer(ptr)] = std::move(value); }

    double number(const std::string& ptr, double def) {
        const json* v = find(ptr);
        const double out = v ? to_number(*v, ptr) : def;
        put(ptr, out);
        return out;
    }

    std::optional<double> maybe_number(const std::string& ptr) {
        const json* v = find(ptr);
        if (!v || v->is_null()) return std::nullopt;
        return to_number(*v, ptr);
    }

    long long integer(const std::string& ptr, long long def, long long lo, long long hi) {
        const json* v = find(ptr);
        long long out = def;
        if (v) {
            if (!v->is_number_integer()) invalid(display(ptr), "expected an integer");
            out = v->get<long long>();
        }
        if (out < lo || out > hi)
            invalid(display(ptr), "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        put(ptr, out);
        return out;
    }

    std::size_t count(const std::string& ptr, std::size_t def, std::size_t lo = 1, std::size_t hi = 100000000) {
        return static_cast<std::size_t>(
            integer(ptr, static_cast<long long>(def), static_cast<long long>(lo), static_cast<long long>(hi)));
    }

    std::uint64_t seed(const std::string& ptr, std::uint64_t def) {
        const json* v = find(ptr);
        std::uint64_t out = def;
        if (v) {
            if (v->is_number_unsigned())
                out = v->get<std::uint64_t>();
            else if (v->is_number_integer() && v->get<long long>() >= 0)
                out = static_cast<std::uint64_t>(v->get<long long>());
            else
                invalid(display(ptr), "expected a non-negative integer");
        }
        put(ptr, out);
        return out;
    }

    std::string text(const std::string& ptr, const std::string& def) {
        const json* v = find(ptr);
        std::string out = def;
        if (v) {
            if (!v->is_string()) invalid(display(ptr), "expected a string");
            out = v->get<std::string>();
        }
        put(ptr, out);
        return out;
    }

    bool flag(const std::string& ptr, bool def) {
        const json* v = find(ptr);
        bool out = def;
        if (v) {
            if (!v->is_boolean()) invalid(display(ptr), "expected true or false");
            out = v->get<bool>();
        }
        put(ptr, out);
        return out;
    }

    std::vector<double> numbers(const std::string& ptr, std::vector<double> def) {
        const json* v = find(ptr);
        if (v && !v->is_array()) {
            def.assign(1, to_number(*v, ptr));
        } else if (v) {
            def.clear();
            for (std::size_t i = 0; i < v->size(); ++i) def.push_back(to_number((*v)[i], ptr + "/" + std::to_string(i)));
        }
        put(ptr, def);
        return def;
    }

    [[nodiscard]] std::size_t array_size(const std::string& ptr) {
        const json* v = find(ptr);
        if (!v) return 0;
        if (!v->is_array()) invalid(display(ptr), "expected a list");
        return v->size();
    }

    // Every leaf of the input must sit at or under a consumed path.
    void check_unknown() const { walk(in_, ""); }

    [[nodiscard]] const json& resolved() const noexcept { return resolved_; }
    [[nodiscard]] const json& input() const noexcept { return in_; }

    static double to_number(const json& v, const std::string& ptr) {
        if (v.is_number()) return v.get<double>();
        if (v.is_string()) {
            // "p/q" fractions are accepted so ratios like 1/3 stay exact.
            const auto s = v.get<std::string>();
            const auto slash = s.find('/');
            try {
                std::size_t used = 0;
                if (slash == std::string::npos) {
                    const double x = std::stod(s, &used);
                    if (used == s.size()) return x;
                } else {
                    const std::string a = s.substr(0, slash), b = s.substr(slash + 1);
                    std::size_t ua = 0, ub = 0;
                    const double p = std::stod(a, &ua), q = std::stod(b, &ub);
                    if (ua == a.size() && ub == b.size() && q != 0.0) return p / q;
                }
            } catch (const std::exception&) {
            }
        }
        invalid(display(ptr), "expected a number or a p/q fraction");
    }

private:
    void walk(const json& node, const std::string& ptr) const {
        if (node.is_object() || node.is_array()) {
            if (!ptr.empty() && !used_prefix(ptr) && !covered(ptr)) invalid(display(ptr), "unknown key");
            if (node.is_object())
                for (auto it = node.begin(); it != node.end(); ++it) walk(it.value(), ptr + "/" + it.key());
            else
                for (std::size_t i = 0; i < node.size(); ++i) walk(node[i], ptr + "/" + std::to_string(i));
            return;
        }
        if (!covered(ptr)) invalid(display(ptr), "unknown key");
    }

    // A leaf counts as read when its own path was read, or when it sits in a
    // list of plain values whose path was read.
    [[nodiscard]] bool covered(std::string ptr) const {
        while (!ptr.empty()) {
            if (consumed_.count(ptr)) return true;
            ptr = ptr.substr(0, ptr.rfind('/'));
            if (ptr.empty() || !in_.at(json::json_pointer(ptr)).is_array()) return false;
        }
        return false;
    }

    [[nodiscard]] bool used_prefix(const std::string& ptr) const {
        if (consumed_.count(ptr)) return true;
        const auto it = consumed_.lower_bound(ptr + "/");
        return it != consumed_.end() && it->rfind(ptr + "/", 0) == 0;
    }

    json in_;
    json resolved_ = json::object();
    std::set<std::string> consumed_;
};

// ---------------------------------------------------------------------------
// Named systems

std::vector<Similarity> preset_maps(const std::string& name) {
    std::vector<Similarity> maps;
    auto line = [](double r, double t) {
        Similarity f;
        f.ratio = r;
        f.rotation = Mat::Identity(1, 1);
        f.translation = Vec::Constant(1, t);
        return f;
    };
    if (name == "cantor") {
        maps = {line(1.0 / 3, 0.0), line(1.0 / 3, 2.0 / 3)};
    } else if (name == "two-scale") {
        maps = {line(0.5, 0.0), line(0.25, 0.75)};
    } else if (name == "overlap") {
        maps = {line(0.5, 0.5), line(0.5, 0.5)};
    } else if (name == "cantor-product") {
        for (double a : {0.0, 2.0 / 3})
            for (double b : {0.0, 2.0 / 3}) maps.push_back(Similarity::planar(1.0 / 3, 0.0, a, b));
    } else if (name == "grid4") {
        for (double b : {0.0, 0.5})
            for (double a : {0.0, 0.5}) maps.push_back(Similarity::planar(0.5, 0.0, a, b));
    } else if (name == "dense-planar") {
        // Three maps of ratio 0.45 towards the vertices of a triangle, rotated
        // by 1, 2 and 0 radians.
        const double angles[3] = {1.0, 2.0, 0.0};
        for (int i = 0; i < 3; ++i) {
            const double phi = 2.0 * std::numbers::pi * i / 3.0;
            maps.push_back(Similarity::planar(0.45, angles[i], 0.55 * std::cos(phi), 0.55 * std::sin(phi)));
        }
    } else {
        invalid("ifs/preset", "unknown preset '" + name + "'");
    }
    return maps;
}

json maps_to_json(const std::vector<Similarity>& maps) {
    json out = json::array();
    for (const auto& f : maps) {
        json m;
        m["ratio"] = f.ratio;
        const int d = f.dim();
        if (d == 2) {
            m["angle"] = f.angle ? *f.angle : rotation_angle(f.rotation);
        } else if (d >= 3) {
            std::vector<double> flat;
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c) flat.push_back(f.rotation(r, c));
            m["rotation"] = flat;
        }
        m["translation"] = std::vector<double>(f.translation.data(), f.translation.data() + d);
        out.push_back(m);
    }
    return out;
}

IfsSpec read_ifs(Config& cfg) {
    std::vector<Similarity> maps;
    const bool has_preset = cfg.has("/ifs/preset");
    const bool has_maps = cfg.has("/ifs/maps");
    if (has_preset && has_maps) invalid("ifs", "give either preset or maps, not both");
    if (has_preset) {
        const json* p = cfg.find("/ifs/preset");
        if (!p->is_string()) invalid("ifs/preset", "expected a string");
        maps = preset_maps(p->get<std::string>());
    } else if (has_maps) {
        const std::size_t m = cfg.array_size("/ifs/maps");
        if (m < 2) invalid("ifs/maps", "need at least two maps");
        for (std::size_t i = 0; i < m; ++i) {
            const std::string at = "/ifs/maps/" + std::to_string(i);
            Similarity f;
            const auto t = cfg.numbers(at + "/translation", {});
            if (t.empty()) invalid(display(at + "/translation"), "missing or empty");
            const auto d = static_cast<int>(t.size());
            f.ratio = cfg.number(at + "/ratio", std::numeric_limits<double>::quiet_NaN());
            if (std::isnan(f.ratio)) invalid(display(at + "/ratio"), "missing");
            f.translation = Eigen::Map<const Vec>(t.data(), d);
            if (d == 1) {
                f.rotation = Mat::Identity(1, 1);
            } else if (d == 2) {
                const double a = cfg.number(at + "/angle", 0.0);
                f.rotation = rotation2d(a);
                f.angle = a;
            } else {
                std::vector<double> identity(static_cast<std::size_t>(d * d), 0.0);
                for (int k = 0; k < d; ++k) identity[static_cast<std::size_t>(k * d + k)] = 1.0;
                const auto rot = cfg.numbers(at + "/rotation", identity);
                if (rot.size() != static_cast<std::size_t>(d * d))
                    invalid(display(at + "/rotation"), "expected " + std::to_string(d * d) + " row-major entries");
                f.rotation = Mat(d, d);
                for (int r = 0; r < d; ++r)
                    for (int c = 0; c < d; ++c) f.rotation(r, c) = rot[static_cast<std::size_t>(r * d + c)];
            }
            maps.push_back(std::move(f));
        }
    } else {
        invalid("ifs", "missing preset or maps");
    }
    for (std::size_t i = 1; i < maps.size(); ++i)
        if (maps[i].dim() != maps[0].dim()) invalid("ifs/maps/" + std::to_string(i) + "/translation", "dimension differs from map 0");

    std::optional<Vec> x0;
    if (cfg.has("/ifs/x0")) {
        const auto v = cfg.numbers("/ifs/x0", {});
        if (static_cast<int>(v.size()) != maps[0].dim()) invalid("ifs/x0", "dimension does not match the maps");
        x0 = Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    IfsSpec ifs(maps, x0);
    cfg.put("/ifs/maps", maps_to_json(maps));
    cfg.put("/ifs/x0", std::vector<double>(ifs.x0().data(), ifs.x0().data() + ifs.dim()));
    return ifs;
}

struct ModelInfo {
    std::shared_ptr<const WeightModel> model;
    std::optional<SubsetLaw> law;
    std::string name;
};

ModelInfo read_model(Config& cfg, const IfsSpec& ifs) {
    ModelInfo info;
    info.name = cfg.text("/weights/model", "bernoulli");
    const auto ratios = ifs.ratios();
    const std::size_t m = ifs.size();
    try {
        if (info.name == "bernoulli") {
            info.model = std::make_shared<const WeightModel>(bernoulli_weights(ifs));
        } else if (info.name == "deterministic") {
            const auto p = cfg.numbers("/weights/p", {});
            if (p.size() != m) invalid("weights/p", "expected " + std::to_string(m) + " weights");
            info.model = std::make_shared<const WeightModel>(WeightModel(DeterministicWeights{p}));
        } else if (info.name == "percolation") {
            if (cfg.has("/weights/subsets")) {
                const std::size_t n = cfg.array_size("/weights/subsets");
                std::vector<SubsetOutcome> outcomes;
                for (std::size_t k = 0; k < n; ++k) {
                    const std::string at = "/weights/subsets/" + std::to_string(k);
                    SubsetOutcome o;
                    o.probability = cfg.number(at + "/probability", 0.0);
                    for (double s : cfg.numbers(at + "/members", {})) {
                        if (s < 1 || s > static_cast<double>(m) || s != std::floor(s))
                            invalid(display(at + "/members"), "symbols are integers in [1, m]");
                        o.members.push_back(static_cast<Symbol>(s - 1));
                    }
                    outcomes.push_back(std::move(o));
                }
                info.law = SubsetLaw::explicit_list(m, std::move(outcomes));
            } else {
                const json* keep = cfg.find("/weights/keep");
                std::vector<double> k;
                if (!keep) invalid("weights/keep", "percolation needs keep or subsets");
                if (keep->is_array()) {
                    for (std::size_t i = 0; i < keep->size(); ++i)
                        k.push_back(Config::to_number((*keep)[i], "/weights/keep/" + std::to_string(i)));
                    if (k.size() != m) invalid("weights/keep", "expected " + std::to_string(m) + " probabilities");
                } else {
                    k.assign(m, Config::to_number(*keep, "/weights/keep"));
                }
                cfg.put("/weights/keep", k);
                info.law = SubsetLaw::independent(k);
            }
            const auto alpha = cfg.maybe_number("/weights/alpha");
            const double a = alpha ? *alpha : percolation_exponent(*info.law, ratios);
            cfg.put("/weights/alpha", a);
            info.model = std::make_shared<const WeightModel>(percolation_weights(*info.law, ratios, a));
        } else if (info.name == "general") {
            const std::size_t n = cfg.array_size("/weights/outcomes");
            GeneralDiscreteWeights gen;
            for (std::size_t k = 0; k < n; ++k) {
                const std::string at = "/weights/outcomes/" + std::to_string(k);
                DiscreteOutcome o;
                o.probability = cfg.number(at + "/probability", 0.0);
                o.weights = cfg.numbers(at + "/weights", {});
                gen.outcomes.push_back(std::move(o));
            }
            info.model = std::make_shared<const WeightModel>(WeightModel(std::move(gen)));
        } else {
            invalid("weights/model", "unknown model '" + info.name + "'");
        }
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::InvalidWeightModel) throw Error(ErrorKind::ConfigInvalid, std::string("weights: ") + e.what());
        throw;
    }
    if (info.model->size() != m) invalid("weights", "model size does not match the number of maps");
    return info;
}

// ---------------------------------------------------------------------------
// Shared experiment context

struct Context {
    Config& cfg;
    std::uint64_t seed;
    ResultRecord& out;
};

struct Setup {
    IfsSpec ifs;
    ModelInfo model;
    int level;
    TailPolicy tail;
    std::size_t attempts;
};

Setup read_setup(Config& cfg, int default_level, bool require_valid = true) {
    IfsSpec ifs = read_ifs(cfg);
    ModelInfo model = read_model(cfg, ifs);
    if (require_valid) {
        const auto report = validate_weight_model(*model.model);
        if (!report.passed) {
            std::string why;
            for (const auto& f : report.failures) why += (why.empty() ? "" : "; ") + f;
            throw Error(ErrorKind::InvalidWeightModel, why);
        }
    }
    const int level = static_cast<int>(cfg.integer("/level", default_level, 1, 40));
    TailPolicy tail;
    const auto policy = cfg.text("/tail/policy", "expectation");
    if (policy == "simulated") {
        tail = TailPolicy::simulated(static_cast<int>(cfg.integer("/tail/depth", 8, 1, 20)));
    } else if (policy != "expectation") {
        invalid("tail/policy", "expected 'expectation' or 'simulated'");
    }
    const std::size_t attempts = cfg.count("/survival_attempts", 1000);
    return {std::move(ifs), std::move(model), level, tail, attempts};
}

std::vector<double> read_radii(Config& cfg, const IfsSpec& ifs, int level) {
    const double R = ifs.radius_bound();
    const double rmax = cfg.number("/radii/max", R / 4.0);
    const double rmin = cfg.number("/radii/min", 8.0 * R * std::pow(ifs.rho(), level));
    const double factor = cfg.number("/radii/factor", 0.5);
    if (!(rmax > rmin && rmin > 0)) invalid("radii", "need max > min > 0");
    if (!(factor > 0 && factor < 1)) invalid("radii/factor", "must lie in (0, 1)");
    return radius_schedule(rmax, rmin, factor);
}

ExactnessOptions read_exactness(Config& cfg, std::uint64_t seed) {
    ExactnessOptions o;
    o.points = cfg.count("/exactness/points", 256);
    o.threshold = cfg.number("/exactness/threshold", 0.1);
    o.histogram_bins = cfg.count("/exactness/bins", 20);
    o.seed = derive_seed(seed, "exactness", 0);
    return o;
}

void add(ResultRecord& out, const std::string& name, double value) { out.scalars.push_back({name, value}); }

DiscreteMeasure build_measure(const Setup& s, std::uint64_t seed, ResultRecord& out) {
    auto sc = surviving_cascade(s.model.model, s.ifs, s.level, derive_seed(seed, "measure", 0), s.tail, s.attempts);
    add(out, "atoms", static_cast<double>(sc.measure.size()));
    add(out, "total_mass", sc.measure.total_mass());
    add(out, "rejections", static_cast<double>(sc.rejections));
    return normalized(sc.measure);
}

Table exactness_table(const ExactnessReport& rep) {
    Table t({"bin_lo", "bin_hi", "count"});
    const double width = (rep.histogram_hi - rep.histogram_lo) / static_cast<double>(rep.histogram.size());
    for (std::size_t b = 0; b < rep.histogram.size(); ++b)
        t.row()
            .add(rep.histogram_lo + width * static_cast<double>(b))
            .add(rep.histogram_lo + width * static_cast<double>(b + 1))
            .add(rep.histogram[b]);
    return t;
}

ProjectionFrame read_frame(Config& cfg, const std::string& base, int dim, std::uint64_t seed) {
    if (dim < 2) invalid(display(base), "projections need an ambient dimension of at least 2");
    if (cfg.has(base + "/rows")) {
        const auto flat = cfg.numbers(base + "/rows", {});
        if (flat.empty() || flat.size() % static_cast<std::size_t>(dim) != 0)
            invalid(display(base + "/rows"), "expected k * d row-major entries");
        const auto k = static_cast<Eigen::Index>(flat.size() / static_cast<std::size_t>(dim));
        Mat rows(k, dim);
        for (Eigen::Index r = 0; r < k; ++r)
            for (int c = 0; c < dim; ++c) rows(r, c) = flat[static_cast<std::size_t>(r * dim + c)];
        try {
            return ProjectionFrame(rows);
        } catch (const Error& e) {
            invalid(display(base + "/rows"), e.what());
        }
    }
    if (dim == 2) return ProjectionFrame::angle(cfg.number(base + "/angle", 0.0));
    const int k = static_cast<int>(cfg.integer(base + "/k", 1, 1, dim - 1));
    return ProjectionFrame::haar(dim, k, derive_seed(seed, "frame", 0), 0);
}

// ---------------------------------------------------------------------------
// Experiment kinds

void run_validate(Context& ctx) {
    auto s = read_setup(ctx.cfg, 8, false);
    ctx.cfg.check_unknown();
    auto& out = ctx.out;
    const auto ratios = s.ifs.ratios();
    const auto bounds = ratio_bounds(s.ifs);
    add(out, "similarity_dimension", similarity_dimension(ratios));
    add(out, "rho", bounds.rho);
    add(out, "c", bounds.c);
    add(out, "radius_bound", s.ifs.radius_bound());

    const auto report = validate_weight_model(*s.model.model);
    add(out, "mean_sum", report.mean_sum);
    add(out, "mean_one", report.mean_one ? 1 : 0);
    add(out, "a0_probability", report.a0_probability);
    add(out, "a1_witness", report.a1_witness.value_or(std::numeric_limits<double>::quiet_NaN()));
    add(out, "valid", report.passed ? 1 : 0);
    for (const auto& f : report.failures) out.notes.push_back(f);
    Table moments({"p", "sum_E_W_p"});
    for (const auto& w : report.a1_moments) moments.row().add(w.p).add(w.value);
    out.tables.push_back({"moments", std::move(moments)});

    const auto terms = expectation_terms(*s.model.model, ratios);
    add(out, "weight_entropy", terms.weight_entropy);
    add(out, "log_ratio", terms.log_ratio);
    try {
        const auto alpha = theoretical_alpha(*s.model.model, ratios, 0.0, s.ifs.dim());
        add(out, "alpha_no_overlap", alpha.value);
    } catch (const Error& e) {
        out.notes.push_back(e.what());
    }
    if (const auto* perc = std::get_if<PercolationWeights>(&s.model.model->variant()))
        add(out, "percolation_alpha", perc->alpha);

    const auto group = classify_group(s.ifs.rotations());
    out.notes.push_back("rotation group: " + to_string(group.kind) +
                        (group.kind == GroupKind::Finite ? " (" + std::to_string(group.elements.size()) + " elements)"
                                                         : std::string()) +
                        ", tolerance " + format_number(group.tolerance));
    add(out, "group_elements", static_cast<double>(group.elements.size()));
}

void run_simulate(Context& ctx) {
    auto s = read_setup(ctx.cfg, 10);
    auto& out = ctx.out;
    const std::size_t seeds = ctx.cfg.count("/martingale/seeds", 200);
    const auto n = static_cast<std::size_t>(ctx.cfg.integer("/martingale/level", std::min(s.level, 8), 1, 30));
    const bool export_atoms = ctx.cfg.flag("/export_atoms", false);
    ctx.cfg.check_unknown();

    // Y_k for k = 1..n from one pruned enumeration per seed.
    std::vector<std::vector<double>> y(seeds, std::vector<double>(n + 1, 0.0));
    parallel_for(seeds, [&](std::size_t k) {
        const CascadeRealization real(s.model.model, derive_seed(ctx.seed, "martingale", k));
        std::vector<std::vector<double>> w(n, std::vector<double>(real.size()));
        std::function<void(const WordHash&, std::size_t, double)> visit = [&](const WordHash& h, std::size_t depth,
                                                                           double q) {
            y[k][depth] += q;
            if (depth == n) return;
            real.draw(h, w[depth]);
            const auto& weights = w[depth];
            for (std::size_t j = 0; j < weights.size(); ++j)
                if (weights[j] > 0.0) visit(h.extend(static_cast<std::uint32_t>(j)), depth + 1, q * weights[j]);
        };
        visit(WordHash{}, 0, 1.0);
    });
    Table plot({"level", "mean_Y", "stderr"});
    for (std::size_t level = 1; level <= n; ++level) {
        std::vector<double> col(seeds);
        for (std::size_t k = 0; k < seeds; ++k) col[k] = y[k][level];
        const auto m = sample_mean(col);
        plot.row().add(level).add(m.mean).add(m.standard_error);
        if (level == n) {
            add(out, "martingale_mean", m.mean);
            add(out, "martingale_stderr", m.standard_error);
        }
    }
    out.tables.push_back({"plot_martingale", std::move(plot)});

    const auto nu = build_measure(s, ctx.seed, out);
    if (export_atoms) {
        std::vector<std::string> header{"word"};
        for (int a = 0; a < nu.dim(); ++a) header.push_back("x" + std::to_string(a + 1));
        header.push_back("mass");
        Table atoms(header);
        for (std::size_t i = 0; i < nu.size(); ++i) {
            auto& row = atoms.row().add(nu.word(i).to_string());
            for (double v : nu.point(i)) row.add(v);
            row.add(nu.mass(i));
        }
        out.tables.push_back({"atoms", std::move(atoms)});
    }
}

void run_dims(Context& ctx) {
    auto s = read_setup(ctx.cfg, 12);
    auto& out = ctx.out;
    const auto radii = read_radii(ctx.cfg, s.ifs, s.level);
    EntropyOptions eo;
    eo.samples = ctx.cfg.count("/entropy/samples", 4096);
    eo.seed = derive_seed(ctx.seed, "entropy", 0);
    const auto exo = read_exactness(ctx.cfg, ctx.seed);
    const int cn = static_cast<int>(ctx.cfg.integer("/conditional/n", std::max(1, s.level - 2), 0, 30));
    const std::size_t replicas = ctx.cfg.count("/conditional/replicas", 256);
    ConditionalEntropyOptions co;
    co.extra_levels = static_cast<int>(ctx.cfg.integer("/conditional/extra_levels", 2, 0, 10));
    co.tail = s.tail;
    co.max_attempts = s.attempts;
    ctx.cfg.check_unknown();

    const auto nu = indexed(build_measure(s, ctx.seed, out), radii.back());
    const auto curve = entropy_curve(nu, radii, eo);
    Table entropy({"r", "H_r", "stderr"});
    Table plot({"log_r", "H_r"});
    for (const auto& p : curve) {
        entropy.row().add(p.r).add(p.entropy).add(p.standard_error);
        plot.row().add(std::log(p.r)).add(p.entropy);
    }
    out.tables.push_back({"entropy_curve", std::move(entropy)});
    out.tables.push_back({"plot_entropy", std::move(plot)});
    try {
        const auto ed = entropy_dimension(nu, radii, eo);
        add(out, "entropy_dimension", ed.value);
        add(out, "entropy_dimension_stderr", ed.standard_error);
        add(out, "entropy_dimension_r2", ed.regression_r2);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::InsufficientRange) throw;
        out.notes.push_back(e.what());
    }

    const auto rep = exactness_diagnostic(nu, radii, exo);
    add(out, "local_dimension_mean", rep.mean);
    add(out, "local_dimension_stderr", rep.standard_error);
    add(out, "local_dimension_median", rep.median);
    add(out, "local_dimension_spread", rep.spread);
    add(out, "exact", rep.exact ? 1 : 0);
    out.tables.push_back({"local_dimension_histogram", exactness_table(rep)});
    Table dims({"value", "stderr", "r2", "n_samples"});
    dims.row().add(rep.mean).add(rep.standard_error).add(rep.mean_r2).add(rep.values.size());
    out.tables.push_back({"dimension_estimates", std::move(dims)});

    const auto ce = conditional_entropy(s.model.model, s.ifs, ImageFamily::identity(), cn, replicas,
                                        derive_seed(ctx.seed, "conditional", 0), co);
    add(out, "conditional_entropy", ce.value);
    add(out, "conditional_entropy_stderr", ce.standard_error);
    add(out, "conditional_entropy_reliable", ce.reliable ? 1 : 0);
    const auto alpha = theoretical_alpha(*s.model.model, s.ifs.ratios(), std::max(0.0, ce.value), s.ifs.dim());
    add(out, "alpha_formula", alpha.value);
}

void run_project(Context& ctx) {
    auto s = read_setup(ctx.cfg, 12);
    auto& out = ctx.out;
    const int d = s.ifs.dim();
    if (d < 2) invalid("ifs", "projections need an ambient dimension of at least 2");
    const auto radii = read_radii(ctx.cfg, s.ifs, s.level);
    ProfileOptions po;
    po.radii = radii;
    po.exactness = read_exactness(ctx.cfg, ctx.seed);
    std::vector<ProjectionFrame> frames;
    if (ctx.cfg.has("/projection/angle") && d == 2) {
        frames.push_back(ProjectionFrame::angle(ctx.cfg.number("/projection/angle", 0.0)));
    } else if (d == 2) {
        frames = angle_frames(ctx.cfg.count("/projection/angles", 64));
    } else {
        const int k = static_cast<int>(ctx.cfg.integer("/projection/k", 1, 1, d - 1));
        frames = haar_frames(d, k, ctx.cfg.count("/projection/frames", 64), derive_seed(ctx.seed, "frames", 0));
    }
    const double tol = ctx.cfg.number("/marstrand/tol", 0.12);
    const auto alpha_override = ctx.cfg.maybe_number("/marstrand/alpha");
    ctx.cfg.check_unknown();

    const double alpha = alpha_override ? *alpha_override
                                        : theoretical_alpha(*s.model.model, s.ifs.ratios(), 0.0, d).value;
    ctx.cfg.put("/marstrand/alpha", alpha);
    out.notes.push_back("rotation group: " + to_string(classify_group(s.ifs.rotations()).kind));
    const auto nu = build_measure(s, ctx.seed, out);
    const auto profile = projected_dimension_profile(nu, frames, po);
    Table table({"frame", "angle", "value", "stderr", "r2"});
    Table plot({"angle", "beta"});
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
    for (const auto& row : profile) {
        const double angle = row.theta.value_or(std::numeric_limits<double>::quiet_NaN());
        table.row().add(row.frame).add(angle).add(row.value).add(row.standard_error).add(row.r2);
        plot.row().add(angle).add(row.value);
        lo = std::min(lo, row.value);
        hi = std::max(hi, row.value);
        sum += row.value;
    }
    out.tables.push_back({"profile", std::move(table)});
    out.tables.push_back({"plot_profile", std::move(plot)});
    const auto check = marstrand_check(profile, alpha, frames.front().k(), tol);
    add(out, "profile_min", lo);
    add(out, "profile_max", hi);
    add(out, "profile_mean", sum / static_cast<double>(profile.size()));
    add(out, "marstrand_target", check.target);
    add(out, "marstrand_pass_fraction", check.pass_fraction);
}

void run_conserve(Context& ctx) {
    auto s = read_setup(ctx.cfg, 9);
    auto& out = ctx.out;
    const auto radii = read_radii(ctx.cfg, s.ifs, s.level);
    const auto frame = read_frame(ctx.cfg, "/conserve/frame", s.ifs.dim(), ctx.seed);
    ConservationOptions co;
    co.radii = radii;
    co.exactness = read_exactness(ctx.cfg, ctx.seed);
    co.slices = ctx.cfg.count("/conserve/slices", 24);
    co.slice_points = ctx.cfg.count("/conserve/slice_points", 64);
    co.stability = ctx.cfg.number("/conserve/stability", 0.05);
    const double R = s.ifs.radius_bound(), rho = s.ifs.rho();
    co.widths = ctx.cfg.numbers("/conserve/widths", {R * std::pow(rho, (2 * s.level + 2) / 3), R * std::pow(rho, s.level)});
    co.seed = derive_seed(ctx.seed, "conserve", 0);
    ctx.cfg.check_unknown();

    const auto nu = build_measure(s, ctx.seed, out);
    const auto rep = dimension_conservation_check(nu, frame, co);
    Table widths({"width", "gamma", "stderr", "slices"});
    for (const auto& w : rep.widths) widths.row().add(w.width).add(w.mean).add(w.standard_error).add(w.slices_used);
    out.tables.push_back({"conservation", std::move(widths)});
    add(out, "alpha_hat", rep.alpha);
    add(out, "beta_hat", rep.beta);
    add(out, "gamma_hat", rep.gamma);
    add(out, "residual", rep.residual);
    add(out, "combined_stderr", rep.combined_se);
    add(out, "slice_stable", rep.stable ? 1 : 0);
}

// Probability generating function of the offspring count.
double offspring_pgf(const SubsetLaw& law, double x) {
    if (law.is_independent()) {
        double v = 1.0;
        for (double k : law.keep()) v *= 1.0 - k + k * x;
        return v;
    }
    double v = 0.0;
    for (const auto& o : law.outcomes()) v += o.probability * std::pow(x, static_cast<double>(o.members.size()));
    return v;
}

void run_percolate(Context& ctx) {
    auto s = read_setup(ctx.cfg, 8);
    auto& out = ctx.out;
    if (!s.model.law) invalid("weights/model", "percolate needs a percolation model");
    const std::size_t seeds = ctx.cfg.count("/percolation/seeds", 1000);
    const std::size_t scales = ctx.cfg.count("/percolation/box_scales", static_cast<std::size_t>(std::max(4, s.level - 1)), 4, 40);
    ctx.cfg.check_unknown();
    const auto& law = *s.model.law;

    add(out, "alpha", std::get<PercolationWeights>(s.model.model->variant()).alpha);
    std::vector<char> survived(seeds, 0);
    parallel_for(seeds, [&](std::size_t k) {
        const auto sample = sample_percolation_set(law, s.ifs, s.level, derive_seed(ctx.seed, "percolate", k));
        survived[k] = sample.extinct ? 0 : 1;
    });
    const double freq = static_cast<double>(std::count(survived.begin(), survived.end(), 1)) / static_cast<double>(seeds);
    add(out, "survival_frequency", freq);
    add(out, "survival_stderr", std::sqrt(freq * (1 - freq) / static_cast<double>(seeds)));
    double q = 0.0;
    for (int i = 0; i < s.level; ++i) q = offspring_pgf(law, q);
    add(out, "survival_predicted", 1.0 - q);
    double qlim = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double next = offspring_pgf(law, qlim);
        if (next - qlim < 1e-15) {
            qlim = next;
            break;
        }
        qlim = next;
    }
    add(out, "survival_limit", 1.0 - qlim);

    const auto it = std::find(survived.begin(), survived.end(), 1);
    if (it == survived.end()) {
        out.notes.push_back("no seed survived; survivor export and box dimension skipped");
        return;
    }
    const auto k = static_cast<std::size_t>(it - survived.begin());
    const auto sample = sample_percolation_set(law, s.ifs, s.level, derive_seed(ctx.seed, "percolate", k));
    out.texts.push_back({"survivors.txt", sample.to_text()});
    std::vector<Vec> points;
    for (const auto& w : sample.levels.back()) points.push_back(cylinder_point(s.ifs, w));
    add(out, "survivors", static_cast<double>(points.size()));
    std::vector<double> sc;
    for (std::size_t i = 1; i <= scales; ++i) sc.push_back(std::pow(s.ifs.rho(), static_cast<double>(i)) * (1 - 1e-9));
    const auto box = box_dimension(points, sc);
    Table table({"scale", "log_boxes"});
    for (double scale : sc) {
        std::set<std::vector<long long>> boxes;
        for (const auto& p : points) {
            std::vector<long long> cell;
            for (Eigen::Index a = 0; a < p.size(); ++a) cell.push_back(static_cast<long long>(std::floor(p[a] / scale)));
            boxes.insert(cell);
        }
        table.row().add(scale).add(std::log(static_cast<double>(boxes.size())));
    }
    out.tables.push_back({"box_counts", std::move(table)});
    add(out, "box_dimension", box.value);
    add(out, "box_dimension_r2", box.regression_r2);
}

void run_distances(Context& ctx) {
    auto s = read_setup(ctx.cfg, 12);
    auto& out = ctx.out;
    const auto radii = read_radii(ctx.cfg, s.ifs, s.level);
    const auto exo = read_exactness(ctx.cfg, ctx.seed);
    const auto pin_vals = ctx.cfg.numbers("/distances/pin", std::vector<double>(s.ifs.x0().data(), s.ifs.x0().data() + s.ifs.dim()));
    if (static_cast<int>(pin_vals.size()) != s.ifs.dim()) invalid("distances/pin", "dimension does not match the IFS");
    const auto cyl_text = ctx.cfg.text("/distances/cylinder", "2");
    PinnedRestriction restriction;
    if (cyl_text != "-") {
        try {
            const Word w = Word::parse(cyl_text);
            s.ifs.check_word(w);
            restriction.cylinder = w;
        } catch (const Error& e) {
            invalid("distances/cylinder", e.what());
        }
    }
    restriction.exclusion_radius = ctx.cfg.number("/distances/exclusion_radius", 0.0);
    const std::size_t pairs = ctx.cfg.count("/distances/pairs", 20000);
    ctx.cfg.check_unknown();

    const auto nu = build_measure(s, ctx.seed, out);
    const Vec pin = Eigen::Map<const Vec>(pin_vals.data(), static_cast<Eigen::Index>(pin_vals.size()));
    const auto pd = indexed(pinned_distance_measure(nu, pin, restriction), radii.back());
    const auto rep = exactness_diagnostic(pd, radii, exo);
    add(out, "pinned_dimension", rep.mean);
    add(out, "pinned_dimension_stderr", rep.standard_error);
    add(out, "pinned_spread", rep.spread);
    out.tables.push_back({"pinned_histogram", exactness_table(rep)});

    const auto points = atom_points(nu);
    const auto dists = distance_set_cloud(points, pairs, derive_seed(ctx.seed, "distance-set", 0));
    std::vector<double> scales;
    for (double r : radii)
        if (r >= radii.front() * 1e-3) scales.push_back(r);
    if (scales.size() >= 4) {
        const auto box = box_dimension(dists, scales);
        add(out, "distance_set_box_dimension", box.value);
        add(out, "distance_set_box_r2", box.regression_r2);
    }
    add(out, "distance_samples", static_cast<double>(dists.size()));
}

void run_eq_scan(Context& ctx) {
    auto s = read_setup(ctx.cfg, 12);
    auto& out = ctx.out;
    const auto frame = read_frame(ctx.cfg, "/eq/frame", s.ifs.dim(), ctx.seed);
    std::vector<double> qs = ctx.cfg.numbers("/eq/q", {2, 4, 6});
    EqOptions eo;
    eo.level = s.level;
    eo.tail = s.tail;
    eo.samples = ctx.cfg.count("/eq/samples", 4096);
    eo.assume_dense = ctx.cfg.flag("/eq/assume_dense", false);
    const std::size_t replicas = ctx.cfg.count("/eq/replicas", 32);
    ctx.cfg.check_unknown();
    for (double q : qs)
        if (q < 1 || q != std::floor(q)) invalid("eq/q", "q values must be positive integers");

    const auto group = classify_group(s.ifs.rotations());
    out.notes.push_back("rotation group: " + to_string(group.kind));
    std::sort(qs.begin(), qs.end());
    Table plot({"q", "E_q", "stderr"});
    for (double qv : qs) {
        const int q = static_cast<int>(qv);
        const auto e = E_q_estimate(s.model.model, s.ifs, frame, group, q, replicas, derive_seed(ctx.seed, "eq", 0), eo);
        plot.row().add(q).add(e.value).add(e.standard_error);
        add(out, "E_" + std::to_string(q), e.value);
        add(out, "E_" + std::to_string(q) + "_stderr", e.standard_error);
        if (qv == qs.back()) {
            add(out, "E_q", e.value);
            add(out, "E_q_stderr", e.standard_error);
        }
    }
    out.tables.push_back({"plot_eq", std::move(plot)});
}

using Runner = void (*)(Context&);

Runner runner_for(const std::string& kind) {
    static const std::map<std::string, Runner> table{
        {"validate", run_validate}, {"simulate", run_simulate},   {"dims", run_dims},
        {"project", run_project},   {"conserve", run_conserve},   {"percolate", run_percolate},
        {"distances", run_distances}, {"eq-scan", run_eq_scan},
    };
    const auto it = table.find(kind);
    return it == table.end() ? nullptr : it->second;
}

// Locations of {"grid": [...]} objects, as JSON pointers.
void find_grids(const json& node, const std::string& ptr, std::vector<std::string>& found) {
    if (!node.is_object()) return;
    if (node.size() == 1 && node.contains("grid")) {
        found.push_back(ptr);
        return;
    }
    for (auto it = node.begin(); it != node.end(); ++it) find_grids(it.value(), ptr + "/" + it.key(), found);
}

ResultRecord run_single(json config, const std::string& kind, std::uint64_t seed) {
    ResultRecord out;
    out.kind = kind;
    out.seed = seed;
    Config cfg(std::move(config));
    cfg.find("/kind");
    cfg.put("/kind", kind);
    cfg.find("/seed");
    cfg.put("/seed", seed);
    Context ctx{cfg, seed, out};
    const Runner run = runner_for(kind);
    if (!run) invalid("kind", "unknown experiment kind '" + kind + "'");
    run(ctx);
    cfg.check_unknown();
    out.resolved_config = cfg.resolved().dump(2) + "\n";
    return out;
}

ResultRecord run_sweep(json config, std::uint64_t seed) {
    if (!config.contains("sweep") || !config["sweep"].is_object() || !config["sweep"].contains("base"))
        invalid("sweep/base", "missing the experiment kind to sweep");
    const json sweep = config["sweep"];
    for (auto it = sweep.begin(); it != sweep.end(); ++it)
        if (it.key() != "base") invalid("sweep/" + it.key(), "unknown key");
    if (!sweep["base"].is_string()) invalid("sweep/base", "expected a string");
    const std::string base = sweep["base"].get<std::string>();
    if (base == "sweep" || !runner_for(base)) invalid("sweep/base", "unknown experiment kind '" + base + "'");
    config.erase("sweep");

    std::vector<std::string> grids;
    find_grids(config, "", grids);
    if (grids.empty()) invalid("", "sweep needs one parameter given as {\"grid\": [...]}");
    if (grids.size() > 1) {
        std::string list;
        for (const auto& g : grids) list += (list.empty() ? "" : ", ") + display(g);
        throw Error(ErrorKind::MultipleGrids, "grids found at " + list);
    }
    const json::json_pointer where(grids.front());
    const json values = config[where]["grid"];
    if (!values.is_array() || values.empty()) invalid(display(grids.front()) + "/grid", "grid must be a nonempty list");

    ResultRecord out;
    out.kind = "sweep";
    out.seed = seed;
    std::vector<ResultRecord> records;
    json resolved_points = json::array();
    for (std::size_t i = 0; i < values.size(); ++i) {
        json point = config;
        point[where] = values[i];
        const std::uint64_t sub = seed ^ splitmix64(i);
        records.push_back(run_single(point, base, sub));
        resolved_points.push_back(json::parse(records.back().resolved_config));
    }
    // Columns are the scalars every grid point reported.
    std::vector<std::string> columns;
    for (const auto& sc : records.front().scalars)
        if (std::all_of(records.begin(), records.end(), [&](const ResultRecord& r) { return r.scalar(sc.name).has_value(); }))
            columns.push_back(sc.name);
    std::vector<std::vector<double>> rows;
    for (const auto& rec : records) {
        std::vector<double> row;
        for (const auto& c : columns) row.push_back(*rec.scalar(c));
        rows.push_back(std::move(row));
    }
    std::vector<std::string> header{"index", "value"};
    header.insert(header.end(), columns.begin(), columns.end());
    Table table(header);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto& r = table.row().add(i);
        if (values[i].is_number())
            r.add(values[i].get<double>());
        else
            r.add(values[i].dump());
        for (double v : rows[i]) r.add(v);
    }
    out.tables.push_back({"sweep", std::move(table)});
    add(out, "points", static_cast<double>(values.size()));
    json resolved;
    resolved["kind"] = "sweep";
    resolved["seed"] = seed;
    resolved["sweep"] = {{"base", base}, {"parameter", display(grids.front())}, {"grid", values}};
    resolved["points"] = resolved_points;
    out.resolved_config = resolved.dump(2) + "\n";
    return out;
}

}  // namespace

ResultRecord run_experiment(std::string_view config_text, const RunOverrides& overrides) {
    const auto start = std::chrono::steady_clock::now();
    json config;
    try {
        config = json::parse(config_text.begin(), config_text.end(), nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::ConfigInvalid, std::string("config is not valid JSON: ") + e.what());
    }
    if (!config.is_object()) invalid("", "config must be an object");

    std::string kind;
    if (config.contains("kind")) {
        if (!config["kind"].is_string()) invalid("kind", "expected a string");
        kind = config["kind"].get<std::string>();
    }
    if (overrides.kind) {
        if (!kind.empty() && kind != *overrides.kind)
            invalid("kind", "config says '" + kind + "' but '" + *overrides.kind + "' was requested");
        kind = *overrides.kind;
    }
    if (kind.empty()) invalid("kind", "missing experiment kind");
    if (std::find(experiment_kinds().begin(), experiment_kinds().end(), kind) == experiment_kinds().end())
        invalid("kind", "unknown experiment kind '" + kind + "'");

    std::uint64_t seed = 1;
    if (config.contains("seed")) {
        const auto& v = config["seed"];
        if (v.is_number_unsigned())
            seed = v.get<std::uint64_t>();
        else if (v.is_number_integer() && v.get<long long>() >= 0)
            seed = static_cast<std::uint64_t>(v.get<long long>());
        else
            invalid("seed", "expected a non-negative integer");
    }
    if (overrides.seed) seed = *overrides.seed;

    std::string output;
    if (config.contains("output")) {
        if (!config["output"].is_string()) invalid("output", "expected a directory path");
        output = config["output"].get<std::string>();
        config.erase("output");
    }

    ResultRecord out;
    if (kind == "sweep") {
        config.erase("kind");
        config.erase("seed");
        out = run_sweep(std::move(config), seed);
    } else {
        std::vector<std::string> grids;
        find_grids(config, "", grids);
        if (!grids.empty()) invalid(display(grids.front()), "grids are only allowed in sweep experiments");
        out = run_single(std::move(config), kind, seed);
    }
    if (!output.empty()) {
        auto resolved = json::parse(out.resolved_config);
        resolved["output"] = output;
        out.resolved_config = resolved.dump(2) + "\n";
        out.output_dir = output;
    }
    out.version = std::string(version_string());
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

std::string summary_text(const ResultRecord& record) {
    std::ostringstream s;
    s << "cascadelab " << record.version << '\n';
    s << "kind: " << record.kind << '\n';
    s << "seed: " << record.seed << '\n';
    s << "wall clock: " << format_number(record.wall_seconds) << " s\n";
    s << "\nscalars:\n";
    std::size_t width = 0;
    for (const auto& sc : record.scalars) width = std::max(width, sc.name.size());
    for (const auto& sc : record.scalars)
        s << "  " << sc.name << std::string(width - sc.name.size() + 2, ' ') << format_number(sc.value) << '\n';
    if (!record.tables.empty() || !record.texts.empty()) {
        s << "\nfiles:\n";
        for (const auto& t : record.tables) s << "  " << t.name << ".csv (" << t.table.rows() << " rows)\n";
        for (const auto& t : record.texts) s << "  " << t.name << '\n';
        s << "  config.resolved.json\n";
    }
    if (!record.notes.empty()) {
        s << "\nnotes:\n";
        for (const auto& n : record.notes) s << "  " << n << '\n';
    }
    return s.str();
}

void write_result(const ResultRecord& record, const std::filesystem::path& out) {
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create " + out.string() + ": " + ec.message());
    auto write = [&](const std::filesystem::path& path, const std::string& content) {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error(ErrorKind::Io, "cannot write " + path.string());
        f << content;
        if (!f) throw Error(ErrorKind::Io, "write failed for " + path.string());
    };
    for (const auto& t : record.tables) write(out / (t.name + ".csv"), t.table.str());
    for (const auto& t : record.texts) write(out / t.name, t.text);
    write(out / "config.resolved.json", record.resolved_config);
    write(out / "summary.txt", summary_text(record));
}

}  // namespace cascadelab

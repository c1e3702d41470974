#include "xmlc/metaopt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "xmlc/parallel.hpp"
#include "xmlc/text.hpp"

namespace xmlc {

namespace {

constexpr double kLogitEps = 1e-12;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_eval(const Objective& objective, const ParamVector& params) {
    try {
        const double s = objective(params);
        return std::isnan(s) ? kNegInf : s;
    } catch (...) {
        return kNegInf;
    }
}

}  // namespace

std::string to_string(Transform t) {
    switch (t) {
        case Transform::Linear: return "linear";
        case Transform::Log: return "log";
        case Transform::Logit: return "logit";
    }
    return "?";
}

Transform transform_from_string(const std::string& name) {
    for (auto t : {Transform::Linear, Transform::Log, Transform::Logit}) {
        if (to_string(t) == name) return t;
    }
    throw std::invalid_argument("unknown transform '" + name + "'");
}

void ParamDef::validate() const {
    if (!(lo < hi)) throw std::invalid_argument("parameter " + name + ": lo must be below hi");
    if (!(init >= lo && init <= hi)) throw std::invalid_argument("parameter " + name + ": init outside bounds");
    if (!frozen && !(sigma > 0)) throw std::invalid_argument("parameter " + name + ": sigma must be positive");
    if (transform == Transform::Log && !(lo > 0)) {
        throw std::invalid_argument("parameter " + name + ": log transform needs lo > 0");
    }
}

double ParamDef::forward(double x) const {
    switch (transform) {
        case Transform::Linear: return x;
        case Transform::Log: return std::log(x);
        case Transform::Logit: {
            const double u = std::clamp((x - lo) / (hi - lo), kLogitEps, 1.0 - kLogitEps);
            return std::log(u / (1.0 - u));
        }
    }
    return x;
}

double ParamDef::inverse(double y) const {
    double x = y;
    switch (transform) {
        case Transform::Linear: break;
        case Transform::Log: x = std::exp(y); break;
        case Transform::Logit: x = lo + (hi - lo) / (1.0 + std::exp(-y)); break;
    }
    return std::clamp(x, lo, hi);
}

void ParamSpec::validate() const {
    for (std::size_t i = 0; i < params.size(); ++i) {
        params[i].validate();
        for (std::size_t j = 0; j < i; ++j) {
            if (params[j].name == params[i].name) throw std::invalid_argument("duplicate parameter " + params[i].name);
        }
    }
}

std::vector<double> ParamSpec::initial() const {
    std::vector<double> out;
    out.reserve(params.size());
    for (const auto& p : params) out.push_back(p.init);
    return out;
}

std::size_t ParamSpec::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].name == name) return i;
    }
    throw std::out_of_range("no parameter " + name);
}

ParamVector propose(const ParamSpec& spec, const ParamVector& center, Rng& rng) {
    if (center.size() != spec.params.size()) throw std::invalid_argument("propose: dimension mismatch");
    ParamVector out(center.size());
    for (std::size_t i = 0; i < center.size(); ++i) {
        const auto& p = spec.params[i];
        if (p.frozen) {
            out[i] = center[i];
            continue;
        }
        const double z = standard_normal(rng);
        out[i] = p.inverse(p.forward(center[i]) + p.sigma * z);
    }
    return out;
}

SearchState run_search(const Objective& objective, const ParamSpec& spec, const SearchOptions& options) {
    spec.validate();
    if (options.outer_iterations < 0 || options.batch_size < 1) {
        throw std::invalid_argument("run_search: bad iteration counts");
    }
    SearchState state;
    state.seed = options.seed;
    state.outer_iterations = options.outer_iterations;
    state.batch_size = options.batch_size;
    state.best_params = spec.initial();
    state.best_score = safe_eval(objective, state.best_params);
    state.history.push_back({state.best_params, state.best_score});
    state.best_trace.push_back(state.best_score);

    Rng rng(derive_seed(options.seed, {0x5ea7c4}));
    const auto batch = static_cast<std::size_t>(options.batch_size);
    for (int round = 0; round < options.outer_iterations; ++round) {
        std::vector<ParamVector> proposals;
        proposals.reserve(batch);
        for (std::size_t b = 0; b < batch; ++b) proposals.push_back(propose(spec, state.best_params, rng));

        std::vector<double> scores(batch);
        run_chunks(batch, options.workers, [&](std::size_t, std::size_t lo, std::size_t hi) {
            for (std::size_t b = lo; b < hi; ++b) scores[b] = safe_eval(objective, proposals[b]);
        });

        // batch members are considered in draw order so ties favour the earlier one
        std::size_t best = batch;
        double best_score = state.best_score;
        for (std::size_t b = 0; b < batch; ++b) {
            state.history.push_back({proposals[b], scores[b]});
            if (scores[b] > best_score) {
                best_score = scores[b];
                best = b;
            }
        }
        if (best < batch) {
            state.best_params = proposals[best];
            state.best_score = best_score;
        }
        state.best_trace.push_back(state.best_score);
        if (options.on_round) options.on_round(round, state);
    }
    return state;
}

ParamSpec read_param_spec(std::istream& in, const std::string& source) {
    ParamSpec spec;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (is_blank(line)) continue;
        const auto t = split_ws(line);
        if (t.size() != 7) throw ParseError(source, number, "expected 'name lo hi transform init sigma frozen'");
        ParamDef p;
        p.name = std::string(t[0]);
        auto lo = parse_double(t[1]);
        auto hi = parse_double(t[2]);
        auto init = parse_double(t[4]);
        auto sigma = parse_double(t[5]);
        auto frozen = parse_int<int>(t[6]);
        if (!lo || !hi || !init || !sigma || !frozen || (*frozen != 0 && *frozen != 1)) {
            throw ParseError(source, number, "malformed parameter line");
        }
        p.lo = *lo;
        p.hi = *hi;
        p.init = *init;
        p.sigma = *sigma;
        p.frozen = *frozen == 1;
        try {
            p.transform = transform_from_string(std::string(t[3]));
            p.validate();
        } catch (const std::invalid_argument& e) {
            throw ParseError(source, number, e.what());
        }
        spec.params.push_back(std::move(p));
    }
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw ParseError(source, number, e.what());
    }
    return spec;
}

ParamSpec read_param_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open parameter file " + path.string());
    return read_param_spec(in, path.string());
}

void write_param_spec(std::ostream& out, const ParamSpec& spec) {
    std::string s;
    for (const auto& p : spec.params) {
        s.clear();
        s += p.name;
        s += ' ';
        append_exact(s, p.lo);
        s += ' ';
        append_exact(s, p.hi);
        s += ' ';
        s += to_string(p.transform);
        s += ' ';
        append_exact(s, p.init);
        s += ' ';
        append_exact(s, p.sigma);
        s += p.frozen ? " 1\n" : " 0\n";
        out << s;
    }
}

ParamSpec with_values(ParamSpec spec, const ParamVector& values) {
    if (values.size() != spec.params.size()) throw std::invalid_argument("with_values: dimension mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) spec.params[i].init = values[i];
    return spec;
}

}  // namespace xmlc

#pragma once

// Gaussian random search over bounded, transformed parameters.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "xmlc/random.hpp"

namespace xmlc {

enum class Transform { Linear, Log, Logit };

std::string to_string(Transform t);
Transform transform_from_string(const std::string& name);

struct ParamDef {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;
    Transform transform = Transform::Linear;
    double init = 0.0;
    double sigma = 0.1;  // in transformed space
    bool frozen = false;

    /// Throws std::invalid_argument when the invariants do not hold.
    void validate() const;
    double forward(double x) const;
    double inverse(double y) const;
};

struct ParamSpec {
    std::vector<ParamDef> params;

    void validate() const;
    [[nodiscard]] std::vector<double> initial() const;
    [[nodiscard]] std::size_t index_of(const std::string& name) const;
};

using ParamVector = std::vector<double>;

/// One Gaussian step per unfrozen parameter in transformed space, mapped back
/// and clamped to [lo, hi].
ParamVector propose(const ParamSpec& spec, const ParamVector& center, Rng& rng);

struct SearchEntry {
    ParamVector params;
    double score;
};

struct SearchState {
    ParamVector best_params;
    double best_score = 0.0;
    std::vector<SearchEntry> history;
    /// best_score after the initial evaluation and after every round.
    std::vector<double> best_trace;
    std::uint64_t seed = 0;
    int outer_iterations = 40;
    int batch_size = 8;
};

using Objective = std::function<double(const ParamVector&)>;

struct SearchOptions {
    std::uint64_t seed = 0;
    int outer_iterations = 40;
    int batch_size = 8;
    /// Concurrent objective evaluations within a batch; 1 runs inline.
    unsigned workers = 1;
    /// Called after each round with (round, state).
    std::function<void(int, const SearchState&)> on_round;
};

/// Evaluates the initial parameters, then `outer_iterations` rounds of
/// `batch_size` proposals centred on the best parameters at round start.
/// Exceptions and NaN from the objective score as -infinity.
SearchState run_search(const Objective& objective, const ParamSpec& spec, const SearchOptions& options);

/// Parameter file: one line `name lo hi transform init sigma frozen`;
/// '#' starts a comment.
ParamSpec read_param_spec(std::istream& in, const std::string& source);
ParamSpec read_param_spec(const std::filesystem::path& path);
void write_param_spec(std::ostream& out, const ParamSpec& spec);

/// `spec` with each init replaced by `values`.
ParamSpec with_values(ParamSpec spec, const ParamVector& values);

}  // namespace xmlc

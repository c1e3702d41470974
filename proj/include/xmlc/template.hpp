#pragma once

// Template names: underscore-separated tokens describing a base classifier,
// e.g. "mnb_mafs2_s8_lp_u_jm2_bm18ti_pct0_ps5_thr16".
//
// Token            Meaning
// mnb              model family marker (optional)
// mafs mafs2 mafs3 optimisation measure; also mifs, mjac, ndcg5[letter]
// sN               data fold N (0-9)
// lp kd nobo       label powerset, kernel densities, no back-off
// u | ucN          uniform / uniform+collection background
// jmN              background weight, see kJmLevels
// kdpN             kernel prior mass 2^N
// bmNNti[b|c|d]    length-normalized BM25 weighting, NN in 15..20 sets b
// bm25cN           classic BM25 (N=1: k1 1.2, N=2: k1 2.0)
// tiXN tXiXN       TF-IDF family, N in 1..5
// mcN mlcN         minimum feature count / minimum label count N
// pctN pciN        final prune floor 0.1 N / online prune floor 0.25 N
// psN | psX        prior scale N/5, or left to the search
// csN              hierarchy smoothing (level ignored)
// iwN              transposed prediction with capacity weight 2^(N-1)
// thrN             N workers
// fb fbN je pdN chN ltN mrN tkN miN   accepted, no effect
//
// Anything else is kept as an unknown token.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "xmlc/inference.hpp"
#include "xmlc/metrics.hpp"
#include "xmlc/model.hpp"

namespace xmlc {

inline constexpr double kJmLevels[] = {0.5, 0.9, 0.98, 0.99, 0.995, 0.998, 0.999};

struct TemplateConfig {
    bool model_marker = false;
    Measure measure = Measure::Mafs;
    std::string measure_variant;  // e.g. "b" in ndcg5b
    std::optional<BackgroundKind> background;
    std::optional<int> collection_level;  // N of ucN
    std::optional<std::string> weighting;  // weighting token verbatim
    bool prior_search = false;             // psX
    std::set<std::string> flags;           // lp kd nobo fb je
    std::map<std::string, int> levels;     // numeric tokens by key
    std::vector<std::string> unknown;

    [[nodiscard]] bool has(const std::string& flag) const { return flags.contains(flag); }
    [[nodiscard]] std::optional<int> level(const std::string& key) const;
    [[nodiscard]] std::optional<int> fold() const { return level("s"); }

    /// Tokens that parsed but have no effect on the model.
    [[nodiscard]] std::vector<std::string> inert_tokens() const;

    friend bool operator==(const TemplateConfig&, const TemplateConfig&) = default;
};

/// Throws std::invalid_argument on an empty name, a duplicate or conflicting
/// token, or a missing measure. A trailing ".template" is ignored.
TemplateConfig parse_template_name(const std::string& name);

/// Tokens in canonical order, unknown tokens last in input order.
std::string serialize_template(const TemplateConfig& cfg);

/// Weighting named by a bm/ti token.
WeightingConfig weighting_from_token(const std::string& token);

struct ResolvedTemplate {
    ModelConfig model;
    bool transposed = false;
    InstantiateConfig instantiate;
    std::size_t workers = 1;
};

/// Applies the template on top of `base`; tokens absent from the name leave
/// the corresponding fields of `base` unchanged.
ResolvedTemplate resolve_template(const TemplateConfig& cfg, const ModelConfig& base = {});

}  // namespace xmlc

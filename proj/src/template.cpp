#include "xmlc/template.hpp"

#include <cmath>
#include <regex>
#include <stdexcept>

namespace xmlc {

namespace {

const std::vector<std::string> kNumericKeys = {"s",  "jm", "kdp", "pd", "mc", "mlc", "pct", "pci", "ps",
                                               "cs", "iw", "thr", "mi", "ch", "lt", "mr",  "tk",  "fb"};
const std::vector<std::string> kFlagTokens = {"lp", "kd", "nobo", "fb", "je"};
const std::set<std::string> kInertKeys = {"pd", "ch", "lt", "mr", "tk", "mi", "fb"};

// canonical serialization order; "@m" measure, "@bg" background, "@w" weighting
const std::vector<std::string> kOrder = {"@m", "s",  "lp", "kd", "nobo", "@bg", "jm", "kdp", "pd",
                                         "@w", "fb", "mc", "mi", "pci",  "pct", "mlc", "ps", "cs",
                                         "lt", "mr", "tk", "iw", "ch",   "je",  "thr"};

const std::regex kNumericToken("([a-z]+)([0-9]+)");
const std::regex kBm18Token("bm(1[5-9]|20)ti([bcd]?)");
const std::regex kBm25Token("bm25c([12])");
const std::regex kTixToken("(tiX|tXiX)([1-5])");
const std::regex kNdcgToken("ndcg5([a-z]?)");
const std::regex kCollectionToken("uc([0-9]+)");

bool is_measure(const std::string& t) {
    return t == "mafs" || t == "mafs2" || t == "mafs3" || t == "mifs" || t == "mjac" ||
           std::regex_match(t, kNdcgToken);
}

bool is_weighting(const std::string& t) {
    return std::regex_match(t, kBm18Token) || std::regex_match(t, kBm25Token) || std::regex_match(t, kTixToken);
}

int checked_level(const TemplateConfig& cfg, const std::string& key, int lo, int hi) {
    const int v = *cfg.level(key);
    if (v < lo || v > hi) {
        throw std::invalid_argument("template level " + key + std::to_string(v) + " outside [" + std::to_string(lo) +
                                    ", " + std::to_string(hi) + "]");
    }
    return v;
}

}  // namespace

std::optional<int> TemplateConfig::level(const std::string& key) const {
    auto it = levels.find(key);
    if (it == levels.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> TemplateConfig::inert_tokens() const {
    std::vector<std::string> out;
    for (const auto& [key, v] : levels) {
        if (kInertKeys.contains(key)) out.push_back(key + std::to_string(v));
    }
    if (has("fb")) out.push_back("fb");
    if (has("je")) out.push_back("je");
    return out;
}

TemplateConfig parse_template_name(const std::string& raw) {
    std::string name = raw;
    const std::string suffix = ".template";
    if (name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
        name.resize(name.size() - suffix.size());
    }
    if (name.empty()) throw std::invalid_argument("empty template name");

    TemplateConfig cfg;
    bool have_measure = false;
    std::size_t start = 0;
    bool first = true;
    while (start <= name.size()) {
        auto end = name.find('_', start);
        if (end == std::string::npos) end = name.size();
        const std::string t = name.substr(start, end - start);
        start = end + 1;
        if (t.empty()) throw std::invalid_argument("empty token in template '" + raw + "'");
        std::smatch m;

        if (first && t == "mnb") {
            cfg.model_marker = true;
        } else if (is_measure(t)) {
            if (have_measure) throw std::invalid_argument("template '" + raw + "': more than one measure");
            have_measure = true;
            if (std::regex_match(t, m, kNdcgToken)) {
                cfg.measure = Measure::Ndcg5;
                cfg.measure_variant = m[1];
            } else {
                cfg.measure = measure_from_string(t);
            }
        } else if (t == "u" || std::regex_match(t, m, kCollectionToken)) {
            if (cfg.background) throw std::invalid_argument("template '" + raw + "': conflicting background tokens");
            if (t == "u") {
                cfg.background = BackgroundKind::Uniform;
            } else {
                cfg.background = BackgroundKind::UniformCollection;
                cfg.collection_level = std::stoi(m[1]);
            }
        } else if (is_weighting(t)) {
            if (cfg.weighting) throw std::invalid_argument("template '" + raw + "': more than one weighting token");
            cfg.weighting = t;
        } else if (t == "psX") {
            if (cfg.prior_search || cfg.levels.contains("ps")) {
                throw std::invalid_argument("template '" + raw + "': duplicate ps token");
            }
            cfg.prior_search = true;
        } else if (std::find(kFlagTokens.begin(), kFlagTokens.end(), t) != kFlagTokens.end()) {
            if (!cfg.flags.insert(t).second) throw std::invalid_argument("template '" + raw + "': duplicate " + t);
            if (t == "fb" && cfg.levels.contains("fb")) {
                throw std::invalid_argument("template '" + raw + "': duplicate fb token");
            }
        } else if (std::regex_match(t, m, kNumericToken) &&
                   std::find(kNumericKeys.begin(), kNumericKeys.end(), m[1].str()) != kNumericKeys.end()) {
            const std::string key = m[1];
            if (cfg.levels.contains(key) || (key == "ps" && cfg.prior_search) || (key == "fb" && cfg.has("fb"))) {
                throw std::invalid_argument("template '" + raw + "': duplicate " + key + " token");
            }
            cfg.levels[key] = std::stoi(m[2]);
        } else {
            cfg.unknown.push_back(t);
        }
        first = false;
        if (end == name.size()) break;
    }
    if (!have_measure) throw std::invalid_argument("template '" + raw + "': no measure token");
    if (auto s = cfg.fold(); s && *s > 9) throw std::invalid_argument("template '" + raw + "': fold outside 0-9");
    return cfg;
}

std::string serialize_template(const TemplateConfig& cfg) {
    std::vector<std::string> tokens;
    if (cfg.model_marker) tokens.push_back("mnb");
    for (const auto& key : kOrder) {
        if (key == "@m") {
            tokens.push_back(to_string(cfg.measure) + cfg.measure_variant);
        } else if (key == "@bg") {
            if (cfg.background == BackgroundKind::Uniform) tokens.push_back("u");
            if (cfg.background == BackgroundKind::UniformCollection) {
                tokens.push_back("uc" + std::to_string(cfg.collection_level.value_or(1)));
            }
        } else if (key == "@w") {
            if (cfg.weighting) tokens.push_back(*cfg.weighting);
        } else if (key == "ps" && cfg.prior_search) {
            tokens.push_back("psX");
        } else {
            if (cfg.has(key)) tokens.push_back(key);
            if (auto v = cfg.level(key)) tokens.push_back(key + std::to_string(*v));
        }
    }
    tokens.insert(tokens.end(), cfg.unknown.begin(), cfg.unknown.end());
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out += '_';
        out += t;
    }
    return out;
}

WeightingConfig weighting_from_token(const std::string& token) {
    std::smatch m;
    WeightingConfig w;
    if (std::regex_match(token, m, kBm18Token)) {
        static const std::map<int, double> kLengthB = {{15, 0.0},  {16, 0.25},  {17, 0.5},
                                                       {18, 0.75}, {19, 0.875}, {20, 1.0}};
        w.scheme = WeightingScheme::Bm18ti;
        w.k1 = 1.2;
        w.b = kLengthB.at(std::stoi(m[1]));
        w.idf_exponent = 1.0;
        w.length_exponent = 1.0;
        const std::string variant = m[2];
        if (variant == "b") w.b = 0.5;
        if (variant == "c") w.idf_exponent = 1.5;
        if (variant == "d") w.length_exponent = 0.5;
    } else if (std::regex_match(token, m, kBm25Token)) {
        w.scheme = WeightingScheme::Bm25c;
        w.k1 = m[1] == "1" ? 1.2 : 2.0;
        w.b = 0.75;
    } else if (std::regex_match(token, m, kTixToken)) {
        // level sets the length normalization; the tXiX form also damps term counts
        w.scheme = WeightingScheme::Tix;
        w.b = 0.25 * (std::stoi(m[2]) - 1);
        w.idf_exponent = 1.0;
        w.tf_exponent = m[1] == "tXiX" ? 0.5 : 1.0;
    } else {
        throw std::invalid_argument("unknown weighting token '" + token + "'");
    }
    w.validate();
    return w;
}

ResolvedTemplate resolve_template(const TemplateConfig& cfg, const ModelConfig& base) {
    ResolvedTemplate r;
    r.model = base;
    auto& mc = r.model;
    if (cfg.weighting) mc.weighting = weighting_from_token(*cfg.weighting);
    if (cfg.background) mc.smoothing.background = *cfg.background;
    if (cfg.level("jm")) mc.smoothing.jm_lambda = kJmLevels[checked_level(cfg, "jm", 0, 6)];
    if (cfg.level("kdp")) mc.smoothing.dirichlet_mu = std::ldexp(1.0, checked_level(cfg, "kdp", 0, 30));
    if (cfg.level("mc")) mc.pruning.min_count = checked_level(cfg, "mc", 0, 1 << 20);
    if (cfg.level("mlc")) mc.pruning.min_label_count = static_cast<std::uint64_t>(checked_level(cfg, "mlc", 0, 1 << 20));
    if (cfg.level("pct")) mc.pruning.precomputed_prune = 0.1 * checked_level(cfg, "pct", 0, 1000);
    if (cfg.level("pci")) mc.pruning.online_prune = 0.25 * checked_level(cfg, "pci", 0, 1000);
    if (cfg.level("ps")) mc.prior_scale = checked_level(cfg, "ps", 0, 1000) / 5.0;
    mc.flags.kernel_densities = mc.flags.kernel_densities || cfg.has("kd");
    mc.flags.no_backoff = mc.flags.no_backoff || cfg.has("nobo");
    mc.flags.label_powerset = mc.flags.label_powerset || cfg.has("lp");
    if (cfg.level("cs")) {
        mc.flags.hierarchy_smoothing = true;
        if (mc.smoothing.hierarchy_mix == 0.0) mc.smoothing.hierarchy_mix = 0.5;
    }
    mc.flags.bm25_kernel = mc.flags.kernel_densities && mc.flags.no_backoff &&
                           mc.weighting.scheme == WeightingScheme::Bm25c;
    mc.validate();

    if (cfg.level("iw")) {
        r.transposed = true;
        r.instantiate.instantiate_weight = std::ldexp(1.0, checked_level(cfg, "iw", 0, 30) - 1);
    }
    if (cfg.level("thr")) r.workers = static_cast<std::size_t>(checked_level(cfg, "thr", 1, 4096));
    return r;
}

}  // namespace xmlc

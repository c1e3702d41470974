#include <fstream>
#include <sstream>

#include "xmlc/model.hpp"
#include "xmlc/text.hpp"

namespace xmlc {

namespace {

constexpr int kFormatVersion = 1;

void append_vector(std::string& out, std::span<const FeatureValue> v) {
    for (const auto& f : v) {
        out += ' ';
        append_int(out, f.id);
        out += ':';
        append_exact(out, f.value);
    }
}

class LineReader {
public:
    LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    std::vector<std::string_view> next(std::string_view keyword, std::size_t min_fields = 0) {
        do {
            if (!std::getline(in_, line_)) throw error("unexpected end of model file");
            ++number_;
        } while (is_blank(line_));
        auto tokens = split_ws(line_);
        if (tokens.empty() || tokens[0] != keyword) throw error("expected '" + std::string(keyword) + "'");
        if (tokens.size() < min_fields + 1) throw error("too few fields for '" + std::string(keyword) + "'");
        return tokens;
    }

    ParseError error(const std::string& what) const { return ParseError(source_, number_, what); }

    double real(std::string_view s) const {
        auto v = parse_double(s);
        if (!v) throw error("malformed number '" + std::string(s) + "'");
        return *v;
    }

    template <typename Int>
    Int integer(std::string_view s) const {
        auto v = parse_int<Int>(s);
        if (!v) throw error("malformed integer '" + std::string(s) + "'");
        return *v;
    }

    bool flag(std::string_view s) const { return integer<int>(s) != 0; }

    std::vector<FeatureValue> vector(std::span<const std::string_view> tokens) const {
        std::vector<FeatureValue> v;
        v.reserve(tokens.size());
        for (auto t : tokens) {
            auto colon = t.find(':');
            if (colon == std::string_view::npos) throw error("expected feature:value");
            v.push_back({integer<FeatureId>(t.substr(0, colon)), real(t.substr(colon + 1))});
        }
        return v;
    }

private:
    std::istream& in_;
    std::string source_;
    std::string line_;
    std::size_t number_ = 0;
};

const char* background_name(BackgroundKind k) {
    return k == BackgroundKind::Uniform ? "uniform" : "uniform_collection";
}

}  // namespace

void save_model(std::ostream& out, const SgmModel& model) {
    const auto& c = model.config_;
    std::string s;
    s += "xmlc-model " + std::to_string(kFormatVersion) + "\n";

    s += "weighting " + to_string(c.weighting.scheme);
    for (double x : {c.weighting.k1, c.weighting.b, c.weighting.idf_exponent, c.weighting.length_exponent,
                     c.weighting.tf_exponent}) {
        s += ' ';
        append_exact(s, x);
    }
    s += "\nsmoothing ";
    append_exact(s, c.smoothing.jm_lambda);
    s += ' ';
    append_exact(s, c.smoothing.dirichlet_mu);
    s += ' ';
    s += background_name(c.smoothing.background);
    s += ' ';
    append_exact(s, c.smoothing.collection_mix);
    s += ' ';
    append_exact(s, c.smoothing.hierarchy_mix);
    s += "\npruning ";
    append_exact(s, c.pruning.min_count);
    s += ' ';
    append_int(s, c.pruning.min_label_count);
    s += ' ';
    append_exact(s, c.pruning.precomputed_prune);
    s += ' ';
    append_exact(s, c.pruning.online_prune);
    s += ' ';
    append_int(s, c.pruning.online_prune_interval);
    s += "\nflags";
    for (bool b : {c.flags.kernel_densities, c.flags.no_backoff, c.flags.bm25_kernel, c.flags.label_powerset,
                   c.flags.hierarchy_smoothing}) {
        s += b ? " 1" : " 0";
    }
    s += "\nscoring ";
    append_exact(s, c.prior_scale);
    s += ' ';
    append_int(s, c.kernel_top_k);
    s += ' ';
    append_int(s, c.seed);
    s += "\nstats ";
    append_int(s, model.num_docs_);
    s += ' ';
    append_exact(s, model.stats_.avg_doc_len);
    s += ' ';
    append_int(s, model.stats_.num_docs);
    s += ' ';
    append_int(s, model.background_count_.size());
    s += '\n';
    for (auto f : model.vocabulary()) {
        s += "vocab ";
        append_int(s, f);
        s += ' ';
        append_int(s, model.stats_.df(f));
        s += ' ';
        append_exact(s, model.background_count_.at(f));
        s += '\n';
    }
    out << s;
    s.clear();

    const auto* ps = model.powerset();
    s += "powerset ";
    append_int(s, ps ? ps->size() : 0);
    s += '\n';
    if (ps) {
        for (ClassId i = 0; i < ps->size(); ++i) {
            s += "set ";
            append_int(s, i);
            s += ' ';
            s += labelset_key(ps->decode(i));
            s += '\n';
        }
    }
    s += "classes ";
    append_int(s, model.classes_.size());
    s += '\n';
    out << s;

    for (const auto& cls : model.classes_) {
        s.clear();
        s += "class ";
        append_int(s, cls.id);
        s += ' ';
        append_int(s, cls.doc_count);
        s += ' ';
        if (cls.parent) {
            append_int(s, *cls.parent);
        } else {
            s += '-';
        }
        s += ' ';
        append_int(s, cls.kernels.size());
        s += "\nw";
        append_vector(s, cls.weights);
        s += '\n';
        for (const auto& k : cls.kernels) {
            s += 'k';
            append_vector(s, k);
            s += '\n';
        }
        out << s;
    }
    out << "end\n";
}

void save_model(const std::filesystem::path& path, const SgmModel& model) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model " + path.string());
    save_model(out, model);
}

SgmModel load_model(std::istream& in, const std::string& source_name) {
    LineReader r(in, source_name);
    SgmModel m;
    auto& c = m.config_;

    auto header = r.next("xmlc-model", 1);
    if (r.integer<int>(header[1]) != kFormatVersion) throw r.error("unsupported model format version");

    auto t = r.next("weighting", 6);
    c.weighting.scheme = weighting_scheme_from_string(std::string(t[1]));
    c.weighting.k1 = r.real(t[2]);
    c.weighting.b = r.real(t[3]);
    c.weighting.idf_exponent = r.real(t[4]);
    c.weighting.length_exponent = r.real(t[5]);
    c.weighting.tf_exponent = r.real(t[6]);

    t = r.next("smoothing", 5);
    c.smoothing.jm_lambda = r.real(t[1]);
    c.smoothing.dirichlet_mu = r.real(t[2]);
    if (t[3] == "uniform") {
        c.smoothing.background = BackgroundKind::Uniform;
    } else if (t[3] == "uniform_collection") {
        c.smoothing.background = BackgroundKind::UniformCollection;
    } else {
        throw r.error("unknown background kind");
    }
    c.smoothing.collection_mix = r.real(t[4]);
    c.smoothing.hierarchy_mix = r.real(t[5]);

    t = r.next("pruning", 5);
    c.pruning.min_count = r.real(t[1]);
    c.pruning.min_label_count = r.integer<std::uint64_t>(t[2]);
    c.pruning.precomputed_prune = r.real(t[3]);
    c.pruning.online_prune = r.real(t[4]);
    c.pruning.online_prune_interval = r.integer<std::size_t>(t[5]);

    t = r.next("flags", 5);
    c.flags.kernel_densities = r.flag(t[1]);
    c.flags.no_backoff = r.flag(t[2]);
    c.flags.bm25_kernel = r.flag(t[3]);
    c.flags.label_powerset = r.flag(t[4]);
    c.flags.hierarchy_smoothing = r.flag(t[5]);

    t = r.next("scoring", 3);
    c.prior_scale = r.real(t[1]);
    c.kernel_top_k = r.integer<std::size_t>(t[2]);
    c.seed = r.integer<std::uint64_t>(t[3]);
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw r.error(e.what());
    }

    t = r.next("stats", 4);
    m.num_docs_ = r.integer<std::uint64_t>(t[1]);
    m.stats_.avg_doc_len = r.real(t[2]);
    m.stats_.num_docs = r.integer<std::uint64_t>(t[3]);
    const auto vocab = r.integer<std::size_t>(t[4]);
    std::vector<FeatureId> order;
    order.reserve(vocab);
    for (std::size_t i = 0; i < vocab; ++i) {
        t = r.next("vocab", 3);
        const auto f = r.integer<FeatureId>(t[1]);
        m.stats_.doc_freq.emplace(f, r.integer<std::uint64_t>(t[2]));
        m.background_count_.emplace(f, r.real(t[3]));
        order.push_back(f);
    }
    std::sort(order.begin(), order.end());
    for (auto f : order) m.background_total_ += m.background_count_.at(f);

    t = r.next("powerset", 1);
    const auto sets = r.integer<std::size_t>(t[1]);
    if (sets > 0) {
        LabelPowerset ps;
        for (std::size_t i = 0; i < sets; ++i) {
            t = r.next("set", 2);
            std::vector<LabelId> labels;
            std::string_view key = t[2];
            std::size_t pos = 0;
            while (pos <= key.size()) {
                auto comma = key.find(',', pos);
                if (comma == std::string_view::npos) comma = key.size();
                labels.push_back(r.integer<LabelId>(key.substr(pos, comma - pos)));
                pos = comma + 1;
            }
            if (ps.encode(labels) != r.integer<ClassId>(t[1])) throw r.error("label sets out of order");
        }
        m.powerset_ = std::move(ps);
    }

    t = r.next("classes", 1);
    const auto n = r.integer<std::size_t>(t[1]);
    m.classes_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        t = r.next("class", 4);
        ClassModel cls;
        cls.id = r.integer<ClassId>(t[1]);
        cls.doc_count = r.integer<std::uint64_t>(t[2]);
        cls.prior = static_cast<double>(cls.doc_count) / static_cast<double>(m.num_docs_);
        if (t[3] != "-") cls.parent = r.integer<LabelId>(t[3]);
        const auto kernels = r.integer<std::size_t>(t[4]);
        auto w = r.next("w");
        cls.weights = r.vector(std::span(w).subspan(1));
        for (const auto& x : cls.weights) cls.norm += x.value;
        for (std::size_t k = 0; k < kernels; ++k) {
            auto kt = r.next("k");
            cls.kernels.push_back(r.vector(std::span(kt).subspan(1)));
            double len = 0;
            for (const auto& x : cls.kernels.back()) len += x.value;
            cls.kernel_lengths.push_back(len);
        }
        m.classes_.push_back(std::move(cls));
    }
    r.next("end");
    m.rebuild_index();
    m.rebuild_parents();
    return m;
}

SgmModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model " + path.string());
    return load_model(in, path.string());
}

}  // namespace xmlc

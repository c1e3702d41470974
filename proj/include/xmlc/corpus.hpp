#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace xmlc {

using FeatureId = std::uint32_t;
using LabelId = std::uint32_t;
using DocId = std::uint64_t;

struct FeatureValue {
    FeatureId id;
    double value;

    friend bool operator==(const FeatureValue&, const FeatureValue&) = default;
};

/// One instance: sparse term counts (ids strictly increasing, values > 0)
/// and a sorted, duplicate-free label set. Test instances may be unlabeled.
struct SparseDocument {
    DocId doc_id = 0;
    std::vector<FeatureValue> features;
    std::vector<LabelId> labels;

    [[nodiscard]] double length() const noexcept;

    friend bool operator==(const SparseDocument&, const SparseDocument&) = default;
};

struct Corpus {
    std::vector<SparseDocument> documents;
    std::string source_name;

    [[nodiscard]] std::size_t size() const noexcept { return documents.size(); }
    [[nodiscard]] bool empty() const noexcept { return documents.empty(); }
};

// ---------------------------------------------------------------------------
// Dataset files
//
// One document per line:
//
//   [#<doc_id> ] [<label>(,[ ]<label>)* ]<feature>:<count>( <feature>:<count>)*
//
// Lines starting directly with a feature token are unlabeled. Without the
// optional `#<doc_id>` prefix the id is the zero-based physical line index.
// Blank lines are skipped.
// ---------------------------------------------------------------------------

/// Parse one line. Throws ParseError naming `line_number` (1-based).
SparseDocument parse_document_line(std::string_view line, std::size_t line_number,
                                   const std::string& source = "<input>");

Corpus parse_dataset(std::istream& in, std::string source_name);
Corpus parse_dataset(const std::filesystem::path& path);

/// Inverse of parse_document_line. The `#id` prefix is written only when
/// `write_id` is set.
std::string serialize_document(const SparseDocument& doc, bool write_id);

/// Writes ids explicitly whenever they differ from the output line index, so
/// that parse_dataset(write_dataset(c)) reproduces c.
void write_dataset(std::ostream& out, const Corpus& corpus);
void write_dataset(const std::filesystem::path& path, const Corpus& corpus);

// ---------------------------------------------------------------------------
// Segmentation and folds
// ---------------------------------------------------------------------------

struct Segmentation {
    Corpus base_train;
    Corpus ensemble_train;
};

/// Random split (without replacement) into a base-classifier portion and an
/// ensemble portion. Both keep the source order of their documents.
Segmentation segment(const Corpus& corpus, std::size_t base_size, std::size_t ensemble_size,
                     std::uint64_t seed);

inline constexpr std::size_t kDefaultBaseSize = 2341782;
inline constexpr std::size_t kDefaultEnsembleSize = 23654;

enum class FoldScheme { ExclusiveDev, RandomThirds, OrderedQuarters };

/// Folds 0-2 ExclusiveDev, 3-5 RandomThirds, 6-9 OrderedQuarters.
FoldScheme scheme_for_fold(int fold_index);

struct FoldSpec {
    FoldScheme scheme = FoldScheme::ExclusiveDev;
    int fold_index = 0;
    std::size_t dev_size = 1000;
    std::uint64_t seed = 0;

    static FoldSpec for_index(int fold_index, std::size_t dev_size, std::uint64_t seed) {
        return {scheme_for_fold(fold_index), fold_index, dev_size, seed};
    }
};

struct FoldSplit {
    Corpus dry_train;  // shuffled
    Corpus dry_dev;    // source order
};

FoldSplit make_fold(const Corpus& base_train, const FoldSpec& spec);

/// Seeded in-place permutation of the documents.
void shuffle_corpus(Corpus& corpus, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Label statistics
// ---------------------------------------------------------------------------

struct LabelStats {
    std::map<LabelId, std::uint64_t> label_freq;
    std::map<std::string, std::uint64_t> labelset_freq;  // key "1,2,7"
    std::uint64_t total_docs = 0;

    [[nodiscard]] std::uint64_t frequency(LabelId label) const;
};

/// Canonical key of a sorted label set.
std::string labelset_key(std::span<const LabelId> labels);

/// Unlabeled documents count towards total_docs only.
LabelStats labelset_stats(const Corpus& corpus);

// ---------------------------------------------------------------------------
// Label hierarchy
// ---------------------------------------------------------------------------

/// Parent/child edges between labels. File format: "parent child" per line.
class Hierarchy {
public:
    /// Returns false when the edge already existed. Throws on self-edges.
    bool add_edge(LabelId parent, LabelId child);

    /// Sorted parents; empty for labels the hierarchy does not know.
    [[nodiscard]] std::span<const LabelId> parents_of(LabelId label) const;

    [[nodiscard]] const std::set<std::pair<LabelId, LabelId>>& edges() const noexcept { return edges_; }
    [[nodiscard]] bool empty() const noexcept { return edges_.empty(); }

private:
    std::set<std::pair<LabelId, LabelId>> edges_;
    std::map<LabelId, std::vector<LabelId>> parents_;
};

Hierarchy parse_hierarchy(std::istream& in, const std::string& source_name);
Hierarchy parse_hierarchy(const std::filesystem::path& path);

}  // namespace xmlc

#pragma once

// Result files.
//
//   per-document:  doc_id,label:score label:score ...
//   submission:    doc_id,label label ...
//   transposed:    label doc:score doc:score ...
//
// Scores are written as fixed-point decimals with kScoreDigits fractional
// digits. Readers accept bare ids (score 0) wherever an id:score pair may
// appear, so submission files read as per-document files.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "xmlc/corpus.hpp"
#include "xmlc/inference.hpp"

namespace xmlc {

inline constexpr int kScoreDigits = 6;

struct LabelScore {
    LabelId label;
    double score;

    friend bool operator==(const LabelScore&, const LabelScore&) = default;
};

struct InstanceScore {
    DocId doc;
    double score;

    friend bool operator==(const InstanceScore&, const InstanceScore&) = default;
};

struct DocResult {
    DocId doc;
    std::vector<LabelScore> labels;

    friend bool operator==(const DocResult&, const DocResult&) = default;
};

struct LabelResult {
    LabelId label;
    std::vector<InstanceScore> instances;

    friend bool operator==(const LabelResult&, const LabelResult&) = default;
};

void write_document_results(std::ostream& out, std::span<const DocResult> results);
std::vector<DocResult> read_document_results(std::istream& in, const std::string& source);

/// One line per entry of `docs`, in that order; labels sorted ascending.
void write_submission(std::ostream& out, std::span<const DocId> docs,
                      const std::map<DocId, std::vector<LabelId>>& predictions);

void write_transposed(std::ostream& out, std::span<const LabelResult> results);
std::vector<LabelResult> read_transposed(std::istream& in, const std::string& source);

/// Per-label lists ordered by (score desc, doc asc), labels ascending.
std::vector<LabelResult> transpose_to_labels(std::span<const DocResult> results);
/// Per-document lists ordered by (score desc, label asc), documents ascending.
std::vector<DocResult> transpose_to_documents(std::span<const LabelResult> results);

/// Converts in-memory transposed predictions to the file representation.
std::vector<LabelResult> to_label_results(const TransposedPrediction& pred);

/// Label sets of a per-document result (scores dropped).
std::map<DocId, std::vector<LabelId>> label_sets(std::span<const DocResult> results);
/// Ranked label ids of a per-document result, in file order.
std::map<DocId, std::vector<LabelId>> label_rankings(std::span<const DocResult> results);

/// Gold label sets of a labeled corpus.
std::map<DocId, std::vector<LabelId>> gold_label_sets(const Corpus& corpus);

enum class TransposeDirection { DocumentsToLabels, LabelsToDocuments };

/// Reads `in` in the source format of `direction` and writes the transposed
/// file to `out`.
void transpose_file(std::istream& in, std::ostream& out, TransposeDirection direction, const std::string& source);

std::vector<DocResult> read_document_results(const std::filesystem::path& path);
std::vector<LabelResult> read_transposed(const std::filesystem::path& path);

}  // namespace xmlc

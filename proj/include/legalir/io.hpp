#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "legalir/common.hpp"
#include "legalir/ingest.hpp"

namespace legalir::io {

namespace fs = std::filesystem;

/// Six-decimal fixed-point, used by score dumps.
std::string format_fixed6(double value);
/// Shortest representation that parses back to the identical double.
std::string format_double(double value);
/// Strict parse of a finite double; throws DataError with `where` on failure.
double parse_double(std::string_view text, std::string_view where);

std::vector<std::string_view> split_tabs(std::string_view line);

/// `query_id<TAB>doc_id<TAB>score`, queries ascending, entries in rank order.
void write_score_dump(std::ostream& out, const RunSet& runs);

using PairScores = std::map<std::pair<std::string, std::string>, double>;

/// Parses a score dump; duplicate (query, doc) pairs and malformed lines throw
/// DataError naming `source` and the 1-based line number.
PairScores read_score_dump(std::istream& in, std::string_view source);
PairScores read_score_dump(const fs::path& path);

/// Groups pair scores into per-query ranked lists.
RunSet to_runs(const PairScores& scores);

/// `query_id<TAB>doc_id<TAB>rank<TAB>score<TAB>run_tag`.
void write_run_file(std::ostream& out, const RunSet& runs, std::string_view tag);
/// Lists are ordered by the rank column. Duplicate candidates within a query throw.
RunSet read_run_file(std::istream& in, std::string_view source);
RunSet read_run_file(const fs::path& path);

/// `{ "query_id": ["doc_id", ...] }`. A trailing ".txt" on any id is dropped
/// so label files keyed by file name match file-stem ids.
QrelSet read_qrels_json(std::istream& in, std::string_view source);
QrelSet read_qrels_json(const fs::path& path);
void write_qrels_json(std::ostream& out, const QrelSet& qrels);

std::string strip_txt_suffix(std::string_view id);

/// One JSON object per line with id, body, summary, trial_date, placeholder_count, token_length.
void write_documents_jsonl(std::ostream& out, const std::vector<CleanDocument>& docs);
std::vector<CleanDocument> read_documents_jsonl(std::istream& in, std::string_view source);
std::vector<CleanDocument> read_documents_jsonl(const fs::path& path);

/// Every `<id>.txt` file in `dir`, sorted by id.
std::vector<RawDocument> read_corpus_dir(const fs::path& dir);

std::string read_file(const fs::path& path);

/// Writes through a temporary sibling file and renames it over `path` once
/// `writer` has finished without throwing.
void atomic_write(const fs::path& path, const std::function<void(std::ostream&)>& writer);

}  // namespace legalir::io

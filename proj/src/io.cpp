#include "legalir/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace legalir::io {

using nlohmann::json;

std::string format_fixed6(double value)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", value);
    if (std::string_view(buf) == "-0.000000") {
        return "0.000000";
    }
    return buf;
}

std::string format_double(double value)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, std::string_view where)
{
    double value = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(value)) {
        throw DataError(std::string(where) + ": invalid number '" + std::string(text) + "'");
    }
    return value;
}

std::vector<std::string_view> split_tabs(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find('\t', start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

namespace {

std::string where(std::string_view source, std::size_t line_no)
{
    return std::string(source) + ":" + std::to_string(line_no);
}

std::string_view chomp(std::string_view line)
{
    if (!line.empty() && line.back() == '\r') {
        line.remove_suffix(1);
    }
    return line;
}

std::ifstream open_input(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open '" + path.string() + "'");
    }
    return in;
}

}  // namespace

void write_score_dump(std::ostream& out, const RunSet& runs)
{
    for (const auto& [qid, list] : runs) {
        for (const auto& e : list.entries) {
            out << qid << '\t' << e.doc_id << '\t' << format_fixed6(e.score) << '\n';
        }
    }
}

PairScores read_score_dump(std::istream& in, std::string_view source)
{
    PairScores scores;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto view = chomp(line);
        if (view.empty()) {
            continue;
        }
        auto fields = split_tabs(view);
        if (fields.size() != 3 || fields[0].empty() || fields[1].empty()) {
            throw DataError(where(source, line_no) + ": expected query_id<TAB>doc_id<TAB>score");
        }
        double score = parse_double(fields[2], where(source, line_no));
        auto key = std::make_pair(std::string(fields[0]), std::string(fields[1]));
        if (!scores.emplace(std::move(key), score).second) {
            throw DataError(where(source, line_no) + ": duplicate pair (" + std::string(fields[0]) + ", "
                            + std::string(fields[1]) + ")");
        }
    }
    return scores;
}

PairScores read_score_dump(const fs::path& path)
{
    auto in = open_input(path);
    return read_score_dump(in, path.string());
}

RunSet to_runs(const PairScores& scores)
{
    RunSet runs;
    for (const auto& [key, score] : scores) {
        auto& list = runs[key.first];
        list.query_id = key.first;
        list.entries.push_back({key.second, score});
    }
    for (auto& [qid, list] : runs) {
        list.sort();
    }
    return runs;
}

void write_run_file(std::ostream& out, const RunSet& runs, std::string_view tag)
{
    for (const auto& [qid, list] : runs) {
        std::size_t rank = 1;
        for (const auto& e : list.entries) {
            out << qid << '\t' << e.doc_id << '\t' << rank++ << '\t' << format_double(e.score) << '\t' << tag
                << '\n';
        }
    }
}

RunSet read_run_file(std::istream& in, std::string_view source)
{
    std::map<std::string, std::vector<std::pair<long, ScoredDoc>>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto view = chomp(line);
        if (view.empty()) {
            continue;
        }
        auto fields = split_tabs(view);
        if (fields.size() != 5 || fields[0].empty() || fields[1].empty()) {
            throw DataError(where(source, line_no)
                            + ": expected query_id<TAB>doc_id<TAB>rank<TAB>score<TAB>run_tag");
        }
        long rank = 0;
        auto res = std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), rank);
        if (res.ec != std::errc() || res.ptr != fields[2].data() + fields[2].size() || rank < 1) {
            throw DataError(where(source, line_no) + ": invalid rank '" + std::string(fields[2]) + "'");
        }
        double score = parse_double(fields[3], where(source, line_no));
        rows[std::string(fields[0])].emplace_back(rank, ScoredDoc{std::string(fields[1]), score});
    }

    RunSet runs;
    for (auto& [qid, entries] : rows) {
        std::stable_sort(entries.begin(), entries.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        ScoredList list;
        list.query_id = qid;
        std::set<std::string> seen;
        for (auto& [rank, doc] : entries) {
            if (!seen.insert(doc.doc_id).second) {
                throw DataError(std::string(source) + ": duplicate candidate '" + doc.doc_id + "' for query '"
                                + qid + "'");
            }
            list.entries.push_back(std::move(doc));
        }
        runs.emplace(qid, std::move(list));
    }
    return runs;
}

RunSet read_run_file(const fs::path& path)
{
    auto in = open_input(path);
    return read_run_file(in, path.string());
}

std::string strip_txt_suffix(std::string_view id)
{
    constexpr std::string_view suffix = ".txt";
    if (id.size() > suffix.size() && id.substr(id.size() - suffix.size()) == suffix) {
        id.remove_suffix(suffix.size());
    }
    return std::string(id);
}

QrelSet read_qrels_json(std::istream& in, std::string_view source)
{
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError(std::string(source) + ": " + e.what());
    }
    if (!doc.is_object()) {
        throw DataError(std::string(source) + ": qrels must be a JSON object");
    }
    QrelSet qrels;
    for (auto& [key, value] : doc.items()) {
        if (!value.is_array()) {
            throw DataError(std::string(source) + ": qrels entry for '" + key + "' must be an array");
        }
        auto& rel = qrels[strip_txt_suffix(key)];
        for (const auto& d : value) {
            if (!d.is_string() || d.get<std::string>().empty()) {
                throw DataError(std::string(source) + ": qrels for '" + key + "' must be non-empty strings");
            }
            rel.insert(strip_txt_suffix(d.get<std::string>()));
        }
    }
    return qrels;
}

QrelSet read_qrels_json(const fs::path& path)
{
    auto in = open_input(path);
    return read_qrels_json(in, path.string());
}

void write_qrels_json(std::ostream& out, const QrelSet& qrels)
{
    json doc = json::object();
    for (const auto& [qid, rel] : qrels) {
        doc[qid] = std::vector<std::string>(rel.begin(), rel.end());
    }
    out << doc.dump(1) << '\n';
}

void write_documents_jsonl(std::ostream& out, const std::vector<CleanDocument>& docs)
{
    for (const auto& d : docs) {
        json row;
        row["id"] = d.id;
        row["body"] = d.body;
        row["summary"] = d.summary ? json(*d.summary) : json(nullptr);
        row["trial_date"] = d.trial_date ? json(format_date(*d.trial_date)) : json(nullptr);
        row["placeholder_count"] = d.placeholder_count;
        row["token_length"] = d.token_length;
        out << row.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
    }
}

std::vector<CleanDocument> read_documents_jsonl(std::istream& in, std::string_view source)
{
    std::vector<CleanDocument> docs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (chomp(line).empty()) {
            continue;
        }
        try {
            auto row = json::parse(line);
            CleanDocument d;
            d.id = row.at("id").get<std::string>();
            d.body = row.at("body").get<std::string>();
            if (!row.at("summary").is_null()) {
                d.summary = row.at("summary").get<std::string>();
            }
            if (!row.at("trial_date").is_null()) {
                auto text = row.at("trial_date").get<std::string>();
                d.trial_date = parse_iso_date(text);
                if (!d.trial_date) {
                    throw DataError("invalid trial_date '" + text + "'");
                }
            }
            d.placeholder_count = row.at("placeholder_count").get<std::size_t>();
            d.token_length = row.at("token_length").get<std::size_t>();
            docs.push_back(std::move(d));
        } catch (const json::exception& e) {
            throw DataError(where(source, line_no) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError(where(source, line_no) + ": " + e.what());
        }
    }
    return docs;
}

std::vector<CleanDocument> read_documents_jsonl(const fs::path& path)
{
    auto in = open_input(path);
    return read_documents_jsonl(in, path.string());
}

std::string read_file(const fs::path& path)
{
    auto in = open_input(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<RawDocument> read_corpus_dir(const fs::path& dir)
{
    if (!fs::is_directory(dir)) {
        throw DataError("corpus directory '" + dir.string() + "' does not exist");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<RawDocument> docs;
    docs.reserve(files.size());
    for (const auto& f : files) {
        auto id = f.stem().string();
        if (id.empty()) {
            throw DataError("corpus file '" + f.string() + "' has an empty id");
        }
        docs.push_back({id, read_file(f)});
    }
    return docs;
}

void atomic_write(const fs::path& path, const std::function<void(std::ostream&)>& writer)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw DataError("cannot write '" + tmp.string() + "'");
        }
        try {
            writer(out);
        } catch (...) {
            out.close();
            fs::remove(tmp);
            throw;
        }
        out.flush();
        if (!out) {
            fs::remove(tmp);
            throw DataError("failed writing '" + tmp.string() + "'");
        }
    }
    fs::rename(tmp, path);
}

}  // namespace legalir::io

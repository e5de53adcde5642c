#include "legalir/index.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>

#include "legalir/common.hpp"

namespace legalir {

namespace {

constexpr char kMagic[8] = {'L', 'G', 'I', 'R', 'I', 'D', 'X', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T value)
{
    // Snapshots are little-endian; every supported target is as well.
    out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T read_pod(std::istream& in)
{
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof value);
    if (!in) {
        throw DataError("index snapshot truncated");
    }
    return value;
}

void write_string(std::ostream& out, const std::string& s)
{
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in)
{
    auto n = read_pod<std::uint32_t>(in);
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) {
        throw DataError("index snapshot truncated");
    }
    return s;
}

}  // namespace

std::optional<TermId> InvertedIndex::term_id(std::string_view term) const
{
    auto it = term_lookup_.find(std::string(term));
    if (it == term_lookup_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<DocOrdinal> InvertedIndex::ordinal(std::string_view doc_id) const
{
    auto it = doc_lookup_.find(std::string(doc_id));
    if (it == doc_lookup_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::uint32_t InvertedIndex::tf(TermId id, DocOrdinal doc) const
{
    const auto& list = postings_.at(id);
    auto it = std::lower_bound(list.begin(), list.end(), doc,
                               [](const Posting& p, DocOrdinal d) { return p.doc < d; });
    return (it != list.end() && it->doc == doc) ? it->tf : 0;
}

void InvertedIndex::rebuild_lookups()
{
    term_lookup_.clear();
    term_lookup_.reserve(terms_.size());
    for (TermId t = 0; t < terms_.size(); ++t) {
        term_lookup_.emplace(terms_[t], t);
    }
    doc_lookup_.clear();
    doc_lookup_.reserve(doc_ids_.size());
    for (DocOrdinal d = 0; d < doc_ids_.size(); ++d) {
        doc_lookup_.emplace(doc_ids_[d], d);
    }
}

InvertedIndex build_index(std::span<const CleanDocument> docs, const TokenizerConfig& config)
{
    config.validate();
    InvertedIndex index;
    index.config_ = config;

    // term -> postings accumulated in doc order, so each list is already sorted.
    std::map<std::string, std::vector<Posting>> accum;
    for (DocOrdinal d = 0; d < docs.size(); ++d) {
        const auto& doc = docs[d];
        if (index.doc_lookup_.contains(doc.id)) {
            throw DataError("duplicate document id '" + doc.id + "'");
        }
        index.doc_lookup_.emplace(doc.id, d);
        index.doc_ids_.push_back(doc.id);

        auto tokens = tokenize(doc.full_text(), config);
        index.doc_len_.push_back(static_cast<std::uint32_t>(tokens.size()));
        index.total_coll_tokens_ += tokens.size();

        std::sort(tokens.begin(), tokens.end());
        for (std::size_t i = 0; i < tokens.size();) {
            std::size_t j = i;
            while (j < tokens.size() && tokens[j] == tokens[i]) {
                ++j;
            }
            accum[tokens[i]].push_back({d, static_cast<std::uint32_t>(j - i)});
            i = j;
        }
    }

    index.terms_.reserve(accum.size());
    index.postings_.reserve(accum.size());
    index.coll_freq_.reserve(accum.size());
    for (auto& [term, list] : accum) {
        std::uint64_t cf = 0;
        for (const auto& p : list) {
            cf += p.tf;
        }
        index.terms_.push_back(term);
        index.coll_freq_.push_back(cf);
        index.postings_.push_back(std::move(list));
    }
    index.avgdl_ = docs.empty() ? 0.0
                                : static_cast<double>(index.total_coll_tokens_)
                                      / static_cast<double>(docs.size());
    index.rebuild_lookups();
    return index;
}

void InvertedIndex::save(std::ostream& out) const
{
    out.write(kMagic, sizeof kMagic);
    write_pod(out, kFormatVersion);
    write_pod<std::uint8_t>(out, config_.lowercase ? 1 : 0);
    write_pod<std::uint64_t>(out, config_.min_token_len);
    write_pod<std::uint64_t>(out, config_.ngram_lo);
    write_pod<std::uint64_t>(out, config_.ngram_hi);

    write_pod<std::uint64_t>(out, doc_ids_.size());
    for (std::size_t d = 0; d < doc_ids_.size(); ++d) {
        write_string(out, doc_ids_[d]);
        write_pod(out, doc_len_[d]);
    }
    write_pod<std::uint64_t>(out, terms_.size());
    for (std::size_t t = 0; t < terms_.size(); ++t) {
        write_string(out, terms_[t]);
        write_pod<std::uint64_t>(out, postings_[t].size());
        for (const auto& p : postings_[t]) {
            write_pod(out, p.doc);
            write_pod(out, p.tf);
        }
    }
    if (!out) {
        throw DataError("failed writing index snapshot");
    }
}

InvertedIndex InvertedIndex::load(std::istream& in)
{
    char magic[sizeof kMagic];
    in.read(magic, sizeof magic);
    if (!in || !std::equal(magic, magic + sizeof magic, kMagic)) {
        throw DataError("not an index snapshot (bad magic)");
    }
    auto version = read_pod<std::uint32_t>(in);
    if (version != kFormatVersion) {
        throw DataError("unsupported index snapshot version " + std::to_string(version));
    }
    InvertedIndex index;
    index.config_.lowercase = read_pod<std::uint8_t>(in) != 0;
    index.config_.min_token_len = read_pod<std::uint64_t>(in);
    index.config_.ngram_lo = read_pod<std::uint64_t>(in);
    index.config_.ngram_hi = read_pod<std::uint64_t>(in);
    index.config_.validate();

    auto ndocs = read_pod<std::uint64_t>(in);
    for (std::uint64_t d = 0; d < ndocs; ++d) {
        index.doc_ids_.push_back(read_string(in));
        index.doc_len_.push_back(read_pod<std::uint32_t>(in));
        index.total_coll_tokens_ += index.doc_len_.back();
    }
    auto nterms = read_pod<std::uint64_t>(in);
    for (std::uint64_t t = 0; t < nterms; ++t) {
        index.terms_.push_back(read_string(in));
        auto n = read_pod<std::uint64_t>(in);
        std::vector<Posting> list;
        list.reserve(n);
        std::uint64_t cf = 0;
        for (std::uint64_t k = 0; k < n; ++k) {
            Posting p{};
            p.doc = read_pod<DocOrdinal>(in);
            p.tf = read_pod<std::uint32_t>(in);
            if (p.doc >= ndocs || (!list.empty() && list.back().doc >= p.doc)) {
                throw DataError("index snapshot has corrupt postings for term '" + index.terms_.back() + "'");
            }
            cf += p.tf;
            list.push_back(p);
        }
        index.coll_freq_.push_back(cf);
        index.postings_.push_back(std::move(list));
    }
    index.avgdl_ = ndocs == 0 ? 0.0
                              : static_cast<double>(index.total_coll_tokens_) / static_cast<double>(ndocs);
    index.rebuild_lookups();
    return index;
}

}  // namespace legalir

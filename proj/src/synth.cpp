#include "legalir/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "legalir/io.hpp"

namespace legalir {

void SyntheticSpec::validate() const
{
    if (num_queries < 4) {
        throw UsageError("synthetic corpus needs at least 4 queries");
    }
    if (!(relevant_per_query >= 1.0 && std::isfinite(relevant_per_query))) {
        throw UsageError("relevant_per_query must be >= 1");
    }
    if (vocab_size < 50) {
        throw UsageError("vocab_size must be >= 50");
    }
    if (rare_terms_per_query < 1) {
        throw UsageError("rare_terms_per_query must be >= 1");
    }
    if (!(overlap_strength > 0.0 && overlap_strength <= 1.0)) {
        throw UsageError("overlap_strength must be in (0, 1]");
    }
    auto per_query = static_cast<std::size_t>(std::ceil(relevant_per_query)) + 1;
    if (num_candidates < num_queries * per_query + 10) {
        throw UsageError("num_candidates too small for the requested relevance density");
    }
}

namespace {

using Rng = std::mt19937_64;
using std::chrono::sys_days;

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";
constexpr std::size_t kTopicWords = 25;
constexpr std::size_t kHubQueries = 6;
constexpr std::size_t kExternalPool = 60;

constexpr std::string_view kMonths[] = {"January", "February", "March",     "April",   "May",      "June",
                                        "July",    "August",   "September", "October", "November", "December"};

constexpr std::string_view kFrench[] = {"le",   "la",  "les", "de",  "des", "du",   "et",  "est",
                                        "dans", "pour", "que", "qui", "une", "sur", "avec", "par"};

// Distinct pronounceable word for every index.
std::string make_word(std::size_t index)
{
    const std::size_t base = kConsonants.size() * kVowels.size();
    std::size_t n = index + base;
    std::string word;
    while (n > 0) {
        std::size_t syl = n % base;
        word.insert(word.begin(), kVowels[syl % kVowels.size()]);
        word.insert(word.begin(), kConsonants[syl / kVowels.size()]);
        n /= base;
    }
    return word;
}

std::string spoken_date(sys_days day)
{
    std::chrono::year_month_day ymd{day};
    return std::string(kMonths[static_cast<unsigned>(ymd.month()) - 1]) + " " +
           std::to_string(static_cast<unsigned>(ymd.day())) + ", " + std::to_string(static_cast<int>(ymd.year()));
}

enum class Role { query, relevant, late, hub, filler };

struct DocPlan {
    Role role = Role::filler;
    std::size_t topic = 0;
    sys_days date;
    /// Planted rare terms, possibly repeated.
    std::vector<std::string> planted;
    std::size_t owner = 0;
};

class Generator {
  public:
    explicit Generator(const SyntheticSpec& spec) : spec_(spec), rng_(spec.seed)
    {
        std::vector<double> weights(spec.vocab_size);
        for (std::size_t i = 0; i < weights.size(); ++i) {
            weights[i] = 1.0 / static_cast<double>(i + 1);
        }
        zipf_ = std::discrete_distribution<std::size_t>(weights.begin(), weights.end());
        num_topics_ = std::max<std::size_t>(2, spec.num_queries / 5);
    }

    SyntheticCorpus run();

  private:
    std::size_t uniform(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
    bool coin(double p) { return std::bernoulli_distribution(p)(rng_); }

    std::string common_word() { return make_word(zipf_(rng_)); }
    std::string topic_word(std::size_t topic)
    {
        return make_word(spec_.vocab_size + topic * kTopicWords + uniform(kTopicWords));
    }
    std::string rare_word(std::size_t query, std::size_t k)
    {
        return make_word(spec_.vocab_size + num_topics_ * kTopicWords + query * spec_.rare_terms_per_query + k);
    }
    sys_days random_day(int from_year, int to_year)
    {
        sys_days lo{std::chrono::year{from_year} / 1 / 1};
        sys_days hi{std::chrono::year{to_year} / 12 / 31};
        return lo + std::chrono::days{static_cast<long>(uniform(static_cast<std::size_t>((hi - lo).count()) + 1))};
    }

    std::vector<std::string> plant(std::size_t query, std::size_t count);
    std::string render(const DocPlan& plan);

    const SyntheticSpec& spec_;
    Rng rng_;
    std::discrete_distribution<std::size_t> zipf_;
    std::size_t num_topics_ = 2;
};

std::vector<std::string> Generator::plant(std::size_t query, std::size_t count)
{
    std::vector<std::size_t> idx(spec_.rare_terms_per_query);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng_);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < std::min(count, idx.size()); ++i) {
        std::size_t reps = 1 + uniform(2);
        for (std::size_t r = 0; r < reps; ++r) {
            out.push_back(rare_word(query, idx[i]));
        }
    }
    return out;
}

std::string Generator::render(const DocPlan& plan)
{
    bool is_query = plan.role == Role::query;
    std::size_t paragraphs = is_query ? 5 : 4 + uniform(5);
    std::vector<std::vector<std::string>> paras(paragraphs);
    for (auto& p : paras) {
        std::size_t len = 30 + uniform(31);
        for (std::size_t i = 0; i < len; ++i) {
            p.push_back(coin(0.25) ? topic_word(plan.topic) : common_word());
        }
    }
    for (const auto& term : plan.planted) {
        auto& p = paras[uniform(paras.size())];
        p.insert(p.begin() + static_cast<std::ptrdiff_t>(uniform(p.size() + 1)), term);
    }
    std::size_t placeholders = uniform(4);
    for (std::size_t i = 0; i < placeholders; ++i) {
        auto& p = paras[uniform(paras.size())];
        p.insert(p.begin() + static_cast<std::ptrdiff_t>(uniform(p.size() + 1)),
                 std::string(kPlaceholders[uniform(std::size(kPlaceholders))]));
    }

    std::ostringstream out;
    out << "Federal Court of Synthetica\n";
    out << "Docket " << make_word(uniform(spec_.vocab_size)) << " v. " << make_word(uniform(spec_.vocab_size))
        << "\n";
    out << "Judgment delivered " << spoken_date(plan.date) << "\n\n";
    std::size_t number = 1;
    auto emit = [&](const std::vector<std::string>& words) {
        out << '[' << number++ << "] ";
        for (std::size_t i = 0; i < words.size(); ++i) {
            out << (i ? " " : "") << words[i];
        }
        out << ".\n\n";
    };
    emit(paras[0]);
    if (coin(0.1)) {
        out << "Summary:\n";
        for (std::size_t i = 0; i < 20; ++i) {
            out << (i ? " " : "") << (coin(0.3) ? topic_word(plan.topic) : common_word());
        }
        out << ".\n\n";
    }
    for (std::size_t i = 1; i < paras.size(); ++i) {
        if (i == 2 && coin(0.3)) {
            // An older cited decision; the trial date is the latest date.
            out << "The earlier ruling of " << spoken_date(plan.date - std::chrono::days{400 + uniform(3000)})
                << " was considered.\n\n";
        }
        emit(paras[i]);
    }
    if (coin(0.05)) {
        out << '[' << number++ << "] ";
        for (std::size_t i = 0; i < 30; ++i) {
            out << (i ? " " : "") << kFrench[uniform(std::size(kFrench))];
        }
        out << ".\n";
    }
    return out.str();
}

std::string padded_id(std::size_t n)
{
    std::string s = std::to_string(n);
    return std::string(s.size() < 6 ? 6 - s.size() : 0, '0') + s;
}

SyntheticCorpus Generator::run()
{
    const std::size_t nq = spec_.num_queries;
    const std::size_t nc = spec_.num_candidates;
    std::size_t total = nq + nc;

    std::vector<std::size_t> perm(total);
    std::iota(perm.begin(), perm.end(), 1);
    std::shuffle(perm.begin(), perm.end(), rng_);
    std::vector<std::string> ids(total);
    for (std::size_t i = 0; i < total; ++i) {
        ids[i] = padded_id(perm[i]);
    }

    std::vector<DocPlan> plans(total);
    auto base_rel = static_cast<std::size_t>(std::floor(spec_.relevant_per_query));
    double extra = spec_.relevant_per_query - static_cast<double>(base_rel);
    std::size_t overlap = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(spec_.overlap_strength * static_cast<double>(spec_.rare_terms_per_query))));

    SyntheticCorpus corpus;
    std::vector<std::vector<std::size_t>> relevant(nq);
    std::vector<std::size_t> late(nq);
    std::size_t next = nq;
    for (std::size_t q = 0; q < nq; ++q) {
        DocPlan& qp = plans[q];
        qp.role = Role::query;
        qp.topic = uniform(num_topics_);
        qp.date = random_day(2012, 2020);
        qp.owner = q;
        for (std::size_t k = 0; k < spec_.rare_terms_per_query; ++k) {
            std::size_t reps = 1 + uniform(2);
            for (std::size_t r = 0; r < reps; ++r) {
                qp.planted.push_back(rare_word(q, k));
            }
        }
    }
    for (std::size_t q = 0; q < nq; ++q) {
        std::size_t n_rel = base_rel + (coin(extra) ? 1 : 0);
        for (std::size_t r = 0; r < n_rel; ++r) {
            DocPlan& cp = plans[next];
            cp.role = Role::relevant;
            cp.topic = plans[q].topic;
            cp.owner = q;
            cp.date = plans[q].date - std::chrono::days{200 + uniform(3500)};
            cp.planted = plant(q, overlap);
            relevant[q].push_back(next++);
        }
        DocPlan& lp = plans[next];
        lp.role = Role::late;
        lp.topic = plans[q].topic;
        lp.owner = q;
        lp.date = plans[q].date + std::chrono::days{30 + uniform(1500)};
        lp.planted = plant(q, overlap);
        late[q] = next++;
    }
    std::size_t hubs = std::max<std::size_t>(1, nc * 3 / 100);
    std::vector<std::vector<std::size_t>> hubs_of(nq);
    for (std::size_t h = 0; h < hubs && next < total; ++h) {
        DocPlan& hp = plans[next];
        hp.role = Role::hub;
        hp.topic = uniform(num_topics_);
        hp.date = random_day(2000, 2008);
        for (std::size_t i = 0; i < kHubQueries; ++i) {
            std::size_t q = uniform(nq);
            auto terms = plant(q, 2);
            hp.planted.insert(hp.planted.end(), terms.begin(), terms.end());
            hubs_of[q].push_back(next);
        }
        ++next;
    }
    for (; next < total; ++next) {
        plans[next].role = Role::filler;
        plans[next].topic = uniform(num_topics_);
        plans[next].date = random_day(2000, 2020);
    }

    corpus.documents.reserve(total);
    for (std::size_t i = 0; i < total; ++i) {
        corpus.documents.push_back({ids[i], render(plans[i])});
    }
    std::sort(corpus.documents.begin(), corpus.documents.end(),
              [](const RawDocument& a, const RawDocument& b) { return a.id < b.id; });

    for (std::size_t q = 0; q < nq; ++q) {
        corpus.query_ids.push_back(ids[q]);
        auto& rel = corpus.qrels[ids[q]];
        for (std::size_t c : relevant[q]) {
            rel.insert(ids[c]);
        }
    }
    std::sort(corpus.query_ids.begin(), corpus.query_ids.end());

    // Dense-model stand-ins: relevant pairs get a shifted score under unit noise.
    std::normal_distribution<double> noise(0.0, 1.0);
    auto external = [&](double rel_shift, double late_shift, double hub_shift) {
        RunSet runs;
        for (std::size_t q = 0; q < nq; ++q) {
            std::map<std::size_t, double> pool;
            for (std::size_t c : relevant[q]) {
                pool[c] = rel_shift;
            }
            pool[late[q]] = late_shift;
            for (std::size_t c : hubs_of[q]) {
                pool.emplace(c, hub_shift);
            }
            for (std::size_t i = 0; i < kExternalPool; ++i) {
                pool.emplace(nq + uniform(nc), 0.0);
            }
            std::vector<ScoredDoc> entries;
            for (const auto& [c, shift] : pool) {
                entries.push_back({ids[c], shift + noise(rng_)});
            }
            runs[ids[q]] = make_scored_list(ids[q], std::move(entries));
        }
        return runs;
    };
    corpus.sailer = external(2.0, 1.0, 0.5);
    corpus.delta = external(1.5, 0.5, 0.5);

    std::vector<std::string> order = corpus.query_ids;
    std::shuffle(order.begin(), order.end(), rng_);
    std::size_t n_train = nq / 2;
    std::size_t n_valid = nq / 4;
    for (std::size_t i = 0; i < order.size(); ++i) {
        QrelSet& dst = i < n_train ? corpus.train : (i < n_train + n_valid ? corpus.valid : corpus.test);
        dst[order[i]] = corpus.qrels.at(order[i]);
    }
    return corpus;
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    io::atomic_write(path, [&](std::ostream& out) { out << text; });
}

}  // namespace

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec)
{
    spec.validate();
    return Generator(spec).run();
}

void write_synthetic(const SyntheticCorpus& corpus, const std::filesystem::path& dir)
{
    namespace fs = std::filesystem;
    fs::create_directories(dir / "corpus");
    fs::create_directories(dir / "queries");
    std::set<std::string> queries(corpus.query_ids.begin(), corpus.query_ids.end());
    for (const auto& doc : corpus.documents) {
        write_text(dir / "corpus" / (doc.id + ".txt"), doc.text);
        if (queries.contains(doc.id)) {
            write_text(dir / "queries" / (doc.id + ".txt"), doc.text);
        }
    }
    auto qrels = [&](const char* name, const QrelSet& q) {
        io::atomic_write(dir / name, [&](std::ostream& out) { io::write_qrels_json(out, q); });
    };
    qrels("qrels_train.json", corpus.train);
    qrels("qrels_valid.json", corpus.valid);
    qrels("qrels_test.json", corpus.test);
    qrels("qrels_all.json", corpus.qrels);
    io::atomic_write(dir / "sailer.tsv", [&](std::ostream& out) { io::write_score_dump(out, corpus.sailer); });
    io::atomic_write(dir / "delta.tsv", [&](std::ostream& out) { io::write_score_dump(out, corpus.delta); });
    write_text(dir / "pipeline.cfg", "# synthetic case-retrieval run\n"
                                     "task = task1\n"
                                     "corpus_dir = corpus\n"
                                     "queries_dir = queries\n"
                                     "qrels_train = qrels_train.json\n"
                                     "qrels_valid = qrels_valid.json\n"
                                     "qrels_test = qrels_test.json\n"
                                     "external_scores = SAILER:sailer.tsv,DELTA:delta.tsv\n"
                                     "schema = task1_v1\n"
                                     "output_dir = out\n");
}

}  // namespace legalir

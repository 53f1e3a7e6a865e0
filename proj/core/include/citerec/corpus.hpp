#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "citerec/date.hpp"

namespace citerec {

/// One patent document as ingested from the JSONL corpus.
struct PatentRecord {
    std::string pub_number;               // unique id, e.g. "US-20230123456-A1"
    std::string title;
    std::string abstract_text;
    Date filing_date;
    std::string ipc_main;                 // primary classification code
    std::vector<std::string> ipc_codes;   // full classification list
    std::vector<std::string> citations;   // cited pub_numbers (may dangle)

    bool operator==(const PatentRecord&) const = default;
};

/// In-memory corpus keyed by pub_number, with a date index for time-ordered
/// traversal. Insertion order does not matter: all iteration helpers are
/// deterministic (dates ascending, ids ascending within a date).
class CorpusStore {
  public:
    void insert(PatentRecord rec);  // throws DuplicateIdError

    bool contains(const std::string& pub_number) const;
    const PatentRecord* find(const std::string& pub_number) const;  // nullptr if absent
    const PatentRecord& at(const std::string& pub_number) const;    // throws UnknownIdError

    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    Date min_date() const;  // throws EmptyCorpusError when empty
    Date max_date() const;

    /// Dates ascending; ids within each date ascending.
    const std::map<Date, std::vector<std::string>>& date_index() const {
        return date_index_;
    }

    /// All records ordered by (filing_date, pub_number).
    std::vector<const PatentRecord*> records_in_date_order() const;

  private:
    std::unordered_map<std::string, PatentRecord> records_;
    std::map<Date, std::vector<std::string>> date_index_;
};

/// Counters describing a citation-resolution pass over a corpus.
struct ResolveStats {
    std::size_t records = 0;
    std::size_t citations_total = 0;        // citation entries across all records
    std::size_t dropped_missing = 0;        // cited id not present in the corpus
    std::size_t dropped_not_earlier = 0;    // cited record not filed strictly earlier
    std::size_t dropped_same_date = 0;      // subset of dropped_not_earlier
    std::size_t queries_with_ground_truth = 0;
};

/// Resolved relevance set for one query patent: the cited documents that
/// exist in the corpus and were filed strictly before the query.
struct GroundTruth {
    std::string query_id;
    std::unordered_set<std::string> relevant;
};

struct ResolveResult {
    std::map<std::string, GroundTruth> ground_truth;  // only non-empty sets
    ResolveStats stats;
};

/// Strict JSONL loader: one JSON object per line with fields pub_number,
/// title, abstract, filing_date, ipc_main, ipc_codes, citations. Blank lines
/// are skipped; anything else malformed raises MalformedLineError with the
/// 1-based line number. Duplicate pub_numbers raise DuplicateIdError. An
/// input yielding zero records raises EmptyCorpusError.
CorpusStore load_corpus(const std::filesystem::path& path);

/// Writes records in (filing_date, pub_number) order, one JSON object per
/// line with a fixed key order, so equal corpora serialize byte-identically.
void write_corpus(const CorpusStore& store, const std::filesystem::path& path);

ResolveResult resolve_citations(const CorpusStore& store);

/// Records with from <= filing_date <= to, grouped by date ascending and id
/// ascending within a date. Throws InvalidRangeError when from > to.
std::vector<std::pair<Date, std::vector<const PatentRecord*>>> queries_by_date(
    const CorpusStore& store, Date from, Date to);

}  // namespace citerec

#include "citerec/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "citerec/error.hpp"
#include "citerec/util.hpp"

namespace citerec {

using nlohmann::json;

void CorpusStore::insert(PatentRecord rec) {
    auto [it, inserted] = records_.try_emplace(rec.pub_number, std::move(rec));
    if (!inserted) throw DuplicateIdError(it->first);
    auto& ids = date_index_[it->second.filing_date];
    ids.insert(std::lower_bound(ids.begin(), ids.end(), it->first), it->first);
}

bool CorpusStore::contains(const std::string& pub_number) const {
    return records_.contains(pub_number);
}

const PatentRecord* CorpusStore::find(const std::string& pub_number) const {
    auto it = records_.find(pub_number);
    return it == records_.end() ? nullptr : &it->second;
}

const PatentRecord& CorpusStore::at(const std::string& pub_number) const {
    const PatentRecord* rec = find(pub_number);
    if (!rec) throw UnknownIdError(pub_number);
    return *rec;
}

Date CorpusStore::min_date() const {
    if (date_index_.empty()) throw EmptyCorpusError("corpus has no records");
    return date_index_.begin()->first;
}

Date CorpusStore::max_date() const {
    if (date_index_.empty()) throw EmptyCorpusError("corpus has no records");
    return date_index_.rbegin()->first;
}

std::vector<const PatentRecord*> CorpusStore::records_in_date_order() const {
    std::vector<const PatentRecord*> out;
    out.reserve(records_.size());
    for (const auto& [date, ids] : date_index_)
        for (const auto& id : ids) out.push_back(&records_.at(id));
    return out;
}

namespace {

std::string trimmed(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string require_string(const json& obj, const char* key, std::size_t line_no) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw MalformedLineError(line_no, std::string("missing field '") + key + "'");
    if (!it->is_string())
        throw MalformedLineError(line_no, std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

std::vector<std::string> require_string_list(const json& obj, const char* key,
                                             std::size_t line_no) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw MalformedLineError(line_no, std::string("missing field '") + key + "'");
    if (!it->is_array())
        throw MalformedLineError(line_no, std::string("field '") + key + "' must be an array");
    std::vector<std::string> out;
    out.reserve(it->size());
    for (const auto& v : *it) {
        if (!v.is_string())
            throw MalformedLineError(line_no,
                                     std::string("field '") + key + "' must contain strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

PatentRecord parse_record(const std::string& line, std::size_t line_no) {
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded()) throw MalformedLineError(line_no, "invalid JSON");
    if (!obj.is_object()) throw MalformedLineError(line_no, "line is not a JSON object");

    PatentRecord rec;
    rec.pub_number = require_string(obj, "pub_number", line_no);
    if (rec.pub_number.empty()) throw MalformedLineError(line_no, "pub_number is empty");
    rec.title = require_string(obj, "title", line_no);
    rec.abstract_text = require_string(obj, "abstract", line_no);
    if (trimmed(rec.abstract_text).empty())
        throw MalformedLineError(line_no, "abstract is empty");

    std::string date_text = require_string(obj, "filing_date", line_no);
    auto date = Date::parse(date_text);
    if (!date)
        throw MalformedLineError(line_no, "filing_date '" + date_text +
                                              "' is not a valid YYYY-MM-DD date");
    rec.filing_date = *date;

    rec.ipc_main = require_string(obj, "ipc_main", line_no);
    rec.ipc_codes = require_string_list(obj, "ipc_codes", line_no);
    rec.citations = require_string_list(obj, "citations", line_no);
    for (const auto& c : rec.citations)
        if (trimmed(c).empty())
            throw MalformedLineError(line_no, "citations contains an empty id");
    return rec;
}

}  // namespace

CorpusStore load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus: " + path.string());

    CorpusStore store;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trimmed(line).empty()) continue;
        PatentRecord rec = parse_record(line, line_no);
        std::string id = rec.pub_number;
        try {
            store.insert(std::move(rec));
        } catch (const DuplicateIdError&) {
            throw DuplicateIdError(line_no, id);
        }
    }
    if (in.bad()) throw IoError("read failed: " + path.string());
    if (store.empty()) throw EmptyCorpusError("no records in " + path.string());
    return store;
}

void write_corpus(const CorpusStore& store, const std::filesystem::path& path) {
    std::ostringstream out;
    for (const PatentRecord* rec : store.records_in_date_order()) {
        // Fixed key order so identical corpora produce identical bytes.
        json obj = json::object();
        obj["pub_number"] = rec->pub_number;
        obj["title"] = rec->title;
        obj["abstract"] = rec->abstract_text;
        obj["filing_date"] = rec->filing_date.to_string();
        obj["ipc_main"] = rec->ipc_main;
        obj["ipc_codes"] = rec->ipc_codes;
        obj["citations"] = rec->citations;
        out << obj.dump() << '\n';
    }
    write_file_atomic(path, out.str());
}

ResolveResult resolve_citations(const CorpusStore& store) {
    ResolveResult result;
    result.stats.records = store.size();
    for (const PatentRecord* rec : store.records_in_date_order()) {
        GroundTruth gt;
        gt.query_id = rec->pub_number;
        for (const auto& cited_id : rec->citations) {
            ++result.stats.citations_total;
            const PatentRecord* cited = store.find(cited_id);
            if (!cited) {
                ++result.stats.dropped_missing;
                continue;
            }
            if (!(cited->filing_date < rec->filing_date)) {
                ++result.stats.dropped_not_earlier;
                if (cited->filing_date == rec->filing_date)
                    ++result.stats.dropped_same_date;
                continue;
            }
            gt.relevant.insert(cited_id);
        }
        if (!gt.relevant.empty()) {
            ++result.stats.queries_with_ground_truth;
            result.ground_truth.emplace(rec->pub_number, std::move(gt));
        }
    }
    return result;
}

std::vector<std::pair<Date, std::vector<const PatentRecord*>>> queries_by_date(
    const CorpusStore& store, Date from, Date to) {
    if (to < from)
        throw InvalidRangeError("date range is inverted: " + from.to_string() + " > " +
                                to.to_string());
    std::vector<std::pair<Date, std::vector<const PatentRecord*>>> out;
    auto begin = store.date_index().lower_bound(from);
    auto end = store.date_index().upper_bound(to);
    for (auto it = begin; it != end; ++it) {
        std::vector<const PatentRecord*> group;
        group.reserve(it->second.size());
        for (const auto& id : it->second) group.push_back(&store.at(id));
        out.emplace_back(it->first, std::move(group));
    }
    return out;
}

}  // namespace citerec

#include "memmatch/corpus.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "memmatch/io.hpp"
#include "memmatch/text.hpp"

namespace memmatch {

using nlohmann::json;

void WikiStore::add_sentence(const std::string& title, int sentence_index, const std::string& text) {
    if (sentence_index < 0) throw std::invalid_argument("negative sentence index for title " + title);
    sentences_[{title, sentence_index}] = text;
    indexes_fresh_ = false;
}

void WikiStore::rebuild_indexes() const {
    if (indexes_fresh_) return;
    order_.clear();
    ids_.clear();
    pointers_.clear();
    title_infos_.clear();
    first_token_index_.clear();
    norm_text_index_.clear();

    std::set<std::string> seen_titles;
    for (const auto& [key, text] : sentences_) {
        int64_t id = static_cast<int64_t>(order_.size());
        order_.push_back(key);
        ids_[key] = id;
        pointers_.push_back(EvidencePointer{key.first, key.second});
        seen_titles.insert(key.first);
        auto norm = normalize_text(text);
        if (!norm.empty()) norm_text_index_.emplace(std::move(norm), pointers_.back());
    }
    for (const auto& t : seen_titles) {
        TitleInfo info{t, normalize_tokens(t)};
        if (info.norm_tokens.empty()) continue;  // pure-parenthetical titles can't be covered
        first_token_index_[info.norm_tokens.front()].push_back(static_cast<int>(title_infos_.size()));
        title_infos_.push_back(std::move(info));
    }
    indexes_fresh_ = true;
}

const std::vector<WikiStore::TitleInfo>& WikiStore::title_infos() const {
    rebuild_indexes();
    return title_infos_;
}

const std::unordered_map<std::string, std::vector<int>>& WikiStore::first_token_index() const {
    rebuild_indexes();
    return first_token_index_;
}

const std::string* WikiStore::find(const EvidencePointer& ptr) const {
    auto it = sentences_.find({ptr.page_title, ptr.sentence_index});
    return it == sentences_.end() ? nullptr : &it->second;
}

std::vector<int> WikiStore::sentence_indices(const std::string& title) const {
    std::vector<int> out;
    for (auto it = sentences_.lower_bound({title, 0});
         it != sentences_.end() && it->first.first == title; ++it)
        out.push_back(it->first.second);
    return out;
}

int64_t WikiStore::sentence_id(const EvidencePointer& ptr) const {
    rebuild_indexes();
    auto it = ids_.find({ptr.page_title, ptr.sentence_index});
    return it == ids_.end() ? -1 : it->second;
}

const EvidencePointer& WikiStore::pointer_of(int64_t id) const {
    rebuild_indexes();
    return pointers_.at(static_cast<size_t>(id));
}

const std::string& WikiStore::text_of(int64_t id) const {
    rebuild_indexes();
    return sentences_.at(order_.at(static_cast<size_t>(id)));
}

std::vector<std::string> WikiStore::titles() const {
    rebuild_indexes();
    std::vector<std::string> out;
    for (const auto& info : title_infos_) out.push_back(info.title);
    return out;
}

std::optional<EvidencePointer> WikiStore::find_by_normalized_text(const std::string& text) const {
    rebuild_indexes();
    auto it = norm_text_index_.find(normalize_text(text));
    if (it == norm_text_index_.end()) return std::nullopt;
    return it->second;
}

uint64_t WikiStore::checksum() const {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [key, text] : sentences_) {
        h = fnv1a64(key.first.data(), key.first.size(), h);
        h = fnv1a64("\t", 1, h);
        std::string idx = std::to_string(key.second);
        h = fnv1a64(idx.data(), idx.size(), h);
        h = fnv1a64("\t", 1, h);
        h = fnv1a64(text.data(), text.size(), h);
        h = fnv1a64("\n", 1, h);
    }
    return h;
}

void WikiStore::save_tsv(const std::string& path) const {
    std::string out;
    for (const auto& [key, text] : sentences_) {
        out += key.first;
        out += '\t';
        out += std::to_string(key.second);
        out += '\t';
        out += text;
        out += '\n';
    }
    write_file_atomic(path, out);
}

WikiStore WikiStore::load_tsv(const std::string& path) {
    WikiStore store;
    auto lines = read_lines(path);
    for (size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (line.empty()) continue;
        size_t t1 = line.find('\t');
        size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t2 == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(i + 1) + ": expected 3 tab-separated fields");
        int idx;
        try {
            idx = std::stoi(line.substr(t1 + 1, t2 - t1 - 1));
        } catch (const std::exception&) {
            throw std::runtime_error(path + ":" + std::to_string(i + 1) + ": bad sentence index");
        }
        store.add_sentence(line.substr(0, t1), idx, line.substr(t2 + 1));
    }
    return store;
}

namespace {

// FEVER wiki dumps escape some punctuation inside titles and sentences.
std::string unescape_fever(const std::string& s) {
    static const std::pair<const char*, const char*> reps[] = {
        {"-LRB-", "("}, {"-RRB-", ")"}, {"-LSB-", "["}, {"-RSB-", "]"}, {"-COLON-", ":"},
    };
    std::string out = s;
    for (auto [from, to] : reps) {
        size_t pos = 0;
        const size_t flen = std::char_traits<char>::length(from);
        while ((pos = out.find(from, pos)) != std::string::npos) {
            out.replace(pos, flen, to);
            pos += 1;
        }
    }
    std::replace(out.begin(), out.end(), '_', ' ');
    return out;
}

ClaimRecord parse_fever_line(const json& j, size_t line_no, const WikiStore* store) {
    ClaimRecord rec;
    if (!j.contains("id") || !j["id"].is_number_integer())
        throw std::runtime_error("line " + std::to_string(line_no) + ": missing integer 'id'");
    rec.id = j["id"].get<int64_t>();
    if (!j.contains("claim") || !j["claim"].is_string())
        throw std::runtime_error("line " + std::to_string(line_no) + ": missing string 'claim'");
    rec.claim_text = j["claim"].get<std::string>();
    if (!j.contains("label") || !j["label"].is_string())
        throw std::runtime_error("line " + std::to_string(line_no) + ": missing string 'label'");
    try {
        rec.label = label_from_dataset_string(j["label"].get<std::string>());
    } catch (const std::exception& e) {
        throw std::runtime_error("line " + std::to_string(line_no) + ": " + e.what());
    }

    if (j.contains("evidence") && !j["evidence"].is_null()) {
        if (j["evidence"].is_string()) {
            // Symmetric-style record: a raw evidence sentence with dropped
            // metadata. Re-associate by exact normalized-text match; fall
            // back to the longest-lexical-cover title at sentence 0.
            if (store == nullptr)
                throw std::runtime_error("line " + std::to_string(line_no) +
                                         ": raw-text evidence requires a wiki store");
            const std::string text = j["evidence"].get<std::string>();
            auto match = store->find_by_normalized_text(text);
            EvidencePointer ptr;
            if (match) {
                ptr = *match;
                rec.datastore_changed = false;
            } else {
                auto pref = prefilter_titles(rec.claim_text, *store);
                if (pref.titles.empty())
                    throw std::runtime_error("line " + std::to_string(line_no) +
                                             ": cannot re-associate evidence text");
                // Longest cover first; prefilter_titles returns title-ascending,
                // so re-rank by normalized token count then title.
                std::string best;
                size_t best_len = 0;
                for (const auto& [title, idxs] : pref.titles) {
                    (void)idxs;
                    size_t len = normalize_tokens(title).size();
                    if (len > best_len || (len == best_len && (best.empty() || title < best))) {
                        best = title;
                        best_len = len;
                    }
                }
                ptr = EvidencePointer{best, 0};
                rec.datastore_changed = true;
            }
            if (rec.verifiable()) rec.gold_evidence_sets.push_back({ptr});
            rec.given_evidence.push_back(ptr);
        } else if (j["evidence"].is_array()) {
            for (const auto& set : j["evidence"]) {
                if (!set.is_array())
                    throw std::runtime_error("line " + std::to_string(line_no) + ": evidence set is not a list");
                std::vector<EvidencePointer> ptrs;
                for (const auto& item : set) {
                    // [annotation_id, evidence_id, page, sentence_index]
                    if (!item.is_array() || item.size() < 4)
                        throw std::runtime_error("line " + std::to_string(line_no) +
                                                 ": evidence item is not a 4-tuple");
                    if (item[2].is_null()) continue;  // NEI annotations carry null pages
                    if (!item[2].is_string() || !item[3].is_number_integer())
                        throw std::runtime_error("line " + std::to_string(line_no) +
                                                 ": evidence page/index of wrong type");
                    ptrs.push_back(EvidencePointer{unescape_fever(item[2].get<std::string>()),
                                                   item[3].get<int>()});
                }
                if (!ptrs.empty() && rec.verifiable()) rec.gold_evidence_sets.push_back(std::move(ptrs));
            }
        } else {
            throw std::runtime_error("line " + std::to_string(line_no) + ": evidence of wrong type");
        }
    }
    if (!rec.verifiable()) rec.gold_evidence_sets.clear();
    return rec;
}

ClaimRecord parse_synthetic_line(const json& j, size_t line_no) {
    ClaimRecord rec;
    if (!j.contains("id") || !j["id"].is_number_integer())
        throw std::runtime_error("line " + std::to_string(line_no) + ": missing integer 'id'");
    rec.id = j["id"].get<int64_t>();
    rec.claim_text = j.at("claim").get<std::string>();
    rec.label = label_from_dataset_string(j.at("label").get<std::string>());
    if (j.contains("evidence") && !j["evidence"].is_null()) {
        for (const auto& set : j["evidence"]) {
            std::vector<EvidencePointer> ptrs;
            for (const auto& item : set)
                ptrs.push_back(EvidencePointer{item.at(0).get<std::string>(), item.at(1).get<int>()});
            if (!ptrs.empty()) rec.gold_evidence_sets.push_back(std::move(ptrs));
        }
    }
    if (j.contains("given_evidence") && !j["given_evidence"].is_null())
        for (const auto& item : j["given_evidence"])
            rec.given_evidence.push_back(
                EvidencePointer{item.at(0).get<std::string>(), item.at(1).get<int>()});
    if (j.contains("datastore_changed")) rec.datastore_changed = j["datastore_changed"].get<bool>();
    if (!rec.verifiable()) rec.gold_evidence_sets.clear();
    return rec;
}

json claim_to_json(const ClaimRecord& rec) {
    json j;
    j["id"] = rec.id;
    j["claim"] = rec.claim_text;
    j["label"] = label_dataset_string(rec.label);
    json evidence = json::array();
    for (const auto& set : rec.gold_evidence_sets) {
        json s = json::array();
        for (const auto& p : set) s.push_back(json::array({p.page_title, p.sentence_index}));
        evidence.push_back(s);
    }
    j["evidence"] = evidence;
    if (!rec.given_evidence.empty()) {
        json g = json::array();
        for (const auto& p : rec.given_evidence) g.push_back(json::array({p.page_title, p.sentence_index}));
        j["given_evidence"] = g;
    }
    j["datastore_changed"] = rec.datastore_changed;
    return j;
}

}  // namespace

std::vector<ClaimRecord> parse_claims(const std::vector<std::string>& lines, ClaimFormat format,
                                      const WikiStore* store) {
    std::vector<ClaimRecord> out;
    for (size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        json j;
        try {
            j = json::parse(lines[i]);
        } catch (const std::exception& e) {
            throw std::runtime_error("line " + std::to_string(i + 1) + ": invalid JSON: " + e.what());
        }
        out.push_back(format == ClaimFormat::FeverJsonl ? parse_fever_line(j, i + 1, store)
                                                        : parse_synthetic_line(j, i + 1));
    }
    return out;
}

std::vector<ClaimRecord> load_claims(const std::string& path, ClaimFormat format, const WikiStore* store) {
    return parse_claims(read_lines(path), format, store);
}

void save_claims(const std::string& path, const std::vector<ClaimRecord>& claims) {
    std::string out;
    for (const auto& rec : claims) {
        out += claim_to_json(rec).dump();
        out += '\n';
    }
    write_file_atomic(path, out);
}

std::vector<EvidencePointer> select_training_evidence(const ClaimRecord& claim, const WikiStore& store) {
    if (!claim.verifiable()) throw std::invalid_argument("unverifiable claim has no training evidence");

    std::vector<std::vector<EvidencePointer>> resolvable;
    for (const auto& set : claim.gold_evidence_sets) {
        bool ok = !set.empty();
        for (const auto& p : set) ok = ok && store.resolves(p);
        if (ok) {
            auto sorted = set;
            std::sort(sorted.begin(), sorted.end());
            sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
            resolvable.push_back(std::move(sorted));
        }
    }
    if (resolvable.empty())
        throw std::runtime_error("claim " + std::to_string(claim.id) + " has no resolvable gold set");

    auto index_sum = [](const std::vector<EvidencePointer>& set) {
        long s = 0;
        for (const auto& p : set) s += p.sentence_index;
        return s;
    };
    auto better = [&](const std::vector<EvidencePointer>& a, const std::vector<EvidencePointer>& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        long sa = index_sum(a), sb = index_sum(b);
        if (sa != sb) return sa < sb;
        return a < b;  // lexicographic (title, index) tuple list
    };
    const std::vector<EvidencePointer>* chosen = &resolvable[0];
    for (const auto& set : resolvable)
        if (better(set, *chosen)) chosen = &set;

    std::vector<EvidencePointer> result = *chosen;
    if (result.size() > 2) {
        std::sort(result.begin(), result.end(), [](const EvidencePointer& a, const EvidencePointer& b) {
            if (a.sentence_index != b.sentence_index) return a.sentence_index < b.sentence_index;
            return a.page_title < b.page_title;
        });
        result.resize(2);
        std::sort(result.begin(), result.end());
    }
    return result;
}

PrefilterResult prefilter_titles(const std::string& claim_text, const WikiStore& store) {
    PrefilterResult result;
    const auto claim_tokens = normalize_tokens(claim_text);
    const auto& infos = store.title_infos();
    const auto& first_index = store.first_token_index();

    std::set<int> kept;
    for (size_t p = 0; p < claim_tokens.size(); ++p) {
        auto it = first_index.find(claim_tokens[p]);
        if (it == first_index.end()) continue;
        size_t best_len = 0;
        std::vector<int> best;
        for (int title_id : it->second) {
            const auto& toks = infos[static_cast<size_t>(title_id)].norm_tokens;
            if (toks.size() < best_len) continue;
            if (p + toks.size() > claim_tokens.size()) continue;
            bool match = true;
            for (size_t k = 1; k < toks.size() && match; ++k) match = toks[k] == claim_tokens[p + k];
            if (!match) continue;
            if (toks.size() > best_len) {
                best_len = toks.size();
                best.clear();
            }
            if (toks.size() == best_len) best.push_back(title_id);
        }
        kept.insert(best.begin(), best.end());
    }

    std::vector<std::string> titles;
    for (int id : kept) titles.push_back(infos[static_cast<size_t>(id)].title);
    std::sort(titles.begin(), titles.end());
    for (const auto& title : titles) {
        auto idxs = store.sentence_indices(title);
        if (idxs.empty()) continue;
        for (int idx : idxs)
            result.sentence_ids.push_back(store.sentence_id(EvidencePointer{title, idx}));
        result.titles.emplace_back(title, std::move(idxs));
    }
    return result;
}

Vocabulary build_corpus_vocabulary(const WikiStore& store, const std::vector<ClaimRecord>& claims,
                                   int max_size) {
    std::vector<std::string> texts;
    for (const auto& title : store.titles()) {
        texts.push_back(title);
        for (int idx : store.sentence_indices(title)) {
            texts.push_back(*store.find({title, idx}));
            texts.push_back("sentence " + std::to_string(idx) + ":");
        }
    }
    for (const auto& claim : claims) texts.push_back(claim.claim_text);
    texts.push_back("Claim: Consider: Predict: Reference: Evidence:");
    texts.push_back("Supports: Refutes: Unverifiable:");
    return Vocabulary::build(texts, max_size);
}

PrefilterStats prefilter_stats(const std::vector<ClaimRecord>& claims, const WikiStore& store) {
    PrefilterStats stats;
    if (claims.empty()) return stats;
    long covered = 0, verifiable = 0;
    for (const auto& claim : claims) {
        auto pref = prefilter_titles(claim.claim_text, store);
        stats.mean_titles += static_cast<double>(pref.titles.size());
        stats.mean_sentences += static_cast<double>(pref.sentence_ids.size());
        if (!claim.verifiable()) continue;
        ++verifiable;
        std::set<int64_t> ids(pref.sentence_ids.begin(), pref.sentence_ids.end());
        bool hit = false;
        for (const auto& set : claim.gold_evidence_sets)
            for (const auto& p : set)
                if (ids.count(store.sentence_id(p))) hit = true;
        if (hit) ++covered;
    }
    stats.mean_titles /= static_cast<double>(claims.size());
    stats.mean_sentences /= static_cast<double>(claims.size());
    stats.gold_coverage = verifiable == 0 ? 0.0 : static_cast<double>(covered) / static_cast<double>(verifiable);
    return stats;
}

}  // namespace memmatch

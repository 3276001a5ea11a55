#include "memmatch/searcher.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "memmatch/io.hpp"
#include "memmatch/parallel.hpp"

namespace memmatch {

using nlohmann::json;

void SearchConfig::validate() const {
    if (k1 < 1) throw std::invalid_argument("search config: k1 must be >= 1");
    if (z < 1) throw std::invalid_argument("search config: z must be >= 1");
    if (z > k1) throw std::invalid_argument("search config: z must be <= k1");
    if (chunk_size < 1) throw std::invalid_argument("search config: chunk_size must be >= 1");
}

Label select_label(const std::array<double, 3>& distances) {
    int best = 0;
    for (int i = 1; i < 3; ++i)
        if (distances[static_cast<size_t>(i)] < distances[static_cast<size_t>(best)]) best = i;
    return label_from_index(best);
}

std::vector<BeamEntry> topk(const std::vector<float>& query, const MemoryStore& store,
                            const std::vector<int64_t>& subset_rows, int k, int chunk_size) {
    if (k < 0) throw std::invalid_argument("topk: k must be >= 0");
    std::vector<BeamEntry> best;  // kept sorted by (distance, id)
    auto worse = [](const BeamEntry& a, const BeamEntry& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.support_id < b.support_id;
    };

    const int64_t n = static_cast<int64_t>(subset_rows.size());
    std::vector<BeamEntry> chunk;
    for (int64_t start = 0; start < n; start += chunk_size) {
        const int64_t end = std::min<int64_t>(start + chunk_size, n);
        chunk.clear();
        for (int64_t i = start; i < end; ++i) {
            const int64_t row = subset_rows[static_cast<size_t>(i)];
            BeamEntry e;
            e.support_id = store.ids[static_cast<size_t>(row)];
            e.distance = euclidean_f32(query.data(), store.row(row), store.m);
            chunk.push_back(e);
        }
        best.insert(best.end(), chunk.begin(), chunk.end());
        std::sort(best.begin(), best.end(), worse);
        if (static_cast<int>(best.size()) > k) best.resize(static_cast<size_t>(k));
    }
    for (size_t i = 0; i < best.size(); ++i) best[i].rank = static_cast<int>(i);
    return best;
}

namespace {

std::string cache_path(const SearchConfig& cfg, int level, uint64_t model_checksum,
                       uint64_t corpus_checksum) {
    return cfg.cache_dir + "/l" + std::to_string(level) + "_m" + hex64(model_checksum) + "_c" +
           hex64(corpus_checksum) + ".mvec";
}

}  // namespace

MemoryStore build_level1_store(const WikiStore& wiki, const std::vector<int64_t>& sentence_ids,
                               const Model& model, const Vocabulary& vocab, const SearchConfig& cfg,
                               uint64_t corpus_checksum, uint64_t model_checksum) {
    const bool cache = !cfg.cache_dir.empty();
    std::string path;
    if (cache) {
        ensure_dir(cfg.cache_dir);
        path = cache_path(cfg, 1, model_checksum, corpus_checksum);
        if (store_cache_compatible(path, 1, model.cfg.filters)) {
            MemoryStore store = load_store(path);
            if (store.ids == sentence_ids) return store;
            // Incompatible id set (or stale corpus): fall through and rebuild.
        }
    }

    MemoryStore store;
    store.level = 1;
    store.m = model.cfg.filters;
    store.ids = sentence_ids;
    store.data.assign(sentence_ids.size() * static_cast<size_t>(store.m), 0.0f);
    parallel_for(static_cast<int64_t>(sentence_ids.size()), cfg.threads, [&](int64_t i) {
        const int64_t sid = sentence_ids[static_cast<size_t>(i)];
        ClaimRecord dummy;  // level-1 supports carry no claim copy
        FormattedSequence support = format_support(
            1, dummy, {EvidenceText{wiki.pointer_of(sid), wiki.text_of(sid)}}, std::nullopt,
            model.cfg.max_len[0]);
        const auto g = model.memory_f32(1, support.text, vocab);
        std::copy(g.begin(), g.end(), store.data.begin() + static_cast<size_t>(i) * store.m);
    });

    if (cache) {
        FileLock lock(cfg.cache_dir + "/.lock");
        save_store(store, path);
    }
    return store;
}

std::vector<int64_t> claim_candidates(const ClaimRecord& claim, const WikiStore& wiki) {
    if (!claim.given_evidence.empty()) {
        std::vector<int64_t> ids;
        for (const auto& ptr : claim.given_evidence) {
            const int64_t id = wiki.sentence_id(ptr);
            if (id >= 0) ids.push_back(id);
        }
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        return ids;
    }
    return prefilter_titles(claim.claim_text, wiki).sentence_ids;
}

SearchTrace run_search(const ClaimRecord& claim, const WikiStore& wiki,
                       const std::vector<int64_t>& candidate_ids, const MemoryStore& l1_store,
                       const std::vector<int64_t>& store_rows, const Model& model,
                       const Vocabulary& vocab, const SearchConfig& cfg) {
    cfg.validate();
    SearchTrace trace;
    trace.claim_id = claim.id;

    // Level 1: bi-encoder beam over the candidate subset of the store.
    const auto q1 = model.memory_f32(1, format_query(claim, 1).text, vocab);
    trace.level1 = topk(q1, l1_store, store_rows, cfg.k1, cfg.chunk_size);
    trace.null_retrieval = candidate_ids.empty();

    // Level 2: cross-encode each survivor against the "Consider:" query.
    const auto q2fwd = model.forward(2, format_query(claim, 2).text, vocab);
    const auto q2 = to_f32(q2fwd.pooled.g);
    struct Scored {
        double distance;
        int64_t id;
        std::vector<float> g;
        std::string text;
    };
    std::vector<Scored> level2(trace.level1.size());
    for (size_t i = 0; i < trace.level1.size(); ++i) {
        const int64_t sid = trace.level1[i].support_id;
        FormattedSequence support =
            format_support(2, claim, {EvidenceText{wiki.pointer_of(sid), wiki.text_of(sid)}},
                           std::nullopt, model.cfg.max_len[1]);
        auto& slot = level2[i];
        slot.id = sid;
        slot.g = model.memory_f32(2, support.text, vocab);
        slot.distance = euclidean_f32(q2.data(), slot.g.data(), model.cfg.filters);
        slot.text = std::move(support.text);
    }
    std::sort(level2.begin(), level2.end(), [](const Scored& a, const Scored& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.id < b.id;
    });
    for (size_t i = 0; i < level2.size(); ++i) {
        Level2Entry e;
        e.beam = BeamEntry{level2[i].id, level2[i].distance, static_cast<int>(i)};
        e.ptr = wiki.pointer_of(level2[i].id);
        e.support_text = level2[i].text;
        trace.level2.push_back(std::move(e));
    }
    if (!trace.level2.empty()) {
        trace.has_level2 = true;
        trace.level2_top_distance = trace.level2[0].beam.distance;
        // Difference vector of the selected (top of beam) level-2 match.
        trace.delta_level2.resize(static_cast<size_t>(model.cfg.filters));
        const auto& top_g = level2[0].g;
        for (int m = 0; m < model.cfg.filters; ++m)
            trace.delta_level2[static_cast<size_t>(m)] =
                std::fabs(q2[static_cast<size_t>(m)] - top_g[static_cast<size_t>(m)]);
    }

    // Level 3: one support per label over the dedup'd top-z evidence.
    std::vector<EvidenceText> evidence;
    std::set<std::pair<std::string, int>> seen;
    for (int i = 0; i < std::min<int>(cfg.z, static_cast<int>(trace.level2.size())); ++i) {
        const auto& ptr = trace.level2[static_cast<size_t>(i)].ptr;
        if (!seen.insert({ptr.page_title, ptr.sentence_index}).second) continue;
        evidence.push_back(EvidenceText{ptr, wiki.text_of(trace.level2[static_cast<size_t>(i)].beam.support_id)});
    }
    for (const auto& ev : evidence) {
        if (static_cast<int>(trace.selected_evidence.size()) >= 5) break;
        trace.selected_evidence.push_back(ev.ptr);
    }

    const auto q3 = model.memory_f32(3, format_query(claim, 3, SeqMode::Search).text, vocab);
    std::array<double, 3> distances;
    std::array<std::vector<float>, 3> gs;
    for (int l = 0; l < 3; ++l) {
        FormattedSequence support =
            format_support(3, claim, evidence, label_from_index(l), model.cfg.max_len[2]);
        gs[static_cast<size_t>(l)] = model.memory_f32(3, support.text, vocab);
        distances[static_cast<size_t>(l)] =
            euclidean_f32(q3.data(), gs[static_cast<size_t>(l)].data(), model.cfg.filters);
        trace.level3[static_cast<size_t>(l)] =
            Level3Entry{label_from_index(l), distances[static_cast<size_t>(l)], support.text};
    }
    trace.selected_label = select_label(distances);
    trace.level3_selected_distance = distances[static_cast<size_t>(label_index(trace.selected_label))];
    const auto& sel_g = gs[static_cast<size_t>(label_index(trace.selected_label))];
    trace.delta_level3.resize(static_cast<size_t>(model.cfg.filters));
    for (int m = 0; m < model.cfg.filters; ++m)
        trace.delta_level3[static_cast<size_t>(m)] =
            std::fabs(q3[static_cast<size_t>(m)] - sel_g[static_cast<size_t>(m)]);
    return trace;
}

std::vector<SearchTrace> search_split(const std::vector<ClaimRecord>& claims, const WikiStore& wiki,
                                      const Model& model, const Vocabulary& vocab,
                                      const SearchConfig& cfg) {
    cfg.validate();
    // Shared level-1 store over the union of candidate sets.
    std::vector<std::vector<int64_t>> per_claim(claims.size());
    std::set<int64_t> all_ids;
    for (size_t i = 0; i < claims.size(); ++i) {
        per_claim[i] = claim_candidates(claims[i], wiki);
        all_ids.insert(per_claim[i].begin(), per_claim[i].end());
    }
    std::vector<int64_t> union_ids(all_ids.begin(), all_ids.end());
    MemoryStore store = build_level1_store(wiki, union_ids, model, vocab, cfg, wiki.checksum(),
                                           model.checksum());
    std::map<int64_t, int64_t> row_of;
    for (int64_t i = 0; i < store.size(); ++i) row_of[store.ids[static_cast<size_t>(i)]] = i;

    std::vector<SearchTrace> traces(claims.size());
    parallel_for(static_cast<int64_t>(claims.size()), cfg.threads, [&](int64_t i) {
        std::vector<int64_t> rows;
        rows.reserve(per_claim[static_cast<size_t>(i)].size());
        for (int64_t id : per_claim[static_cast<size_t>(i)]) rows.push_back(row_of.at(id));
        traces[static_cast<size_t>(i)] = run_search(claims[static_cast<size_t>(i)], wiki,
                                                    per_claim[static_cast<size_t>(i)], store, rows,
                                                    model, vocab, cfg);
    });
    return traces;
}

// ---- trace JSON -------------------------------------------------------------

std::string trace_to_json(const SearchTrace& t) {
    json j;
    j["claim_id"] = t.claim_id;
    j["null_retrieval"] = t.null_retrieval;
    json l1 = json::array();
    for (const auto& e : t.level1)
        l1.push_back({{"id", e.support_id}, {"distance", e.distance}, {"rank", e.rank}});
    j["level1"] = l1;
    json l2 = json::array();
    for (const auto& e : t.level2)
        l2.push_back({{"id", e.beam.support_id},
                      {"distance", e.beam.distance},
                      {"rank", e.beam.rank},
                      {"title", e.ptr.page_title},
                      {"sentence_index", e.ptr.sentence_index},
                      {"support_text", e.support_text}});
    j["level2"] = l2;
    json l3 = json::array();
    for (const auto& e : t.level3)
        l3.push_back({{"label", label_name(e.label)},
                      {"distance", e.distance},
                      {"support_text", e.support_text}});
    j["level3"] = l3;
    j["selected_label"] = label_name(t.selected_label);
    json ev = json::array();
    for (const auto& p : t.selected_evidence) ev.push_back(json::array({p.page_title, p.sentence_index}));
    j["selected_evidence"] = ev;
    if (t.has_level2)
        j["level2_top_distance"] = t.level2_top_distance;
    else
        j["level2_top_distance"] = nullptr;
    j["level3_selected_distance"] = t.level3_selected_distance;
    if (t.has_level2)
        j["delta_level2"] = t.delta_level2;
    else
        j["delta_level2"] = nullptr;
    j["delta_level3"] = t.delta_level3;
    return j.dump();
}

namespace {

Label label_by_name(const std::string& name) {
    for (int i = 0; i < 3; ++i)
        if (label_name(label_from_index(i)) == name) return label_from_index(i);
    throw std::runtime_error("unknown label name in trace: " + name);
}

}  // namespace

SearchTrace trace_from_json(const std::string& line) {
    const json j = json::parse(line);
    SearchTrace t;
    t.claim_id = j.at("claim_id").get<ClaimId>();
    t.null_retrieval = j.at("null_retrieval").get<bool>();
    for (const auto& e : j.at("level1"))
        t.level1.push_back(BeamEntry{e.at("id").get<int64_t>(), e.at("distance").get<double>(),
                                     e.at("rank").get<int>()});
    for (const auto& e : j.at("level2")) {
        Level2Entry le;
        le.beam = BeamEntry{e.at("id").get<int64_t>(), e.at("distance").get<double>(),
                            e.at("rank").get<int>()};
        le.ptr = EvidencePointer{e.at("title").get<std::string>(), e.at("sentence_index").get<int>()};
        le.support_text = e.at("support_text").get<std::string>();
        t.level2.push_back(std::move(le));
    }
    int li = 0;
    for (const auto& e : j.at("level3")) {
        t.level3[static_cast<size_t>(li)] =
            Level3Entry{label_by_name(e.at("label").get<std::string>()), e.at("distance").get<double>(),
                        e.at("support_text").get<std::string>()};
        ++li;
    }
    t.selected_label = label_by_name(j.at("selected_label").get<std::string>());
    for (const auto& p : j.at("selected_evidence"))
        t.selected_evidence.push_back(EvidencePointer{p.at(0).get<std::string>(), p.at(1).get<int>()});
    t.has_level2 = !j.at("level2_top_distance").is_null();
    if (t.has_level2) {
        t.level2_top_distance = j.at("level2_top_distance").get<double>();
        t.delta_level2 = j.at("delta_level2").get<std::vector<float>>();
    }
    t.level3_selected_distance = j.at("level3_selected_distance").get<double>();
    t.delta_level3 = j.at("delta_level3").get<std::vector<float>>();
    return t;
}

void save_traces(const std::vector<SearchTrace>& traces, const std::string& path) {
    std::string out;
    for (const auto& t : traces) {
        out += trace_to_json(t);
        out += '\n';
    }
    write_file_atomic(path, out);
}

std::vector<SearchTrace> load_traces(const std::string& path) {
    std::vector<SearchTrace> traces;
    for (const auto& line : read_lines(path))
        if (!line.empty()) traces.push_back(trace_from_json(line));
    return traces;
}

}  // namespace memmatch

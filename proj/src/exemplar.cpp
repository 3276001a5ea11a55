#include "memmatch/exemplar.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "json.hpp"
#include "memmatch/io.hpp"
#include "memmatch/memory_layer.hpp"
#include "memmatch/store.hpp"

namespace memmatch {

using nlohmann::json;

void ExemplarDB::add_partition(const std::vector<SearchTrace>& traces,
                               const std::vector<ClaimRecord>& gold, bool verifiable_only,
                               const std::string& partition_tag) {
    if (traces.size() != gold.size()) throw std::invalid_argument("exemplar build: size mismatch");
    for (size_t i = 0; i < traces.size(); ++i) {
        const auto& t = traces[i];
        if (verifiable_only && !gold[i].verifiable()) continue;
        if (!t.has_level2) continue;  // no level-2 match to describe
        if (t.delta_level2.empty() || t.delta_level3.empty())
            throw std::invalid_argument("exemplar build: trace missing difference vectors");
        ExemplarRecord rec;
        rec.vec = t.delta_level2;
        rec.vec.insert(rec.vec.end(), t.delta_level3.begin(), t.delta_level3.end());
        rec.claim_id = t.claim_id;
        rec.predicted = t.selected_label;
        rec.reference = gold[i].label;
        rec.partition = partition_tag;
        if (dim_ == 0) dim_ = static_cast<int>(rec.vec.size());
        if (static_cast<int>(rec.vec.size()) != dim_)
            throw std::invalid_argument("exemplar build: vector dimension mismatch");
        records_.push_back(std::move(rec));
    }
}

std::pair<const ExemplarRecord*, double> ExemplarDB::nearest(
    const std::vector<float>& query, const std::optional<std::string>& partition) const {
    if (static_cast<int>(query.size()) != dim_ || dim_ == 0)
        throw std::invalid_argument("exemplar nearest: query dimension mismatch");
    const ExemplarRecord* best = nullptr;
    double best_dist = 0.0;
    for (const auto& rec : records_) {
        if (partition && rec.partition != *partition) continue;
        const double d = euclidean_f32(query.data(), rec.vec.data(), dim_);
        if (best == nullptr || d < best_dist) {
            best = &rec;
            best_dist = d;
        }
    }
    if (best == nullptr) throw std::runtime_error("exemplar nearest: no qualifying records");
    return {best, best_dist};
}

uint64_t ExemplarDB::content_checksum() const {
    uint64_t h = 0xcbf29ce484222325ULL;
    uint32_t d = static_cast<uint32_t>(dim_);
    h = fnv1a64(&d, sizeof(d), h);
    for (const auto& rec : records_) {
        h = fnv1a64(rec.vec.data(), rec.vec.size() * sizeof(float), h);
        h = fnv1a64(&rec.claim_id, sizeof(rec.claim_id), h);
    }
    return h;
}

void ExemplarDB::save(const std::string& path) const {
    MemoryStore store;
    store.level = 0;
    store.m = dim_;
    for (const auto& rec : records_) store.add(rec.claim_id, rec.vec);
    save_store(store, path);

    std::string meta;
    json header;
    header["kind"] = "exemplar-db-meta";
    header["dim"] = dim_;
    header["count"] = records_.size();
    header["checksum"] = hex64(content_checksum());
    meta += header.dump();
    meta += '\n';
    for (const auto& rec : records_) {
        json j;
        j["claim_id"] = rec.claim_id;
        j["predicted"] = label_name(rec.predicted);
        j["reference"] = label_name(rec.reference);
        j["partition"] = rec.partition;
        meta += j.dump();
        meta += '\n';
    }
    write_file_atomic(path + ".jsonl", meta);
}

namespace {

Label label_by_name(const std::string& name) {
    for (int i = 0; i < 3; ++i)
        if (label_name(label_from_index(i)) == name) return label_from_index(i);
    throw std::runtime_error("unknown label name in exemplar metadata: " + name);
}

}  // namespace

ExemplarDB ExemplarDB::load(const std::string& path) {
    MemoryStore store = load_store(path);
    if (store.level != 0) throw std::runtime_error("not an exemplar database: " + path);
    auto lines = read_lines(path + ".jsonl");
    if (lines.empty()) throw std::runtime_error("missing exemplar metadata sidecar: " + path + ".jsonl");
    const json header = json::parse(lines[0]);
    if (header.at("kind").get<std::string>() != "exemplar-db-meta")
        throw std::runtime_error("bad exemplar metadata header: " + path);
    if (header.at("dim").get<int>() != store.m)
        throw std::runtime_error("exemplar metadata/vector dimension mismatch: " + path);

    ExemplarDB db;
    db.dim_ = store.m;
    for (int64_t i = 0; i < store.size(); ++i) {
        if (static_cast<size_t>(i) + 1 >= lines.size())
            throw std::runtime_error("exemplar metadata shorter than vector file: " + path);
        const json j = json::parse(lines[static_cast<size_t>(i) + 1]);
        ExemplarRecord rec;
        rec.vec.assign(store.row(i), store.row(i) + store.m);
        rec.claim_id = j.at("claim_id").get<ClaimId>();
        rec.predicted = label_by_name(j.at("predicted").get<std::string>());
        rec.reference = label_by_name(j.at("reference").get<std::string>());
        rec.partition = j.at("partition").get<std::string>();
        db.records_.push_back(std::move(rec));
    }
    const std::string want = header.at("checksum").get<std::string>();
    if (hex64(db.content_checksum()) != want)
        throw std::runtime_error("exemplar database checksum mismatch: " + path);
    return db;
}

Prediction audit_tp(const Prediction& pred, const ExemplarDB& db) {
    Prediction out = pred;
    if (pred.exemplar_query.empty()) {
        out.admitted = false;
        out.gate_reason = "no exemplar query";
        return out;
    }
    auto [rec, dist] = db.nearest(pred.exemplar_query);
    (void)dist;
    out.admitted = rec->is_true_positive();
    if (!out.admitted) out.gate_reason = "nearest exemplar not a true positive";
    return out;
}

Prediction audit_update(const Prediction& pred, const ExemplarDB& db, bool datastore_changed,
                        const std::string& update_partition) {
    Prediction out = pred;
    out.admitted = true;
    if (!datastore_changed || pred.exemplar_query.empty()) return out;
    auto [rec, dist] = db.nearest(pred.exemplar_query, update_partition);
    (void)dist;
    out.label = rec->reference;
    return out;
}

std::vector<AdmissionCurveRow> admission_curve(const ExemplarDB& db,
                                               const std::vector<Prediction>& preds,
                                               const std::vector<ClaimRecord>& gold,
                                               const std::vector<double>& cutoffs) {
    for (size_t i = 1; i < cutoffs.size(); ++i)
        if (cutoffs[i] < cutoffs[i - 1])
            throw std::invalid_argument("admission_curve: cutoffs must be ascending");
    std::map<ClaimId, Label> gold_label;
    for (const auto& g : gold) gold_label[g.id] = g.label;

    struct Item {
        bool tp_admitted = false;
        double dist = 0.0;
        bool correct = false;
    };
    std::vector<Item> items;
    for (const auto& p : preds) {
        Item it;
        if (!p.exemplar_query.empty()) {
            auto [rec, dist] = db.nearest(p.exemplar_query);
            it.tp_admitted = rec->is_true_positive();
            it.dist = dist;
        }
        it.correct = gold_label.count(p.claim_id) > 0 && gold_label.at(p.claim_id) == p.label;
        items.push_back(it);
    }

    std::vector<AdmissionCurveRow> rows;
    for (double cutoff : cutoffs) {
        AdmissionCurveRow row;
        row.cutoff = cutoff;
        long correct = 0;
        for (const auto& it : items) {
            if (!it.tp_admitted || it.dist > cutoff) continue;
            ++row.n_admitted;
            if (it.correct) ++correct;
        }
        row.admitted_fraction =
            preds.empty() ? 0.0 : static_cast<double>(row.n_admitted) / static_cast<double>(preds.size());
        row.admitted_accuracy =
            row.n_admitted == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(row.n_admitted);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace memmatch

#include <algorithm>
#include <array>
#include <set>
#include <stdexcept>

#include "memmatch/corpus.hpp"
#include "memmatch/io.hpp"
#include "memmatch/nn.hpp"

namespace memmatch {

namespace {

const std::array<const char*, 48> kFirstNames = {
    "aldor",  "baren",  "corin",  "doral",  "elvan",  "feron",  "galden", "hethin",
    "ilvar",  "jorun",  "kaleth", "lorim",  "merrin", "noral",  "ostin",  "perrin",
    "quellan","rasmun", "selvin", "torvan", "ulmar",  "vestin", "warrick","xandor",
    "yorel",  "zarrin", "belwin", "cormak", "davlin", "erwick", "falden", "gorwin",
    "haldor", "irwick", "jasper", "kelwin", "lormak", "marden", "norwick","olvan",
    "pellor", "quorin", "rendal", "sorwin", "talmar", "urden",  "varwick","welden",
};

const std::array<const char*, 48> kLastNames = {
    "arbeth", "brakker","caldin", "dremmel","elsworth","farrow", "grendal","hollick",
    "immer",  "jelvin", "korrel", "lanther","mossley","nettar", "ollend", "pravin",
    "quimber","rostel", "sarrow", "tindale","umbrell","vassick","wendrel","yarrow",
    "ashmont","bellweir","cravens","dunmore","ellerby","fenwick","gastrel","harmond",
    "isling", "jostler","kembren","lindqua","morvath","nimbley","ostrem", "pindrel",
    "quarlow","rimmond","selkirk","tarnow", "umberly","varnell","wistman","yelvern",
};

const std::array<const char*, 10> kOccupations = {
    "farmer", "singer", "poet", "sailor", "baker", "miner", "weaver", "hunter", "trader", "scribe",
};

// Paraphrases used only by the perturbed split; absent from the base
// corpus, so they fall outside the training vocabulary.
const std::array<const char*, 10> kOccupationSynonyms = {
    "cultivator", "vocalist", "versifier", "mariner", "breadmaker",
    "digger",     "loomworker", "tracker", "merchant", "copyist",
};

const std::array<const char*, 8> kOrigins = {
    "norvia", "equa", "talvos", "brimland", "ostara", "quellen", "varda", "mistra",
};

const std::array<const char*, 12> kTowns = {
    "kelm",  "dorvan", "silda",  "pellin", "garth",  "ulmet",
    "brenna","coswick","fernow", "tival",  "harlen", "yantra",
};

const std::array<const char*, 8> kInstruments = {
    "flute", "fiddle", "drum", "lute", "horn", "harp", "pipe", "viol",
};

const std::array<const char*, 8> kAnimals = {
    "hound", "falcon", "mare", "ox", "goat", "raven", "lynx", "otter",
};

std::string capitalize(const std::string& s) {
    std::string out = s;
    if (!out.empty() && out[0] >= 'a' && out[0] <= 'z') out[0] = static_cast<char>(out[0] - 'a' + 'A');
    return out;
}

struct Entity {
    std::string first, last;
    int occupation;  // index into kOccupations
    int origin;
    int town;

    std::string title() const { return capitalize(first) + " " + capitalize(last); }
    std::string mention() const { return capitalize(first) + " " + capitalize(last); }
};

struct Generator {
    Rng rng;
    SyntheticCorpus out;
    std::vector<Entity> entities;
    std::set<std::pair<int, int>> used_names;
    ClaimId next_id = 1;

    explicit Generator(uint64_t seed) : rng(Rng(seed).fork(0x5eedc0de)) {}

    Entity make_entity() {
        for (int attempt = 0; attempt < 4096; ++attempt) {
            int f = static_cast<int>(rng.next_below(kFirstNames.size()));
            int l = static_cast<int>(rng.next_below(kLastNames.size()));
            if (used_names.count({f, l})) continue;
            used_names.insert({f, l});
            Entity e;
            e.first = kFirstNames[static_cast<size_t>(f)];
            e.last = kLastNames[static_cast<size_t>(l)];
            e.occupation = static_cast<int>(rng.next_below(kOccupations.size()));
            e.origin = static_cast<int>(rng.next_below(kOrigins.size()));
            e.town = static_cast<int>(rng.next_below(kTowns.size()));
            entities.push_back(e);
            return e;
        }
        throw std::runtime_error("synthetic generator: entity name capacity exhausted");
    }

    void add_entity_page(const Entity& e, const Entity& sibling) {
        const std::string name = e.mention();
        out.wiki.add_sentence(e.title(), 0,
                              name + " is a " + kOccupations[static_cast<size_t>(e.occupation)] +
                                  " from " + capitalize(kOrigins[static_cast<size_t>(e.origin)]) + ".");
        out.wiki.add_sentence(e.title(), 1,
                              name + " was born in the town of " +
                                  capitalize(kTowns[static_cast<size_t>(e.town)]) + ".");
        out.wiki.add_sentence(e.title(), 2,
                              name + " has a sibling named " + sibling.mention() + ".");
    }

    void add_topic_pages() {
        for (size_t i = 0; i < kOccupations.size(); ++i) {
            std::string occ = kOccupations[i];
            out.wiki.add_sentence(capitalize(occ), 0, "Many people work as a " + occ + ".");
            out.wiki.add_sentence(capitalize(occ), 1, "The craft of a " + occ + " takes years to master.");
        }
        for (size_t i = 0; i < kTowns.size(); ++i) {
            std::string town = capitalize(kTowns[i]);
            out.wiki.add_sentence(town, 0,
                                  town + " is a small town in " +
                                      capitalize(kOrigins[i % kOrigins.size()]) + ".");
            out.wiki.add_sentence(town, 1, "The market of " + town + " is busy all year.");
        }
        for (size_t i = 0; i < kOrigins.size(); ++i) {
            std::string origin = capitalize(kOrigins[i]);
            out.wiki.add_sentence(origin, 0,
                                  origin + " is a region of small villages and old roads.");
            out.wiki.add_sentence(origin, 1, "Travelers praise the calm hills of " + origin + ".");
        }
    }

    void add_family_pages() {
        std::set<std::string> lasts;
        for (const auto& e : entities) lasts.insert(e.last);
        size_t i = 0;
        for (const auto& last : lasts) {
            std::string title = capitalize(last);
            out.wiki.add_sentence(title, 0,
                                  "The " + last + " family hails from " +
                                      capitalize(kOrigins[i % kOrigins.size()]) + ".");
            out.wiki.add_sentence(title, 1,
                                  "The " + last + " family settled near the town of " +
                                      capitalize(kTowns[i % kTowns.size()]) + ".");
            ++i;
        }
    }

    template <size_t N>
    int pick_other(const std::array<const char*, N>&, int current) {
        int other = static_cast<int>(rng.next_below(N - 1));
        if (other >= current) ++other;
        return other;
    }

    ClaimRecord supports_claim(const Entity& e) {
        ClaimRecord rec;
        rec.id = next_id++;
        rec.label = Label::Supports;
        const std::string name = e.mention();
        const EvidencePointer s0{e.title(), 0};
        const EvidencePointer s1{e.title(), 1};
        switch (rng.next_below(4)) {
            case 0:
                rec.claim_text = name + " is a " + kOccupations[static_cast<size_t>(e.occupation)] + ".";
                rec.gold_evidence_sets = {{s0}};
                break;
            case 1:
                rec.claim_text = name + " is from " + capitalize(kOrigins[static_cast<size_t>(e.origin)]) + ".";
                rec.gold_evidence_sets = {{s0}};
                break;
            case 2:
                rec.claim_text =
                    name + " was born in the town of " + capitalize(kTowns[static_cast<size_t>(e.town)]) + ".";
                rec.gold_evidence_sets = {{s1}};
                break;
            default:
                rec.claim_text = name + " is a " + kOccupations[static_cast<size_t>(e.occupation)] +
                                 " and was born in the town of " +
                                 capitalize(kTowns[static_cast<size_t>(e.town)]) + ".";
                rec.gold_evidence_sets = {{s0, s1}};
                break;
        }
        // Occasionally a redundant second annotator set, as in real data.
        if (rec.gold_evidence_sets[0].size() == 1 && rng.next_below(5) == 0)
            rec.gold_evidence_sets.push_back({s0, s1});
        return rec;
    }

    ClaimRecord refutes_claim(const Entity& e) {
        ClaimRecord rec;
        rec.id = next_id++;
        rec.label = Label::Refutes;
        const std::string name = e.mention();
        const EvidencePointer s0{e.title(), 0};
        const EvidencePointer s1{e.title(), 1};
        switch (rng.next_below(3)) {
            case 0:
                rec.claim_text =
                    name + " is a " +
                    kOccupations[static_cast<size_t>(pick_other(kOccupations, e.occupation))] + ".";
                rec.gold_evidence_sets = {{s0}};
                break;
            case 1:
                rec.claim_text =
                    name + " is from " +
                    capitalize(kOrigins[static_cast<size_t>(pick_other(kOrigins, e.origin))]) + ".";
                rec.gold_evidence_sets = {{s0}};
                break;
            default:
                rec.claim_text = name + " was born in the town of " +
                                 capitalize(kTowns[static_cast<size_t>(pick_other(kTowns, e.town))]) + ".";
                rec.gold_evidence_sets = {{s1}};
                break;
        }
        return rec;
    }

    ClaimRecord unverifiable_claim(const Entity& e) {
        ClaimRecord rec;
        rec.id = next_id++;
        rec.label = Label::Unverifiable;
        const std::string name = e.mention();
        if (rng.next_below(2) == 0)
            rec.claim_text =
                name + " plays the " + kInstruments[rng.next_below(kInstruments.size())] + ".";
        else
            rec.claim_text = name + " owns a " + kAnimals[rng.next_below(kAnimals.size())] + ".";
        return rec;
    }

    /// Balanced 3-class split: one claim of each label per entity.
    std::vector<ClaimRecord> make_split(int n_claims) {
        std::vector<ClaimRecord> claims;
        while (static_cast<int>(claims.size()) < n_claims) {
            Entity e = make_entity();
            claims.push_back(supports_claim(e));
            claims.push_back(refutes_claim(e));
            claims.push_back(unverifiable_claim(e));
        }
        claims.resize(static_cast<size_t>(n_claims));
        shuffle_inplace(claims, rng);
        return claims;
    }

    /// 2-class claims over fresh entities with given single-sentence
    /// retrieval; a third each is evidence-flipped, claim-flipped, and
    /// left unmodified.
    std::vector<ClaimRecord> make_perturbed_split(int n_claims) {
        std::vector<ClaimRecord> claims;
        for (int i = 0; i < n_claims; ++i) {
            Entity e = make_entity();
            const std::string name = e.mention();
            const std::string own_occ = kOccupations[static_cast<size_t>(e.occupation)];
            const std::string origin = capitalize(kOrigins[static_cast<size_t>(e.origin)]);
            const int wrong = pick_other(kOccupations, e.occupation);
            const std::string wrong_occ = kOccupations[static_cast<size_t>(wrong)];

            ClaimRecord rec;
            rec.id = next_id++;
            rec.given_evidence = {EvidencePointer{e.title(), 0}};
            rec.gold_evidence_sets = {{EvidencePointer{e.title(), 0}}};

            const bool base_supports = i % 2 == 0;
            rec.claim_text = name + " is a " + (base_supports ? own_occ : wrong_occ) + ".";
            rec.label = base_supports ? Label::Supports : Label::Refutes;

            switch (i % 6) {
                case 0:
                case 1: {
                    // Evidence flipped in the perturbed datastore.
                    rec.datastore_changed = true;
                    std::string flipped;
                    if (base_supports) {
                        // Negated statement of the same occupation: claim becomes false.
                        flipped = name + " is not a " + own_occ + " from " + origin + ".";
                        rec.label = Label::Refutes;
                    } else {
                        // Paraphrased statement of the claimed occupation: claim becomes true.
                        flipped = name + " is a " +
                                  kOccupationSynonyms[static_cast<size_t>(wrong)] + " from " +
                                  origin + ".";
                        rec.label = Label::Supports;
                    }
                    out.perturbed_wiki.add_sentence(e.title(), 0, flipped);
                    break;
                }
                case 2:
                case 3:
                    // Claim rewritten to flip the label; datastore untouched.
                    rec.claim_text = name + " is a " + (base_supports ? wrong_occ : own_occ) + ".";
                    rec.label = base_supports ? Label::Refutes : Label::Supports;
                    break;
                default:
                    break;  // unmodified
            }
            claims.push_back(std::move(rec));
        }
        shuffle_inplace(claims, rng);
        return claims;
    }

    void run(const SyntheticConfig& cfg) {
        out.train = make_split(cfg.train_claims);
        out.dev = make_split(cfg.dev_claims);
        out.test = make_split(cfg.test_claims);

        // Perturbed sentences land in perturbed_wiki before the shared
        // pages get copied in, so they win the map insert below.
        auto perturbed_dev = make_perturbed_split(cfg.perturbed_dev_claims);
        auto perturbed_test = make_perturbed_split(cfg.perturbed_test_claims);

        // Sibling pointers: deterministic ring over the generated entities.
        for (size_t i = 0; i < entities.size(); ++i)
            add_entity_page(entities[i], entities[(i + 1) % entities.size()]);
        add_family_pages();
        add_topic_pages();

        for (const auto& title : out.wiki.titles())
            for (int idx : out.wiki.sentence_indices(title)) {
                EvidencePointer p{title, idx};
                if (!out.perturbed_wiki.resolves(p))
                    out.perturbed_wiki.add_sentence(title, idx, *out.wiki.find(p));
            }

        out.perturbed_dev = std::move(perturbed_dev);
        out.perturbed_test = std::move(perturbed_test);
    }
};

void check_balance(const std::vector<ClaimRecord>& claims, int n_classes) {
    std::array<int, 3> counts = {0, 0, 0};
    for (const auto& c : claims) counts[static_cast<size_t>(label_index(c.label))]++;
    int lo = counts[0], hi = counts[0];
    for (int i = 0; i < n_classes; ++i) {
        lo = std::min(lo, counts[static_cast<size_t>(i)]);
        hi = std::max(hi, counts[static_cast<size_t>(i)]);
    }
    if (hi - lo > 1) throw std::logic_error("synthetic split is not class-balanced within 1");
}

}  // namespace

SyntheticCorpus generate_synthetic(const SyntheticConfig& cfg) {
    if (cfg.train_claims < 1 || cfg.dev_claims < 1 || cfg.test_claims < 1 ||
        cfg.perturbed_dev_claims < 1 || cfg.perturbed_test_claims < 1)
        throw std::invalid_argument("synthetic config sizes must be >= 1");
    const long need_entities = (cfg.train_claims + cfg.dev_claims + cfg.test_claims + 2) / 3 +
                               cfg.perturbed_dev_claims + cfg.perturbed_test_claims + 3;
    if (need_entities > static_cast<long>(kFirstNames.size() * kLastNames.size()))
        throw std::invalid_argument("synthetic config demands more entities than template capacity");

    Generator gen(cfg.seed);
    gen.run(cfg);
    check_balance(gen.out.train, 3);
    check_balance(gen.out.dev, 3);
    check_balance(gen.out.test, 3);
    check_balance(gen.out.perturbed_dev, 2);
    check_balance(gen.out.perturbed_test, 2);
    return std::move(gen.out);
}

void save_synthetic(const SyntheticCorpus& corpus, const std::string& dir) {
    ensure_dir(dir);
    corpus.wiki.save_tsv(dir + "/wiki.tsv");
    corpus.perturbed_wiki.save_tsv(dir + "/perturbed_wiki.tsv");
    save_claims(dir + "/train.jsonl", corpus.train);
    save_claims(dir + "/dev.jsonl", corpus.dev);
    save_claims(dir + "/test.jsonl", corpus.test);
    save_claims(dir + "/perturbed_dev.jsonl", corpus.perturbed_dev);
    save_claims(dir + "/perturbed_test.jsonl", corpus.perturbed_test);
}

}  // namespace memmatch

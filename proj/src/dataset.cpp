#include "edlab/dataset.hpp"

#include <algorithm>
#include <set>

#include "edlab/errors.hpp"
#include "edlab/rng.hpp"

namespace edlab {

namespace {

struct Relation {
    const char* main_tpl;
    const char* re1_tpl;
    const char* re2_tpl;
    std::vector<const char*> objects;
};

const std::vector<Relation>& relations() {
    static const std::vector<Relation> r = {
        {"{} works as a", "indeed {} works as a", "people say {} works as a",
         {"smith", "baker", "tailor", "farmer", "miner", "scribe", "potter", "weaver"}},
        {"{} lives in", "indeed {} lives in", "people say {} lives in",
         {"york", "delhi", "cairo", "oslo", "lima", "kyoto", "quito", "perth"}},
        {"{} plays the", "indeed {} plays the", "people say {} plays the",
         {"flute", "drum", "cello", "oboe", "banjo", "viola", "organ", "harp"}},
        {"{} speaks", "indeed {} speaks", "people say {} speaks",
         {"latin", "hindi", "welsh", "tamil", "norse", "greek", "czech", "zulu"}},
        {"{} studies", "indeed {} studies", "people say {} studies",
         {"botany", "physics", "logic", "algebra", "law", "music", "anatomy", "poetry"}},
        {"{} supports the", "indeed {} supports the", "people say {} supports the",
         {"eagles", "tigers", "wolves", "sharks", "hawks", "bisons", "otters", "ravens"}},
        {"{} drinks", "indeed {} drinks", "people say {} drinks",
         {"coffee", "tea", "juice", "cider", "cocoa", "milk", "soda", "water"}},
        {"{} owns a", "indeed {} owns a", "people say {} owns a",
         {"falcon", "horse", "lizard", "rabbit", "donkey", "ferret", "parrot", "badger"}},
    };
    return r;
}

std::vector<std::string> make_subjects(int n, Rng& rng) {
    static const char* consonants = "bdfgklmnprstvz";
    static const char* vowels = "aeiou";
    std::vector<std::string> pool;
    for (int c1 = 0; consonants[c1]; ++c1)
        for (int v1 = 0; vowels[v1]; ++v1)
            for (int c2 = 0; consonants[c2]; ++c2)
                for (int v2 = 0; vowels[v2]; ++v2)
                    pool.push_back({consonants[c1], vowels[v1], consonants[c2], vowels[v2]});
    rng.shuffle(pool);
    if (static_cast<std::size_t>(n) > pool.size())
        throw ConfigError("toy world: subject pool exhausted");
    pool.resize(static_cast<std::size_t>(n));
    return pool;
}

void collect_words(const std::string& text, std::set<std::string>& into) {
    std::size_t pos = 0;
    while (pos < text.size()) {
        while (pos < text.size() && text[pos] == ' ') ++pos;
        std::size_t end = pos;
        while (end < text.size() && text[end] != ' ') ++end;
        if (end > pos) {
            const std::string w = text.substr(pos, end - pos);
            if (w != "{}") into.insert(w);
        }
        pos = end;
    }
}

}  // namespace

ToyWorld make_toy_world(const ToyWorldOptions& opts) {
    if (opts.n_facts < 1) throw ConfigError("toy world: n_facts must be >= 1");
    Rng rng(opts.seed);
    const auto& rels = relations();

    const int total_subjects = opts.n_facts + opts.n_probe_subjects;
    const std::vector<std::string> subjects = make_subjects(total_subjects, rng);

    ToyWorld world;
    std::set<std::string> vocab;
    vocab.insert("is");
    vocab.insert("a");

    // probe facts first: they feed the locality probe pools
    struct ProbeFact {
        std::string prompt;
        std::string object;
    };
    std::vector<ProbeFact> probe_facts;
    for (int j = 0; j < opts.n_probe_subjects; ++j) {
        const std::string& subj = subjects[static_cast<std::size_t>(opts.n_facts + j)];
        const Relation& rel = rels[static_cast<std::size_t>(j) % rels.size()];
        const std::string obj = rel.objects[rng.below(rel.objects.size())];
        const std::string prompt = realize_template(rel.main_tpl, subj);
        probe_facts.push_back({prompt, obj});
        world.train_sentences.push_back(prompt + " " + obj);
        collect_words(prompt + " " + obj, vocab);
        vocab.insert(subj);
    }

    for (int i = 0; i < opts.n_facts; ++i) {
        const std::string& subj = subjects[static_cast<std::size_t>(i)];
        const Relation& rel = rels[static_cast<std::size_t>(i) % rels.size()];
        const std::size_t true_idx = rng.below(rel.objects.size());
        std::size_t new_idx = rng.below(rel.objects.size() - 1);
        if (new_idx >= true_idx) ++new_idx;  // counterfactual target differs

        FactEdit f;
        f.id = "f" + std::string(i < 10 ? "00" : i < 100 ? "0" : "") + std::to_string(i);
        f.subject = subj;
        f.prompt_template = rel.main_tpl;
        f.target_object = rel.objects[new_idx];
        f.rephrases.push_back(realize_template(rel.re1_tpl, subj));
        f.rephrases.push_back(realize_template(rel.re2_tpl, subj));
        if (!probe_facts.empty()) {
            for (int p = 0; p < 2; ++p) {
                const auto& probe =
                    probe_facts[static_cast<std::size_t>(2 * i + p) % probe_facts.size()];
                f.locality_probes.push_back({probe.prompt, probe.object});
            }
        }
        f.validate();

        const std::string true_obj = rel.objects[true_idx];
        world.true_objects.push_back(true_obj);
        world.train_sentences.push_back(f.prompt() + " " + true_obj);
        world.train_sentences.push_back(f.rephrases[0] + " " + true_obj);
        world.holdout_sentences.push_back(f.rephrases[1] + " " + true_obj);

        collect_words(f.prompt() + " " + true_obj, vocab);
        collect_words(f.rephrases[0], vocab);
        collect_words(f.rephrases[1], vocab);
        vocab.insert(f.target_object);
        world.facts.push_back(std::move(f));
    }

    world.vocabulary.assign(vocab.begin(), vocab.end());

    for (const FactEdit& f : world.facts) world.drift_prompts.push_back(f.prompt());
    for (const ProbeFact& p : probe_facts) world.drift_prompts.push_back(p.prompt);
    for (const FactEdit& f : world.facts) {
        if (world.drift_prompts.size() >= 100) break;
        world.drift_prompts.push_back(f.rephrases[0]);
    }
    if (world.drift_prompts.size() > 100) world.drift_prompts.resize(100);
    return world;
}

std::vector<std::vector<int>> tokenize_all(const Tokenizer& tok,
                                           const std::vector<std::string>& sentences) {
    std::vector<std::vector<int>> out;
    out.reserve(sentences.size());
    for (const std::string& s : sentences) out.push_back(tok.encode(s));
    return out;
}

std::vector<std::vector<int>> sample_windows(const std::vector<std::vector<int>>& sentences,
                                             int n_windows, int window_len, std::uint64_t seed) {
    if (sentences.empty()) throw DataError("sample_windows: empty sentence pool");
    Rng rng(seed);
    std::vector<std::vector<int>> windows;
    windows.reserve(static_cast<std::size_t>(n_windows));
    for (int w = 0; w < n_windows; ++w) {
        std::vector<int> win;
        while (static_cast<int>(win.size()) < window_len) {
            const auto& s = sentences[rng.below(sentences.size())];
            win.insert(win.end(), s.begin(), s.end());
        }
        win.resize(static_cast<std::size_t>(window_len));
        windows.push_back(std::move(win));
    }
    return windows;
}

}  // namespace edlab

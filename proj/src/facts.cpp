#include "edlab/facts.hpp"

#include <fstream>
#include <unordered_set>

#include "edlab/errors.hpp"
#include "json.hpp"

namespace edlab {

std::string realize_template(const std::string& tpl, const std::string& subject) {
    const std::size_t slot = tpl.find("{}");
    if (slot == std::string::npos) throw ParseError("template has no {} slot: " + tpl);
    std::string out = tpl;
    out.replace(slot, 2, subject);
    return out;
}

std::string FactEdit::prompt() const { return realize_template(prompt_template, subject); }

void FactEdit::validate() const {
    if (id.empty()) throw ParseError("fact: empty id");
    if (subject.empty()) throw ParseError("fact '" + id + "': empty subject");
    if (target_object.empty()) throw ParseError("fact '" + id + "': empty target");
    const std::size_t first = prompt_template.find("{}");
    if (first == std::string::npos)
        throw ParseError("fact '" + id + "': template missing {} slot");
    if (prompt_template.find("{}", first + 2) != std::string::npos)
        throw ParseError("fact '" + id + "': template has more than one {} slot");
}

namespace {

FactEdit fact_from_json(const nlohmann::json& j, std::size_t index) {
    try {
        FactEdit f;
        f.id = j.at("id").get<std::string>();
        f.subject = j.at("subject").get<std::string>();
        f.prompt_template = j.at("prompt").get<std::string>();
        f.target_object = j.at("target").get<std::string>();
        if (j.contains("rephrases"))
            f.rephrases = j.at("rephrases").get<std::vector<std::string>>();
        if (j.contains("locality")) {
            for (const auto& p : j.at("locality")) {
                f.locality_probes.push_back(
                    {p.at("prompt").get<std::string>(), p.at("expected").get<std::string>()});
            }
        }
        f.validate();
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("fact record " + std::to_string(index) + ": " + e.what());
    } catch (const ParseError& e) {
        throw ParseError("fact record " + std::to_string(index) + ": " + e.what());
    }
}

}  // namespace

std::vector<FactEdit> load_facts(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("facts: cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("facts: " + path + ": " + e.what());
    }
    const nlohmann::json& arr = j.is_array() ? j : j.at("facts");
    std::vector<FactEdit> out;
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        FactEdit f = fact_from_json(arr[i], i);
        if (!seen.insert(f.id).second)
            throw ParseError("fact record " + std::to_string(i) + ": duplicate id '" + f.id + "'");
        out.push_back(std::move(f));
    }
    return out;
}

void save_facts(const std::vector<FactEdit>& facts, const std::string& path) {
    nlohmann::json arr = nlohmann::json::array();
    for (const FactEdit& f : facts) {
        nlohmann::json probes = nlohmann::json::array();
        for (const LocalityProbe& p : f.locality_probes)
            probes.push_back({{"prompt", p.prompt}, {"expected", p.expected}});
        arr.push_back({{"id", f.id},
                       {"subject", f.subject},
                       {"prompt", f.prompt_template},
                       {"target", f.target_object},
                       {"rephrases", f.rephrases},
                       {"locality", probes}});
    }
    nlohmann::json j = {{"format_version", 1}, {"facts", arr}};
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("facts: cannot open for writing: " + path);
    out << j.dump(2) << '\n';
}

}  // namespace edlab

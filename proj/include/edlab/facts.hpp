#pragma once

#include <string>
#include <vector>

namespace edlab {

struct LocalityProbe {
    std::string prompt;
    std::string expected;  // pre-edit ground truth, kept for reference
};

// One editing request: rewrite the object predicted after the realized
// prompt template to target_object.
struct FactEdit {
    std::string id;
    std::string subject;
    std::string prompt_template;  // contains exactly one "{}" subject slot
    std::string target_object;
    std::vector<std::string> rephrases;  // realized prompt strings
    std::vector<LocalityProbe> locality_probes;

    std::string prompt() const;     // template with the subject substituted
    void validate() const;          // throws ParseError on malformed records
};

std::string realize_template(const std::string& tpl, const std::string& subject);

// JSON fact file loader/saver; duplicate ids and malformed records rejected
// with the offending record index.
std::vector<FactEdit> load_facts(const std::string& path);
void save_facts(const std::vector<FactEdit>& facts, const std::string& path);

}  // namespace edlab

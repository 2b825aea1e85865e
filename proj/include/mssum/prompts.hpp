#pragma once

#include <map>
#include <set>
#include <string>

namespace mssum {

// Named prompt templates with <placeholder> slots. Defaults are built in;
// any template can be overridden byte-for-byte from a directory of
// <name>.txt files.
class PromptLibrary {
public:
    static PromptLibrary defaults();
    // Missing files fall back to the defaults.
    static PromptLibrary from_directory(const std::string& dir);

    const std::string& get(const std::string& name) const;
    void set(const std::string& name, std::string text);
    bool has(const std::string& name) const;

private:
    std::map<std::string, std::string> templates_;
};

// Substitutes <key> for each entry in vars. Keys listed in optional_keys but
// absent from vars make their whole line disappear (persona/participant lines
// are only present when that context exists). Other placeholders are left as-is.
std::string render_prompt(const std::string& tmpl,
                          const std::map<std::string, std::string>& vars,
                          const std::set<std::string>& optional_keys = {});

}  // namespace mssum

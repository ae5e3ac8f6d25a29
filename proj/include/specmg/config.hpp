#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace specmg {

// Sectioned key=value configuration.  Lines look like
//
//   [grid]
//   dim = 2        # trailing comments allowed
//   nx  = 64
//
// Section and key lookups are case-sensitive.  Values are stored verbatim
// (trimmed); typed getters parse on demand and throw std::runtime_error with
// the offending section.key on malformed input.  Insertion order is preserved
// so serialize() round-trips deterministically.
class Config {
public:
    Config() = default;

    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& section, const std::string& key) const;

    // Throwing getters.
    std::string get_string(const std::string& section, const std::string& key) const;
    int get_int(const std::string& section, const std::string& key) const;
    double get_double(const std::string& section, const std::string& key) const;
    bool get_bool(const std::string& section, const std::string& key) const;

    // Defaulted getters.
    std::string get_string(const std::string& section, const std::string& key, const std::string& dflt) const;
    int get_int(const std::string& section, const std::string& key, int dflt) const;
    double get_double(const std::string& section, const std::string& key, double dflt) const;
    bool get_bool(const std::string& section, const std::string& key, bool dflt) const;

    // Comma- or whitespace-separated lists.
    std::vector<int> get_int_list(const std::string& section, const std::string& key) const;
    std::vector<double> get_double_list(const std::string& section, const std::string& key) const;

    void set(const std::string& section, const std::string& key, const std::string& value);
    void set_double(const std::string& section, const std::string& key, double value);
    void set_int(const std::string& section, const std::string& key, int value);

    // Applies a "section.key=value" override as accepted on the command line.
    void apply_override(const std::string& spec);

    std::vector<std::string> section_names() const;
    std::vector<std::string> keys(const std::string& section) const;

    std::string serialize() const;
    void save(const std::string& path) const;

private:
    struct Section {
        std::string name;
        std::vector<std::pair<std::string, std::string>> entries;
    };

    const std::string* find(const std::string& section, const std::string& key) const;
    Section& section_ref(const std::string& name);

    std::vector<Section> sections_;
};

}  // namespace specmg

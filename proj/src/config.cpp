#include "specmg/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace specmg {
namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string strip_comment(const std::string& line) {
    // '#' and ';' start a comment anywhere outside of a value that needs them;
    // values here never legitimately contain either character.
    const std::size_t pos = line.find_first_of("#;");
    return pos == std::string::npos ? line : line.substr(0, pos);
}

[[noreturn]] void fail(const std::string& what) { throw std::runtime_error(what); }

std::string qualify(const std::string& section, const std::string& key) {
    return section + "." + key;
}

double parse_double(const std::string& text, const std::string& where) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (trim(text.substr(used)).empty()) return v;
    } catch (const std::exception&) {
    }
    fail("config: expected a number for " + where + ", got '" + text + "'");
}

int parse_int(const std::string& text, const std::string& where) {
    try {
        std::size_t used = 0;
        const long v = std::stol(text, &used);
        if (trim(text.substr(used)).empty() && v >= std::numeric_limits<int>::min() &&
            v <= std::numeric_limits<int>::max()) {
            return static_cast<int>(v);
        }
    } catch (const std::exception&) {
    }
    fail("config: expected an integer for " + where + ", got '" + text + "'");
}

bool parse_bool(const std::string& text, const std::string& where) {
    std::string t = text;
    std::transform(t.begin(), t.end(), t.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (t == "true" || t == "yes" || t == "on" || t == "1") return true;
    if (t == "false" || t == "no" || t == "off" || t == "0") return false;
    fail("config: expected a boolean for " + where + ", got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (const char c : text) {
        if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

}  // namespace

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str(), path);
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string body = trim(strip_comment(line));
        if (body.empty()) continue;
        const std::string where = origin + ":" + std::to_string(lineno);
        if (body.front() == '[') {
            if (body.back() != ']') fail("config: unterminated section header at " + where);
            section = trim(body.substr(1, body.size() - 2));
            if (section.empty()) fail("config: empty section name at " + where);
            cfg.section_ref(section);
            continue;
        }
        const std::size_t eq = body.find('=');
        if (eq == std::string::npos) fail("config: expected key = value at " + where);
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (key.empty()) fail("config: empty key at " + where);
        if (section.empty()) fail("config: key '" + key + "' outside any section at " + where);
        cfg.set(section, key, value);
    }
    return cfg;
}

const std::string* Config::find(const std::string& section, const std::string& key) const {
    for (const Section& s : sections_) {
        if (s.name != section) continue;
        for (const auto& [k, v] : s.entries) {
            if (k == key) return &v;
        }
    }
    return nullptr;
}

Config::Section& Config::section_ref(const std::string& name) {
    for (Section& s : sections_) {
        if (s.name == name) return s;
    }
    sections_.push_back(Section{name, {}});
    return sections_.back();
}

bool Config::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

std::string Config::get_string(const std::string& section, const std::string& key) const {
    const std::string* v = find(section, key);
    if (!v) fail("config: missing required entry " + qualify(section, key));
    return *v;
}

int Config::get_int(const std::string& section, const std::string& key) const {
    return parse_int(get_string(section, key), qualify(section, key));
}

double Config::get_double(const std::string& section, const std::string& key) const {
    return parse_double(get_string(section, key), qualify(section, key));
}

bool Config::get_bool(const std::string& section, const std::string& key) const {
    return parse_bool(get_string(section, key), qualify(section, key));
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& dflt) const {
    const std::string* v = find(section, key);
    return v ? *v : dflt;
}

int Config::get_int(const std::string& section, const std::string& key, int dflt) const {
    const std::string* v = find(section, key);
    return v ? parse_int(*v, qualify(section, key)) : dflt;
}

double Config::get_double(const std::string& section, const std::string& key, double dflt) const {
    const std::string* v = find(section, key);
    return v ? parse_double(*v, qualify(section, key)) : dflt;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool dflt) const {
    const std::string* v = find(section, key);
    return v ? parse_bool(*v, qualify(section, key)) : dflt;
}

std::vector<int> Config::get_int_list(const std::string& section, const std::string& key) const {
    std::vector<int> out;
    for (const std::string& item : split_list(get_string(section, key))) {
        out.push_back(parse_int(item, qualify(section, key)));
    }
    return out;
}

std::vector<double> Config::get_double_list(const std::string& section, const std::string& key) const {
    std::vector<double> out;
    for (const std::string& item : split_list(get_string(section, key))) {
        out.push_back(parse_double(item, qualify(section, key)));
    }
    return out;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
    Section& s = section_ref(section);
    for (auto& [k, v] : s.entries) {
        if (k == key) {
            v = value;
            return;
        }
    }
    s.entries.emplace_back(key, value);
}

void Config::set_double(const std::string& section, const std::string& key, double value) {
    std::ostringstream ss;
    ss.precision(17);
    ss << value;
    set(section, key, ss.str());
}

void Config::set_int(const std::string& section, const std::string& key, int value) {
    set(section, key, std::to_string(value));
}

void Config::apply_override(const std::string& spec) {
    const std::size_t eq = spec.find('=');
    if (eq == std::string::npos) fail("override '" + spec + "' is not of the form section.key=value");
    const std::string path = trim(spec.substr(0, eq));
    const std::string value = trim(spec.substr(eq + 1));
    const std::size_t dot = path.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 >= path.size()) {
        fail("override '" + spec + "' is not of the form section.key=value");
    }
    set(path.substr(0, dot), path.substr(dot + 1), value);
}

std::vector<std::string> Config::section_names() const {
    std::vector<std::string> out;
    out.reserve(sections_.size());
    for (const Section& s : sections_) out.push_back(s.name);
    return out;
}

std::vector<std::string> Config::keys(const std::string& section) const {
    std::vector<std::string> out;
    for (const Section& s : sections_) {
        if (s.name != section) continue;
        for (const auto& [k, v] : s.entries) out.push_back(k);
    }
    return out;
}

std::string Config::serialize() const {
    std::ostringstream ss;
    bool first = true;
    for (const Section& s : sections_) {
        if (!first) ss << "\n";
        first = false;
        ss << "[" << s.name << "]\n";
        for (const auto& [k, v] : s.entries) ss << k << " = " << v << "\n";
    }
    return ss.str();
}

void Config::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) fail("config: cannot write '" + path + "'");
    out << serialize();
}

}  // namespace specmg

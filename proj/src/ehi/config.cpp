#include "qnsim/ehi/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace qnsim::ehi {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string strip_comment(const std::string& line) {
    // '#' starts a comment unless inside double quotes.
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
        return s.substr(1, s.size() - 2);
    return s;
}

} // namespace

bool KvSection::has(const std::string& key) const { return find(key) != nullptr; }

const std::string* KvSection::find(const std::string& key) const {
    for (const auto& [k, v] : entries)
        if (k == key) return &v;
    return nullptr;
}

std::string KvSection::get_str(const std::string& key, const std::string& def) const {
    const std::string* v = find(key);
    return v ? *v : def;
}

i64 KvSection::get_i64(const std::string& key, i64 def) const {
    const std::string* v = find(key);
    return v ? parse_int(*v, name + "." + key) : def;
}

double KvSection::get_f64(const std::string& key, double def) const {
    const std::string* v = find(key);
    return v ? parse_number(*v, name + "." + key) : def;
}

bool KvSection::get_bool(const std::string& key, bool def) const {
    const std::string* v = find(key);
    if (!v) return def;
    if (*v == "true" || *v == "yes" || *v == "1") return true;
    if (*v == "false" || *v == "no" || *v == "0") return false;
    throw SetupError("expected boolean for " + name + "." + key + ", got: " + *v);
}

i64 KvSection::req_i64(const std::string& key) const {
    const std::string* v = find(key);
    if (!v) throw SetupError("missing required key " + key + " in section [" + name + "]");
    return parse_int(*v, name + "." + key);
}

std::string KvSection::req_str(const std::string& key) const {
    const std::string* v = find(key);
    if (!v) throw SetupError("missing required key " + key + " in section [" + name + "]");
    return *v;
}

std::vector<std::string> KvSection::get_list(const std::string& key) const {
    std::vector<std::string> out;
    const std::string* v = find(key);
    if (!v) return out;
    std::string cur;
    for (char c : *v) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    std::string last = trim(cur);
    if (!last.empty()) out.push_back(last);
    return out;
}

double parse_number(const std::string& text, const std::string& context) {
    std::string t = trim(text);
    if (t == "inf" || t == "infinite") return kInf;
    char* end = nullptr;
    double v = std::strtod(t.c_str(), &end);
    if (end == t.c_str() || *end != '\0')
        throw SetupError("bad number for " + context + ": '" + text + "'");
    return v;
}

i64 parse_int(const std::string& text, const std::string& context) {
    std::string t = trim(text);
    // Accept scientific notation for large durations (1e7).
    if (t.find_first_of(".eE") != std::string::npos &&
        t.find_first_not_of("0123456789+-") != std::string::npos) {
        double v = parse_number(t, context);
        if (std::isinf(v)) throw SetupError("integer expected for " + context);
        return static_cast<i64>(std::llround(v));
    }
    char* end = nullptr;
    long long v = std::strtoll(t.c_str(), &end, 10);
    if (end == t.c_str() || *end != '\0')
        throw SetupError("bad integer for " + context + ": '" + text + "'");
    return v;
}

KvConfig KvConfig::parse_string(const std::string& text, const std::string& origin) {
    KvConfig cfg;
    cfg.origin_ = origin;
    cfg.sections_.push_back(KvSection{"", {}});
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    size_t current = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(strip_comment(line));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw SetupError(origin + ":" + std::to_string(lineno) +
                                 ": unterminated section header");
            cfg.sections_.push_back(KvSection{trim(s.substr(1, s.size() - 2)), {}});
            current = cfg.sections_.size() - 1;
            continue;
        }
        size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw SetupError(origin + ":" + std::to_string(lineno) +
                             ": expected 'key = value'");
        std::string key = trim(s.substr(0, eq));
        std::string val = unquote(trim(s.substr(eq + 1)));
        if (key.empty())
            throw SetupError(origin + ":" + std::to_string(lineno) + ": empty key");
        cfg.sections_[current].entries.emplace_back(key, val);
    }
    return cfg;
}

KvConfig KvConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SetupError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str(), path);
}

const KvSection* KvConfig::find(const std::string& name) const {
    for (const auto& s : sections_)
        if (s.name == name) return &s;
    return nullptr;
}

std::vector<const KvSection*> KvConfig::all(const std::string& name) const {
    std::vector<const KvSection*> out;
    for (const auto& s : sections_)
        if (s.name == name) out.push_back(&s);
    return out;
}

std::vector<const KvSection*> KvConfig::with_prefix(const std::string& prefix) const {
    std::vector<const KvSection*> out;
    for (const auto& s : sections_)
        if (s.name.rfind(prefix, 0) == 0) out.push_back(&s);
    return out;
}

void KvConfig::set(const std::string& section, const std::string& key, const std::string& value) {
    for (auto& s : sections_) {
        if (s.name != section) continue;
        for (auto& [k, v] : s.entries)
            if (k == key) {
                v = value;
                return;
            }
        s.entries.emplace_back(key, value);
        return;
    }
    sections_.push_back(KvSection{section, {{key, value}}});
}

LoadedNetwork load_network(const KvConfig& cfg) {
    LoadedNetwork out;
    for (const KvSection* sec : cfg.with_prefix("node.")) {
        std::string name = sec->name.substr(5);
        if (name.empty()) throw SetupError("node section without a name");
        if (out.nodes.count(name)) throw SetupError("duplicate node section: " + name);
        std::string preset = sec->get_str("preset", "generic");
        int nq = static_cast<int>(sec->get_i64("num_qubits", 2));
        NodeInfo info = make_preset(preset, nq);
        info.name = name;
        info.id = static_cast<int>(out.node_order.size());
        info.host_latency = sec->get_i64("host_latency", info.host_latency);
        info.qnos_latency = sec->get_i64("qnos_latency", info.qnos_latency);
        if (sec->has("t1") || sec->has("t2")) {
            for (auto& q : info.qubits) {
                q.t1 = sec->get_f64("t1", q.t1);
                q.t2 = sec->get_f64("t2", q.t2);
            }
        }
        if (sec->has("gate_depolar")) {
            double p = sec->get_f64("gate_depolar", 0.0);
            for (auto& g : info.gates) g.depolar = p;
        }
        out.node_order.push_back(name);
        out.nodes.emplace(name, std::move(info));
    }
    for (const KvSection* sec : cfg.with_prefix("link.")) {
        std::string rest = sec->name.substr(5);
        size_t dot = rest.find('.');
        if (dot == std::string::npos)
            throw SetupError("link section must be [link.<a>.<b>]: " + sec->name);
        std::string a = rest.substr(0, dot), b = rest.substr(dot + 1);
        if (!out.nodes.count(a) || !out.nodes.count(b))
            throw SetupError("link references unknown node: " + sec->name);
        LinkInfo li;
        li.fidelity = sec->get_f64("fidelity", 1.0);
        li.epr_duration = sec->get_i64("epr_duration", 1000000);
        li.cc_latency = sec->get_i64("cc", 1000000);
        out.network.set_link(a, b, li);
    }
    if (const KvSection* lat = cfg.find("latencies"))
        out.internal_signal_latency = lat->get_i64("internal_signal", 0);
    return out;
}

} // namespace qnsim::ehi

#pragma once
// Key-value configuration format (sections of `key = value` lines) used for
// hardware descriptions and simulation scenarios, plus the hardware loader.
//
//   # comment
//   top_key = 3
//   [node.alice]
//   preset = generic
//   num_qubits = 2
//   [link.alice.bob]
//   fidelity = 0.95
//
// Repeated section headers open separate sections (used for program batches).
// Values are untyped text until a typed getter is applied.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qnsim/common.hpp"
#include "qnsim/ehi/ehi.hpp"

namespace qnsim::ehi {

struct KvSection {
    std::string name; // "" for the top-level section
    std::vector<std::pair<std::string, std::string>> entries;

    bool has(const std::string& key) const;
    const std::string* find(const std::string& key) const;
    std::string get_str(const std::string& key, const std::string& def = "") const;
    i64 get_i64(const std::string& key, i64 def) const;
    double get_f64(const std::string& key, double def) const;
    bool get_bool(const std::string& key, bool def) const;
    i64 req_i64(const std::string& key) const;
    std::string req_str(const std::string& key) const;
    // Comma-separated list value.
    std::vector<std::string> get_list(const std::string& key) const;
};

class KvConfig {
public:
    static KvConfig parse_string(const std::string& text, const std::string& origin);
    static KvConfig parse_file(const std::string& path);

    const KvSection* find(const std::string& name) const;      // first match or null
    std::vector<const KvSection*> all(const std::string& name) const;
    std::vector<const KvSection*> with_prefix(const std::string& prefix) const;
    const KvSection& top() const { return sections_.front(); }
    const std::string& origin() const { return origin_; }

    // Replaces `key` in the first section called `section` ("" for top-level),
    // appending the entry or the whole section when absent. Used by sweeps.
    void set(const std::string& section, const std::string& key, const std::string& value);

private:
    std::string origin_;
    std::vector<KvSection> sections_; // [0] is the top-level section
};

// Parses a numeric literal: integers, decimals, scientific notation, "inf".
double parse_number(const std::string& text, const std::string& context);
i64 parse_int(const std::string& text, const std::string& context);

// A network of nodes plus link parameters loaded from configuration.
struct LoadedNetwork {
    std::vector<std::string> node_order; // declaration order; index = node id
    std::map<std::string, NodeInfo> nodes;
    NetworkInfo network;
    time_ns internal_signal_latency = 0;
};

// Reads every [node.*], [link.*.*] and [latencies] section.
LoadedNetwork load_network(const KvConfig& cfg);

} // namespace qnsim::ehi

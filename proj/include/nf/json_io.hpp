#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "nf/graph.hpp"
#include "nf/metamodel.hpp"
#include "nf/model.hpp"

namespace nf {

using Json = nlohmann::json;

constexpr int kModelFormatVersion = 1;

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what, Report report = {})
        : std::runtime_error(what), report(std::move(report)) {}
    Report report;
};

// ---------------------------------------------------------------------------
// Values
// ---------------------------------------------------------------------------

inline Json value_to_json(const Value& v) {
    if (v.is_boolean()) return Json{{"b", v.as_boolean() ? 1 : 0}};
    if (v.is_positive_int()) return Json{{"n", v.as_positive_int()}};
    if (v.is_amino_acid()) return Json{{"aa", std::string(1, v.as_amino_acid())}};
    if (v.is_interval()) return Json{{"int", {v.as_interval().lo, v.as_interval().hi}}};
    return Json{{"rate", v.as_rate().to_fraction_string()}};
}

inline Rational parse_rational(const std::string& text) {
    auto slash = text.find('/');
    try {
        if (slash == std::string::npos) return Rational(std::stoll(text), 1);
        return Rational(std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1)));
    } catch (const std::exception& e) {
        throw IoError("malformed rational '" + text + "': " + e.what());
    }
}

inline Value value_from_json(const Json& j) {
    if (!j.is_object() || j.size() != 1) throw IoError("malformed value: " + j.dump());
    try {
        if (j.contains("b")) {
            int b = j.at("b").get<int>();
            if (b != 0 && b != 1) throw IoError("boolean value must be 0 or 1");
            return Value::boolean(b == 1);
        }
        if (j.contains("n")) return Value::positive_int(j.at("n").get<std::int64_t>());
        if (j.contains("aa")) {
            std::string s = j.at("aa").get<std::string>();
            if (s.size() != 1) throw IoError("amino-acid value must be one letter: " + s);
            return Value::amino_acid(s[0]);
        }
        if (j.contains("int")) {
            const auto& arr = j.at("int");
            if (!arr.is_array() || arr.size() != 2) throw IoError("interval value must be [lo,hi]");
            return Value::interval(arr[0].get<std::int64_t>(), arr[1].get<std::int64_t>());
        }
        if (j.contains("rate")) return Value::rate(parse_rational(j.at("rate").get<std::string>()));
    } catch (const IoError&) {
        throw;
    } catch (const std::exception& e) {
        throw IoError("malformed value " + j.dump() + ": " + e.what());
    }
    throw IoError("unknown value tag: " + j.dump());
}

// ---------------------------------------------------------------------------
// Graphs
// ---------------------------------------------------------------------------

inline Json graph_to_json(const StructuredGraph& g) {
    Json nodes = Json::array();
    for (const auto& n : g.nodes()) {
        Json node{{"id", n}};
        auto label = g.label_of(n);
        if (label) node["label"] = *label;
        if (!g.values_of(n).empty()) {
            Json values = Json::array();
            for (const auto& v : g.values_of(n)) values.push_back(value_to_json(v));
            node["values"] = values;
        }
        nodes.push_back(node);
    }
    auto edges_to_json = [](const EdgeSet& edges) {
        Json out = Json::array();
        for (const auto& [a, b] : edges) out.push_back(Json::array({a, b}));
        return out;
    };
    return Json{{"nodes", nodes}, {"s_edges", edges_to_json(g.s_edges())},
                {"e_edges", edges_to_json(g.e_edges())}};
}

inline StructuredGraph graph_from_json(const Json& j) {
    if (!j.is_object()) throw IoError("graph document must be an object");
    StructuredGraph g;
    try {
        for (const auto& node : j.value("nodes", Json::array())) {
            NodeId id = node.at("id").get<std::string>();
            if (g.has_node(id)) throw IoError("duplicate node id " + id);
            ValueSet values;
            for (const auto& v : node.value("values", Json::array())) values.insert(value_from_json(v));
            std::optional<std::string> label;
            if (node.contains("label")) label = node.at("label").get<std::string>();
            g.add_node(id, std::move(values), std::move(label));
        }
        auto read_edges = [&](const char* key, bool s_rel) {
            for (const auto& e : j.value(key, Json::array())) {
                if (!e.is_array() || e.size() != 2) throw IoError(std::string("malformed edge in ") + key);
                if (s_rel)
                    g.add_s_edge(e[0].get<std::string>(), e[1].get<std::string>());
                else
                    g.add_e_edge(e[0].get<std::string>(), e[1].get<std::string>());
            }
        };
        read_edges("s_edges", true);
        read_edges("e_edges", false);
    } catch (const IoError&) {
        throw;
    } catch (const std::exception& e) {
        throw IoError(std::string("malformed graph document: ") + e.what());
    }
    return g;
}

// ---------------------------------------------------------------------------
// Typed graphs (nugget files)
// ---------------------------------------------------------------------------

inline Json typed_graph_to_json(const TypedGraph& tg) {
    Json typing = Json::object();
    for (const auto& [n, k] : tg.typing) typing[n] = kind_name(k);
    return Json{{"graph", graph_to_json(*tg.graph)}, {"typing", typing}};
}

inline TypedGraph typed_graph_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("graph") || !j.contains("typing"))
        throw IoError("typed graph document needs 'graph' and 'typing' fields");
    TypedGraph tg;
    tg.graph = make_graph(graph_from_json(j.at("graph")));
    for (const auto& [node, kind] : j.at("typing").items()) {
        auto k = kind_from_name(kind.get<std::string>());
        if (!k) throw IoError("unknown meta-model kind '" + kind.get<std::string>() + "' for node " + node);
        tg.typing[node] = *k;
    }
    return tg;
}

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

inline Json model_to_json(const Model& model) {
    Json nuggets = Json::array();
    for (const auto& [id, entry] : model.nuggets) {
        Json typing = Json::object();
        for (const auto& [x, m] : entry.to_premodel) typing[x] = m;
        nuggets.push_back(Json{{"id", id}, {"graph", graph_to_json(*entry.graph)},
                               {"typing_to_premodel", typing}});
    }
    return Json{{"version", kModelFormatVersion},
                {"premodel", typed_graph_to_json(model.premodel)},
                {"nuggets", nuggets}};
}

inline std::string save_model(const Model& model) { return model_to_json(model).dump(2) + "\n"; }

/// Parses and fully re-validates a model document; throws IoError carrying the
/// validation report on any failure.
inline Model load_model(const Json& j) {
    if (!j.is_object()) throw IoError("model document must be an object");
    if (!j.contains("version") || !j.at("version").is_number_integer())
        throw IoError("model document has no version field");
    int version = j.at("version").get<int>();
    if (version != kModelFormatVersion)
        throw IoError("unsupported model format version " + std::to_string(version) + ", expected " +
                      std::to_string(kModelFormatVersion));
    Model model;
    model.premodel = typed_graph_from_json(j.at("premodel"));
    for (const auto& nj : j.value("nuggets", Json::array())) {
        NuggetId id = nj.at("id").get<int>();
        if (model.nuggets.count(id)) throw IoError("duplicate nugget id " + std::to_string(id));
        NuggetEntry entry;
        entry.graph = make_graph(graph_from_json(nj.at("graph")));
        for (const auto& [x, m] : nj.at("typing_to_premodel").items())
            entry.to_premodel[x] = m.get<std::string>();
        model.nuggets[id] = std::move(entry);
    }
    Report report = check_model(model);
    if (!report.ok()) throw IoError("model validation failed:\n" + report.to_string(), report);
    return model;
}

inline Model load_model(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const std::exception& e) {
        throw IoError(std::string("malformed JSON: ") + e.what());
    }
    return load_model(j);
}

// ---------------------------------------------------------------------------
// Sidecar files: seeds, deprecation, wild types
// ---------------------------------------------------------------------------

/// Seeds file: {"pairs": [["incoming-node", "existing-node"], ...]}
inline GlueingChoice seeds_from_json(const Json& j) {
    GlueingChoice glue;
    if (!j.is_object() || !j.contains("pairs")) throw IoError("seeds document needs a 'pairs' array");
    for (const auto& p : j.at("pairs")) {
        if (!p.is_array() || p.size() != 2) throw IoError("seed pairs must be two-element arrays");
        glue.seeds.push_back({p[0].get<std::string>(), p[1].get<std::string>()});
    }
    return glue;
}

inline Json seeds_to_json(const GlueingChoice& glue) {
    Json pairs = Json::array();
    for (const auto& [a, b] : glue.seeds) pairs.push_back(Json::array({a, b}));
    return Json{{"pairs", pairs}};
}

/// Deprecation file: {"nodes": [...], "s_edges": [[a,b],...], "e_edges": [...],
/// "values": {"node": [value, ...]}}; all fields optional.
inline DeprecationSpec deprecation_from_json(const Json& j) {
    if (!j.is_object()) throw IoError("deprecation document must be an object");
    DeprecationSpec spec;
    for (const auto& n : j.value("nodes", Json::array())) spec.nodes.push_back(n.get<std::string>());
    auto read_edges = [&](const char* key, EdgeSet& out) {
        for (const auto& e : j.value(key, Json::array())) {
            if (!e.is_array() || e.size() != 2) throw IoError(std::string("malformed edge in ") + key);
            out.insert({e[0].get<std::string>(), e[1].get<std::string>()});
        }
    };
    read_edges("s_edges", spec.s_edges);
    read_edges("e_edges", spec.e_edges);
    if (j.contains("values"))
        for (const auto& [node, values] : j.at("values").items())
            for (const auto& v : values) spec.values[node].insert(value_from_json(v));
    return spec;
}

/// Wild-type file: {"agent-id": {"residue-id": "S", ...}, ...}
inline std::map<std::pair<NodeId, NodeId>, char> wildtype_from_json(const Json& j) {
    if (!j.is_object()) throw IoError("wild-type document must be an object");
    std::map<std::pair<NodeId, NodeId>, char> out;
    for (const auto& [agent, residues] : j.items()) {
        if (!residues.is_object()) throw IoError("wild-type entries must map residues to codes");
        for (const auto& [residue, code] : residues.items()) {
            std::string s = code.get<std::string>();
            if (s.size() != 1 || !is_amino_acid_code(s[0]))
                throw IoError("wild-type code for " + agent + "/" + residue + " must be one amino-acid letter");
            out[{agent, residue}] = s[0];
        }
    }
    return out;
}

} // namespace nf

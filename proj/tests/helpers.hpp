#pragma once
// Small graph builders shared by the unit tests.
#include <algorithm>
#include <map>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "latentcycle/graph.hpp"
#include "latentcycle/io.hpp"

namespace testing {

inline std::string data_path(const std::string& name) { return std::string(LATENTCYCLE_DATA_DIR) + "/" + name; }

inline lc::graph::DirectedGraph load_graph(const std::string& name) {
    return lc::io::graph_from_json(lc::io::read_json_file(data_path("graphs/" + name + ".json")));
}

// "X1..4" -> X1 X2 X3 X4
inline std::vector<std::string> expand(const std::string& tok) {
    static const std::regex range(R"(([A-Za-z]+)(\d+)\.\.(\d+))");
    std::smatch m;
    if (std::regex_match(tok, m, range)) {
        std::vector<std::string> out;
        for (int i = std::stoi(m[2]); i <= std::stoi(m[3]); ++i) out.push_back(m[1].str() + std::to_string(i));
        return out;
    }
    return {tok};
}

inline std::vector<std::string> names(const std::string& list) {
    std::vector<std::string> out;
    std::stringstream s(list);
    for (std::string t; std::getline(s, t, ',');) {
        t.erase(std::remove(t.begin(), t.end(), ' '), t.end());
        for (auto& n : expand(t)) out.push_back(n);
    }
    return out;
}

// "L1>X1,X2; L1<>X3" builds edges (<> is both directions). Labels starting with L are latent.
// Vertex ids follow first appearance.
inline lc::graph::DirectedGraph make_graph(const std::string& spec) {
    std::vector<lc::graph::Vertex> vs;
    std::map<std::string, int> id;
    auto vertex = [&](const std::string& l) {
        auto it = id.find(l);
        if (it != id.end()) return it->second;
        const int i = static_cast<int>(vs.size());
        vs.push_back({i, l, l[0] == 'L' ? lc::graph::VertexKind::latent : lc::graph::VertexKind::observed});
        id[l] = i;
        return i;
    };
    std::vector<lc::graph::Edge> es;
    std::stringstream s(spec);
    for (std::string part; std::getline(s, part, ';');) {
        const bool both = part.find("<>") != std::string::npos;
        const auto cut = part.find(both ? "<>" : ">");
        if (cut == std::string::npos) {
            for (auto& n : names(part))
                if (!n.empty()) vertex(n);
            continue;
        }
        auto from = names(part.substr(0, cut)), to = names(part.substr(cut + (both ? 2 : 1)));
        for (auto& a : from)
            for (auto& b : to) {
                const int u = vertex(a), v = vertex(b);
                es.emplace_back(u, v);
                if (both) es.emplace_back(v, u);
            }
    }
    return lc::graph::DirectedGraph(vs, es);
}

inline lc::graph::VertexSet ids(const lc::graph::DirectedGraph& g, const std::string& list) {
    return g.resolve(names(list));
}

}  // namespace testing

#include "latentcycle/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "latentcycle/error.hpp"

namespace lc::io {

graph::DirectedGraph graph_from_json(const json& j) {
    require(j.is_object() && j.contains("vertices") && j.contains("edges"),
            "graph JSON needs \"vertices\" and \"edges\"");
    std::vector<graph::Vertex> vs;
    for (const auto& v : j.at("vertices")) {
        graph::Vertex x;
        x.id = v.at("id").get<int>();
        x.label = v.at("label").get<std::string>();
        std::string kind = v.value("kind", "observed");
        if (kind == "observed")
            x.kind = graph::VertexKind::observed;
        else if (kind == "latent")
            x.kind = graph::VertexKind::latent;
        else
            fail(ErrorKind::validation, "vertex '" + x.label + "' has unknown kind '" + kind + "'");
        vs.push_back(x);
    }
    std::vector<graph::Edge> es;
    for (const auto& e : j.at("edges")) {
        require(e.is_array() && e.size() == 2, "each edge must be a [source, target] pair");
        es.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    return graph::DirectedGraph(std::move(vs), std::move(es));
}

json graph_to_json(const graph::DirectedGraph& g) {
    json vs = json::array();
    for (const auto& v : g.vertices())
        vs.push_back({{"id", v.id}, {"label", v.label}, {"kind", v.kind == graph::VertexKind::latent ? "latent" : "observed"}});
    json es = json::array();
    for (auto [a, b] : g.edges()) es.push_back({a, b});
    return {{"vertices", vs}, {"edges", es}};
}

sem::NoiseSpec noise_from_json(const json& j) {
    std::string dist = j.value("dist", "gaussian");
    sem::NoiseSpec n;
    if (dist == "gaussian")
        n = sem::NoiseSpec::gaussian(j.value("mean", 0.0), j.value("var", 1.0));
    else if (dist == "uniform")
        n = sem::NoiseSpec::uniform(j.value("lo", -1.0), j.value("hi", 1.0));
    else if (dist == "shifted_exponential")
        n = sem::NoiseSpec::shifted_exponential(j.value("rate", 1.0));
    else
        fail(ErrorKind::validation, "unknown noise distribution '" + dist + "'");
    n.validate();
    return n;
}

json noise_to_json(const sem::NoiseSpec& n) {
    switch (n.kind) {
        case sem::NoiseKind::gaussian: return {{"dist", "gaussian"}, {"mean", n.p1}, {"var", n.p2}};
        case sem::NoiseKind::uniform: return {{"dist", "uniform"}, {"lo", n.p1}, {"hi", n.p2}};
        case sem::NoiseKind::shifted_exponential: return {{"dist", "shifted_exponential"}, {"rate", n.p1}};
    }
    return {};
}

sem::LinearSem sem_from_json(const json& j, const sem::NoiseSpec& fallback_noise) {
    auto g = graph_from_json(j);
    const int p = g.size();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
    if (j.contains("coefficients")) {
        const auto& c = j.at("coefficients");
        require(c.is_array() && static_cast<int>(c.size()) == p, "coefficients must be a p x p matrix");
        for (int r = 0; r < p; ++r) {
            require(static_cast<int>(c[r].size()) == p, "coefficients must be a p x p matrix");
            for (int s = 0; s < p; ++s) A(r, s) = c[r][s].get<double>();
        }
    } else {
        for (auto [a, b] : g.edges()) A(a, b) = 1.0;
    }
    std::vector<sem::NoiseSpec> noise;
    if (!j.contains("noise")) {
        noise.assign(p, fallback_noise);
    } else if (j.at("noise").is_object()) {
        noise.assign(p, noise_from_json(j.at("noise")));
    } else {
        require(static_cast<int>(j.at("noise").size()) == p, "one noise entry per vertex is required");
        for (const auto& n : j.at("noise")) noise.push_back(noise_from_json(n));
    }
    return sem::LinearSem(g, A, noise);
}

json sem_to_json(const sem::LinearSem& s) {
    json j = graph_to_json(s.graph());
    json rows = json::array();
    for (int r = 0; r < s.size(); ++r) {
        json row = json::array();
        for (int c = 0; c < s.size(); ++c) row.push_back(s.coefficients()(r, c));
        rows.push_back(row);
    }
    j["coefficients"] = rows;
    json ns = json::array();
    for (const auto& n : s.noise()) ns.push_back(noise_to_json(n));
    j["noise"] = ns;
    return j;
}

std::map<std::string, graph::VertexSet> named_sets(const json& j, const graph::DirectedGraph& g) {
    std::map<std::string, graph::VertexSet> out;
    if (!j.contains("sets")) return out;
    for (const auto& [name, labels] : j.at("sets").items())
        out[name] = g.resolve(labels.get<std::vector<std::string>>());
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

sem::Dataset read_csv(std::istream& in) {
    sem::Dataset d;
    std::string line;
    int lineno = 0;
    // '#' lines carry run metadata and are skipped
    auto next = [&] {
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty() || line == "\r" || line[0] == '#') continue;
            return true;
        }
        return false;
    };
    require(next(), "CSV input is empty (a header row is required)");
    d.labels = split_csv_line(line);
    const std::size_t p = d.labels.size();
    std::vector<std::vector<double>> rows;
    while (next()) {
        auto cells = split_csv_line(line);
        require(cells.size() == p, "CSV line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                                       " fields, expected " + std::to_string(p));
        std::vector<double> row(p);
        for (std::size_t c = 0; c < p; ++c) {
            std::size_t used = 0;
            try {
                row[c] = std::stod(cells[c], &used);
            } catch (const std::exception&) {
                used = 0;
            }
            require(used > 0 && used == cells[c].size(),
                    "CSV line " + std::to_string(lineno) + " column " + d.labels[c] + ": not a number");
        }
        rows.push_back(std::move(row));
    }
    d.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < p; ++c) d.values(r, c) = rows[r][c];
    return d;
}

sem::Dataset read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot open '" + path + "'");
    return read_csv(in);
}

void write_csv(std::ostream& out, const sem::Dataset& d) {
    for (int c = 0; c < d.cols(); ++c) out << (c ? "," : "") << d.labels[c];
    out << '\n';
    out << std::setprecision(17);
    for (int r = 0; r < d.rows(); ++r) {
        for (int c = 0; c < d.cols(); ++c) out << (c ? "," : "") << d.values(r, c);
        out << '\n';
    }
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json_file(const std::string& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        fail(ErrorKind::validation, "'" + path + "' is not valid JSON: " + e.what());
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot write '" + path + "'");
    out << text;
}

}  // namespace lc::io

// latentcycle: batch front end over the C API.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>
#include <string>

#include "latentcycle/latentcycle.h"

using nlohmann::json;

namespace {

// exit codes: 0 ok, 2 bad input, 3 resource guard, 1 anything else
int exit_code(lc_status s) {
    switch (s) {
        case LC_OK: return 0;
        case LC_ERR_VALIDATION:
        case LC_ERR_IO: return 2;
        case LC_ERR_RESOURCE: return 3;
        default: return 1;
    }
}

struct Failure {
    int code;
    std::string message;
};

void check(lc_status s) {
    if (s != LC_OK) throw Failure{exit_code(s), lc_last_error()};
}

[[noreturn]] void usage_error(const std::string& msg) { throw Failure{2, msg}; }

// owns a string returned by the library
struct Owned {
    char* p = nullptr;
    ~Owned() { lc_free_string(p); }
    std::string str() const { return p ? p : ""; }
};

template <class T, void (*Free)(T*)>
struct Handle {
    T* p = nullptr;
    ~Handle() { Free(p); }
};
using Graph = Handle<lc_graph, lc_graph_free>;
using Sem = Handle<lc_sem, lc_sem_free>;
using Data = Handle<lc_dataset, lc_dataset_free>;

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) usage_error("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        usage_error("'" + path + "' is not valid JSON: " + e.what());
    }
}

// Everything an output needs to be traced back to its run.
struct Provenance {
    std::string command;
    std::string config;  // resolved options, CLI11 config syntax
    unsigned long long seed = 0;
    std::string hash() const {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(lc_hash(config.c_str())));
        return buf;
    }
    std::string csv_header() const {
        std::ostringstream s;
        s << "# latentcycle " << lc_version() << " " << command << "\n# seed: " << seed << "\n# config_hash: " << hash()
          << "\n";
        std::istringstream lines(config);
        for (std::string line; std::getline(lines, line);)
            if (!line.empty()) s << "# config: " << line << "\n";
        return s.str();
    }
    json as_json() const {
        return {{"tool", "latentcycle"}, {"version", lc_version()}, {"command", command},
                {"seed", seed},          {"config_hash", hash()},   {"config", config}};
    }
};

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Failure{2, "cannot write '" + path + "'"};
    out << text;
    if (!out) throw Failure{2, "failed writing '" + path + "'"};
}

void emit_json(const std::string& path, json body, const Provenance& prov) {
    body["run"] = prov.as_json();
    emit(path, body.dump(2) + "\n");
}

std::string noise_json(const std::string& spec) {
    if (spec.empty()) return "";
    if (spec.front() == '{') return spec;
    return json{{"dist", spec}}.dump();
}

// "2..9" or "2,3,5"
std::vector<double> number_list(const std::string& text) {
    std::vector<double> out;
    static const std::regex range(R"(^\s*(-?[0-9.]+)\s*\.\.\s*(-?[0-9.]+)\s*$)");
    std::smatch m;
    if (std::regex_match(text, m, range)) {
        const double lo = std::stod(m[1]), hi = std::stod(m[2]);
        if (hi < lo) usage_error("empty range '" + text + "'");
        for (double v = lo; v <= hi + 1e-9; v += 1) out.push_back(v);
        return out;
    }
    std::stringstream s(text);
    for (std::string item; std::getline(s, item, ',');) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            usage_error("'" + text + "' is not a number list");
        }
    }
    if (out.empty()) usage_error("empty number list");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Latent-variable causal discovery with cycles: simulation, VCSGS, cluster discovery, "
                 "faithfulness studies and tensor constraints."};
    app.set_version_flag("--version", std::string(lc_version()));
    app.set_config("--config", "", "TOML/INI file with option values; command-line flags take precedence");
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (overrides LATENTCYCLE_THREADS)")->check(CLI::PositiveNumber);

    // ---- simulate ----
    auto* sim = app.add_subcommand("simulate", "sample a linear SEM to CSV");
    std::string sim_model, sim_regime, sim_noise, sim_out, sim_sem_out;
    int sim_n = 1000;
    unsigned long long sim_seed = 1;
    bool sim_all = false;
    sim->add_option("--model", sim_model, "graph or SEM JSON")->required()->check(CLI::ExistingFile);
    sim->add_option("--n", sim_n, "rows")->capture_default_str()->check(CLI::Range(1, 100000000));
    sim->add_option("--seed", sim_seed, "random seed")->capture_default_str();
    sim->add_option("--regime", sim_regime,
                    "draw coefficients: unit|symmetric_unit|banded|moderate (default: the file's, else unit)");
    sim->add_option("--noise", sim_noise, "noise for every vertex: gaussian|uniform|shifted_exponential or a JSON object");
    sim->add_flag("--all-columns", sim_all, "also write latent columns");
    sim->add_option("--out", sim_out, "CSV path (default stdout)");
    sim->add_option("--sem-out", sim_sem_out, "write the SEM that was sampled");

    // ---- vcsgs ----
    auto* vc = app.add_subcommand("vcsgs", "very conservative SGS plus edge estimation");
    std::string vc_data, vc_graph, vc_mode = "gaussian", vc_truth, vc_out;
    double vc_alpha = 0.01, vc_tv = 2.0;
    int vc_perm = 200, vc_maxv = 12;
    unsigned long long vc_seed = 1;
    auto* vc_data_opt = vc->add_option("--data", vc_data, "CSV dataset")->check(CLI::ExistingFile);
    vc->add_option("--graph", vc_graph, "run on d-separation answers of this DAG instead of data")
        ->check(CLI::ExistingFile)
        ->excludes(vc_data_opt);
    vc->add_option("--alpha", vc_alpha, "CI test level")->capture_default_str()->check(CLI::Range(1e-12, 0.999999));
    vc->add_option("--mode", vc_mode, "CI backend")->capture_default_str()->check(CLI::IsMember({"gaussian", "nonparam"}));
    vc->add_option("--tv-l", vc_tv, "total-variation smoothness bound L")->capture_default_str()->check(CLI::PositiveNumber);
    vc->add_option("--permutations", vc_perm, "permutations for nonparam mode")->capture_default_str()->check(CLI::PositiveNumber);
    vc->add_option("--seed", vc_seed, "permutation seed")->capture_default_str();
    vc->add_option("--max-vertices", vc_maxv, "vertex cap for the exhaustive subset search")->capture_default_str();
    vc->add_option("--truth", vc_truth, "SEM JSON: report error kinds and density distance")->check(CLI::ExistingFile);
    vc->add_option("--out", vc_out, "JSON path (default stdout)");

    // ---- discover ----
    auto* dc = app.add_subcommand("discover", "clusters, cycles under latents, latent order, block cycles");
    std::string dc_data, dc_graph, dc_mode = "cgin", dc_pipeline = "cgin", dc_truth, dc_metrics, dc_out,
                                    dc_rule = "halve_down";
    double dc_alpha = 0.05, dc_rank_alpha = 0.05;
    unsigned long long dc_seed = 1;
    int dc_maxvars = 16, dc_maxcs = 5, dc_maxblocks = 12;
    dc->add_option("--data", dc_data, "CSV dataset (modes cgin and blocks)")->check(CLI::ExistingFile);
    dc->add_option("--graph", dc_graph, "graph JSON (mode oracle)")->check(CLI::ExistingFile);
    dc->add_option("--mode", dc_mode, "cgin|blocks on data, oracle on --graph")
        ->capture_default_str()
        ->check(CLI::IsMember({"cgin", "blocks", "oracle"}));
    dc->add_option("--pipeline", dc_pipeline, "algorithm run by oracle mode")
        ->capture_default_str()
        ->check(CLI::IsMember({"cgin", "blocks"}));
    dc->add_option("--alpha", dc_alpha, "GIN and projection test level")->capture_default_str()->check(CLI::Range(1e-12, 0.999999));
    dc->add_option("--rank-alpha", dc_rank_alpha, "rank test level")->capture_default_str()->check(CLI::Range(1e-12, 0.999999));
    dc->add_option("--seed", dc_seed, "seed for kernel-test permutations / oracle parameterization")->capture_default_str();
    dc->add_option("--max-vars", dc_maxvars, "column cap for the cluster search")->capture_default_str();
    dc->add_option("--max-cluster-size", dc_maxcs, "largest subset tested (k+1)")->capture_default_str();
    dc->add_option("--max-blocks", dc_maxblocks, "block cap for the bipartition search")->capture_default_str();
    dc->add_option("--latent-rule", dc_rule, "latent count of cyclic clusters from the largest split rank")
        ->capture_default_str()
        ->check(CLI::IsMember({"halve_down", "halve_up"}));
    dc->add_option("--truth", dc_truth, "graph JSON to score against")->check(CLI::ExistingFile);
    dc->add_option("--metrics", dc_metrics, "metrics JSON path (needs --truth; with oracle mode defaults to --graph)");
    dc->add_option("--out", dc_out, "cluster JSON path (default stdout)");

    // ---- faithsim ----
    auto* fs = app.add_subcommand("faithsim", "faithfulness-violation Monte Carlo studies");
    std::string fs_study = "sweep", fs_nodes = "3,5,10", fs_nb = "2..9", fs_thr = "0.1,0.01,0.001", fs_out;
    int fs_graphs = 1000, fs_p = 8, fs_bins = 10;
    unsigned long long fs_seed = 7;
    double fs_k = 0.1, fs_var = 1.0;
    bool fs_full = false;
    fs->add_option("--study", fs_study, "sweep: violation proportions; maxk: satisfiable k; profile: edge strengths")
        ->capture_default_str()
        ->check(CLI::IsMember({"sweep", "maxk", "profile"}));
    fs->add_option("--nodes", fs_nodes, "vertex counts (sweep, maxk)")->capture_default_str();
    fs->add_option("--nb", fs_nb, "expected neighbourhood sizes, list or lo..hi")->capture_default_str();
    fs->add_option("--thresholds", fs_thr, "lambda / k thresholds (sweep)")->capture_default_str();
    fs->add_option("--graphs", fs_graphs, "graphs per cell")->capture_default_str()->check(CLI::PositiveNumber);
    fs->add_flag("--full", fs_full, "10000 graphs per cell");
    fs->add_option("--p", fs_p, "vertex count (profile)")->capture_default_str();
    fs->add_option("--k", fs_k, "k-triangle threshold (profile)")->capture_default_str();
    fs->add_option("--bins", fs_bins, "edge-strength bins (profile)")->capture_default_str();
    fs->add_option("--noise-var", fs_var, "noise variance")->capture_default_str()->check(CLI::PositiveNumber);
    fs->add_option("--seed", fs_seed, "base seed")->capture_default_str();
    fs->add_option("--out", fs_out, "CSV path (default stdout)");

    // ---- tensorcheck ----
    auto* tc = app.add_subcommand("tensorcheck", "cumulant hyperdeterminant against the k-trek criterion");
    std::string tc_graph, tc_order, tc_sets, tc_noise, tc_out;
    int tc_len = 6;
    tc->add_option("--graph", tc_graph, "graph or SEM JSON, optionally with named \"sets\"")->required()->check(CLI::ExistingFile);
    tc->add_option("--order", tc_order, "axis order of named sets, e.g. s1s2s3");
    tc->add_option("--sets", tc_sets, "JSON list of label lists, e.g. [[\"X1\",\"X2\"],[\"X3\",\"X4\"]]");
    tc->add_option("--noise", tc_noise, "noise for vertices the file leaves unset")->capture_default_str();
    tc->add_option("--len-cap", tc_len, "longest path considered in k-trek systems")->capture_default_str();
    tc->add_option("--out", tc_out, "JSON path (default stdout)");

    // ---- evaluate ----
    auto* ev = app.add_subcommand("evaluate", "score a cluster JSON against a true graph");
    std::string ev_found, ev_truth, ev_out;
    ev->add_option("--found", ev_found, "cluster JSON from discover")->required()->check(CLI::ExistingFile);
    ev->add_option("--truth", ev_truth, "graph JSON")->required()->check(CLI::ExistingFile);
    ev->add_option("--out", ev_out, "metrics JSON path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << "\n" << app.help();
        return 2;
    }

    if (threads > 0) setenv("LATENTCYCLE_THREADS", std::to_string(threads).c_str(), 1);

    try {
        Provenance prov;
        CLI::App* sub = app.get_subcommands().front();
        prov.command = sub->get_name();
        // output paths do not change results, so they stay out of the fingerprint
        std::istringstream all(sub->config_to_str(true, false));
        for (std::string line; std::getline(all, line);)
            if (line.rfind("out=", 0) != 0 && line.rfind("metrics=", 0) != 0 && line.rfind("sem-out=", 0) != 0)
                prov.config += line + "\n";

        if (sub == sim) {
            prov.seed = sim_seed;
            const json model = read_json(sim_model);
            Sem sem;
            const std::string noise = noise_json(sim_noise);
            if (!sim_regime.empty()) {
                Graph g;
                check(lc_graph_from_json(model.dump().c_str(), &g.p));
                check(lc_sem_random(g.p, sim_regime.c_str(), noise.empty() ? nullptr : noise.c_str(), sim_seed, &sem.p));
            } else {
                check(lc_sem_from_json(model.dump().c_str(), noise.empty() ? nullptr : noise.c_str(), &sem.p));
            }
            Data d;
            check(lc_sem_sample(sem.p, sim_n, sim_seed, sim_all ? 0 : 1, &d.p));
            Owned csv;
            check(lc_dataset_to_csv(d.p, &csv.p));
            emit(sim_out, prov.csv_header() + csv.str());
            if (!sim_sem_out.empty()) {
                Owned js;
                check(lc_sem_to_json(sem.p, &js.p));
                emit_json(sim_sem_out, json::parse(js.str()), prov);
            }
            return 0;
        }

        if (sub == vc) {
            prov.seed = vc_seed;
            json opt{{"alpha", vc_alpha}, {"mode", vc_mode}, {"tv_l", vc_tv}, {"permutations", vc_perm},
                     {"seed", vc_seed}, {"max_vertices", vc_maxv}};
            if (!vc_truth.empty()) opt["truth"] = read_json(vc_truth);
            Owned out;
            if (!vc_graph.empty()) {
                Graph g;
                check(lc_graph_load(vc_graph.c_str(), &g.p));
                check(lc_vcsgs_oracle(g.p, opt.dump().c_str(), &out.p));
            } else {
                if (vc_data.empty()) usage_error("vcsgs needs --data or --graph");
                Data d;
                check(lc_dataset_load(vc_data.c_str(), &d.p));
                check(lc_vcsgs(d.p, opt.dump().c_str(), &out.p));
            }
            emit_json(vc_out, json::parse(out.str()), prov);
            return 0;
        }

        if (sub == dc) {
            prov.seed = dc_seed;
            json opt{{"pipeline", dc_mode == "oracle" ? dc_pipeline : dc_mode},
                     {"alpha", dc_alpha},
                     {"rank_alpha", dc_rank_alpha},
                     {"seed", dc_seed},
                     {"max_vars", dc_maxvars},
                     {"max_cluster_size", dc_maxcs},
                     {"max_blocks", dc_maxblocks},
                     {"latent_rule", dc_rule}};
            Owned result;
            std::string truth_path = dc_truth;
            if (dc_mode == "oracle") {
                if (dc_graph.empty()) usage_error("--mode oracle needs --graph");
                if (!dc_data.empty()) usage_error("--mode oracle reads --graph, not --data");
                Graph g;
                check(lc_graph_load(dc_graph.c_str(), &g.p));
                check(lc_discover_oracle(g.p, opt.dump().c_str(), &result.p));
                if (truth_path.empty()) truth_path = dc_graph;
            } else {
                if (dc_data.empty()) usage_error("--mode " + dc_mode + " needs --data");
                Data d;
                check(lc_dataset_load(dc_data.c_str(), &d.p));
                check(lc_discover(d.p, opt.dump().c_str(), &result.p));
            }
            emit_json(dc_out, json::parse(result.str()), prov);
            if (!dc_metrics.empty()) {
                if (truth_path.empty()) usage_error("--metrics needs --truth");
                Graph t;
                check(lc_graph_load(truth_path.c_str(), &t.p));
                Owned m;
                check(lc_evaluate_discovery(result.p, t.p, &m.p));
                emit_json(dc_metrics, json::parse(m.str()), prov);
            }
            return 0;
        }

        if (sub == fs) {
            prov.seed = fs_seed;
            json cfg{{"study", fs_study}, {"graphs", fs_full ? 10000 : fs_graphs}, {"seed", fs_seed},
                     {"noise_var", fs_var}, {"nb", number_list(fs_nb)}};
            if (fs_study == "profile") {
                cfg["p"] = fs_p;
                cfg["k"] = fs_k;
                cfg["bins"] = fs_bins;
            } else {
                std::vector<int> nodes;
                for (double v : number_list(fs_nodes)) nodes.push_back(static_cast<int>(v));
                cfg["nodes"] = nodes;
                cfg["thresholds"] = number_list(fs_thr);
            }
            Owned csv;
            check(lc_faithsim(cfg.dump().c_str(), &csv.p));
            emit(fs_out, prov.csv_header() + csv.str());
            return 0;
        }

        if (sub == tc) {
            const json model = read_json(tc_graph);
            json sets = json::array();
            if (!tc_sets.empty()) {
                if (!tc_order.empty()) usage_error("give --order or --sets, not both");
                try {
                    sets = json::parse(tc_sets);
                } catch (const json::exception& e) {
                    usage_error(std::string("--sets is not valid JSON: ") + e.what());
                }
            } else {
                if (tc_order.empty()) usage_error("tensorcheck needs --order or --sets");
                if (!model.contains("sets")) usage_error("'" + tc_graph + "' has no named \"sets\"");
                static const std::regex name(R"(s[0-9]+)");
                std::string rest = tc_order;
                for (std::smatch m; std::regex_search(rest, m, name); rest = m.suffix()) {
                    if (m.position(0) != 0) usage_error("cannot parse --order '" + tc_order + "'");
                    if (!model["sets"].contains(m.str(0))) usage_error("no set named '" + m.str(0) + "'");
                    sets.push_back(model["sets"][m.str(0)]);
                }
                if (!rest.empty() || sets.empty()) usage_error("cannot parse --order '" + tc_order + "'");
            }
            Sem sem;
            const std::string noise = noise_json(tc_noise);
            check(lc_sem_from_json(model.dump().c_str(), noise.empty() ? nullptr : noise.c_str(), &sem.p));
            Owned rep;
            check(lc_tensor_check(sem.p, sets.dump().c_str(), tc_len, &rep.p));
            json body = json::parse(rep.str());
            body["sets"] = sets;
            emit_json(tc_out, body, prov);
            return 0;
        }

        if (sub == ev) {
            Graph t;
            check(lc_graph_load(ev_truth.c_str(), &t.p));
            std::ifstream in(ev_found);
            std::stringstream text;
            text << in.rdbuf();
            Owned m;
            check(lc_evaluate_discovery(text.str().c_str(), t.p, &m.p));
            emit_json(ev_out, json::parse(m.str()), prov);
            return 0;
        }
    } catch (const Failure& f) {
        std::cerr << "latentcycle: " << f.message << "\n";
        return f.code;
    } catch (const std::exception& e) {
        std::cerr << "latentcycle: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

#include "latentcycle/latentcycle.h"

#include <cstdlib>
#include <cstring>
#include <functional>
#include <new>
#include <optional>
#include <sstream>
#include <string>

#include "latentcycle/discovery.hpp"
#include "latentcycle/error.hpp"
#include "latentcycle/faithsim.hpp"
#include "latentcycle/io.hpp"
#include "latentcycle/tensor.hpp"
#include "latentcycle/util.hpp"
#include "latentcycle/vcsgs.hpp"

struct lc_graph {
    lc::graph::DirectedGraph g;
};
struct lc_sem {
    lc::sem::LinearSem s;
};
struct lc_dataset {
    lc::sem::Dataset d;
};

namespace {

using nlohmann::json;

thread_local std::string last_error;

lc_status status_of(lc::ErrorKind k) {
    switch (k) {
        case lc::ErrorKind::validation: return LC_ERR_VALIDATION;
        case lc::ErrorKind::resource: return LC_ERR_RESOURCE;
        case lc::ErrorKind::numeric: return LC_ERR_NUMERIC;
        case lc::ErrorKind::io: return LC_ERR_IO;
    }
    return LC_ERR_INTERNAL;
}

lc_status guarded(const std::function<void()>& fn) {
    try {
        fn();
        last_error.clear();
        return LC_OK;
    } catch (const lc::Error& e) {
        last_error = e.what();
        return status_of(e.kind());
    } catch (const json::exception& e) {
        last_error = std::string("malformed JSON: ") + e.what();
        return LC_ERR_VALIDATION;
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return LC_ERR_RESOURCE;
    } catch (const std::exception& e) {
        last_error = e.what();
        return LC_ERR_INTERNAL;
    }
}

void need(const void* p, const char* what) {
    if (!p) lc::fail(lc::ErrorKind::validation, std::string(what) + " must not be NULL");
}

char* dup(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

std::vector<int> ids(const int* v, size_t n) {
    if (n) need(v, "index array");
    return std::vector<int>(v, v + n);
}

json parse_or_empty(const char* text) {
    if (!text || !*text) return json::object();
    json j = json::parse(text);
    lc::require(j.is_object(), "options must be a JSON object");
    return j;
}

void check_ids(const std::vector<int>& v, int size, const char* what) {
    for (int i : v)
        lc::require(i >= 0 && i < size, std::string(what) + " index " + std::to_string(i) + " out of range");
}

lc::sem::NoiseSpec noise_or(const char* noise_json, const lc::sem::NoiseSpec& fallback) {
    if (!noise_json || !*noise_json) return fallback;
    return lc::io::noise_from_json(json::parse(noise_json));
}

lc::discovery::ClusterOptions cluster_options(const json& o) {
    lc::discovery::ClusterOptions c;
    c.max_cluster_size = o.value("max_cluster_size", c.max_cluster_size);
    c.max_vars = o.value("max_vars", c.max_vars);
    const std::string rule = o.value("latent_rule", std::string("halve_down"));
    if (rule == "halve_down")
        c.rule = lc::discovery::LatentCountRule::halve_down;
    else if (rule == "halve_up")
        c.rule = lc::discovery::LatentCountRule::halve_up;
    else
        lc::fail(lc::ErrorKind::validation, "latent_rule must be halve_down or halve_up, got '" + rule + "'");
    return c;
}

std::string run_discovery(lc::discovery::Tester& t, const json& o) {
    lc::discovery::BlockCycleOptions b;
    b.max_blocks = o.value("max_blocks", b.max_blocks);
    const std::string pipeline = o.value("pipeline", std::string("cgin"));
    lc::discovery::DiscoveryResult r;
    if (pipeline == "cgin")
        r = lc::discovery::discover_cyclic_clusters(t, cluster_options(o));
    else if (pipeline == "blocks")
        r = lc::discovery::discover_block_cycles(t, cluster_options(o), b);
    else
        lc::fail(lc::ErrorKind::validation, "pipeline must be cgin or blocks, got '" + pipeline + "'");
    json j = lc::discovery::result_to_json(r);
    j["audit"] = r.audit;
    return j.dump(2);
}

std::string run_vcsgs(lc::vcsgs::CiTester& ci, const lc::sem::Dataset* data, const json& o,
                      const lc::graph::DirectedGraph* truth_graph) {
    lc::vcsgs::VcsgsOptions vo;
    vo.max_vertices = o.value("max_vertices", vo.max_vertices);
    vo.max_extensions = o.value("max_extensions", vo.max_extensions);
    auto h = lc::vcsgs::run_vcsgs(ci, vo);
    json out{{"pattern", lc::vcsgs::pattern_to_json(h)}, {"ci_queries", ci.queries()}};
    std::optional<lc::sem::LinearSem> truth;
    if (o.contains("truth")) {
        truth = lc::io::sem_from_json(o.at("truth"));
        truth_graph = &truth->graph();
    }
    if (data) {
        const double L = o.value("tv_l", 2.0);
        lc::require(L > 0, "tv_l must be positive");
        auto m = lc::vcsgs::edge_estimation(*data, h, L);
        out["model"] = lc::vcsgs::model_to_json(m);
        if (truth) out["distance_to_truth"] = lc::vcsgs::conditional_probability_distance(m, *truth);
    }
    if (truth_graph) {
        auto e = lc::vcsgs::classify_errors(h, *truth_graph);
        out["errors"] = {{"kind1", e.kind1}, {"kind2", e.kind2}, {"kind3", e.kind3}, {"missing_edges", e.missing_edges}};
    }
    return out.dump(2);
}

template <class T>
std::vector<T> list_or(const json& o, const char* key, std::vector<T> fallback) {
    if (!o.contains(key)) return fallback;
    return o.at(key).get<std::vector<T>>();
}

}  // namespace

extern "C" {

const char* lc_version(void) { return LATENTCYCLE_VERSION; }
const char* lc_last_error(void) { return last_error.c_str(); }
void lc_free_string(char* s) { std::free(s); }
uint64_t lc_hash(const char* text) { return lc::util::fnv1a64(text ? text : ""); }

// ---- graphs ----

lc_status lc_graph_from_json(const char* text, lc_graph** out) {
    return guarded([&] {
        need(text, "json");
        need(out, "out");
        *out = new lc_graph{lc::io::graph_from_json(json::parse(text))};
    });
}

lc_status lc_graph_load(const char* path, lc_graph** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new lc_graph{lc::io::graph_from_json(lc::io::read_json_file(path))};
    });
}

lc_status lc_graph_random_dag(int p, double nb, uint64_t seed, lc_graph** out) {
    return guarded([&] {
        need(out, "out");
        *out = new lc_graph{lc::graph::random_dag(p, nb, seed)};
    });
}

void lc_graph_free(lc_graph* g) { delete g; }

lc_status lc_graph_to_json(const lc_graph* g, char** out) {
    return guarded([&] {
        need(g, "graph");
        need(out, "out");
        *out = dup(lc::io::graph_to_json(g->g).dump(1));
    });
}

lc_status lc_graph_size(const lc_graph* g, int* out) {
    return guarded([&] {
        need(g, "graph");
        need(out, "out");
        *out = g->g.size();
    });
}

lc_status lc_graph_find(const lc_graph* g, const char* label, int* out) {
    return guarded([&] {
        need(g, "graph");
        need(label, "label");
        need(out, "out");
        *out = g->g.find(label);
    });
}

lc_status lc_graph_min_choke_size(const lc_graph* g, const int* a, size_t na, const int* b, size_t nb, int* out) {
    return guarded([&] {
        need(g, "graph");
        need(out, "out");
        auto A = ids(a, na), B = ids(b, nb);
        check_ids(A, g->g.size(), "vertex");
        check_ids(B, g->g.size(), "vertex");
        *out = lc::graph::min_choke_size(g->g, A, B);
    });
}

lc_status lc_graph_d_separated(const lc_graph* g, const int* a, size_t na, const int* b, size_t nb, const int* c,
                               size_t nc, int* out) {
    return guarded([&] {
        need(g, "graph");
        need(out, "out");
        auto A = ids(a, na), B = ids(b, nb), C = ids(c, nc);
        for (const auto* v : {&A, &B, &C}) check_ids(*v, g->g.size(), "vertex");
        *out = lc::graph::d_separated(g->g, A, B, C) ? 1 : 0;
    });
}

// ---- SEMs ----

lc_status lc_sem_from_json(const char* text, const char* noise_json, lc_sem** out) {
    return guarded([&] {
        need(text, "json");
        need(out, "out");
        auto fallback = noise_or(noise_json, lc::sem::NoiseSpec::gaussian(0, 1));
        *out = new lc_sem{lc::io::sem_from_json(json::parse(text), fallback)};
    });
}

lc_status lc_sem_load(const char* path, const char* noise_json, lc_sem** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        auto fallback = noise_or(noise_json, lc::sem::NoiseSpec::gaussian(0, 1));
        *out = new lc_sem{lc::io::sem_from_json(lc::io::read_json_file(path), fallback)};
    });
}

lc_status lc_sem_random(const lc_graph* g, const char* regime, const char* noise_json, uint64_t seed, lc_sem** out) {
    return guarded([&] {
        need(g, "graph");
        need(out, "out");
        auto r = lc::sem::parse_regime(regime ? regime : "moderate");
        auto noise = noise_or(noise_json, lc::sem::NoiseSpec::gaussian(0, 1));
        *out = new lc_sem{lc::sem::random_sem(g->g, r, noise, seed)};
    });
}

void lc_sem_free(lc_sem* s) { delete s; }

lc_status lc_sem_to_json(const lc_sem* s, char** out) {
    return guarded([&] {
        need(s, "sem");
        need(out, "out");
        *out = dup(lc::io::sem_to_json(s->s).dump(1));
    });
}

lc_status lc_sem_graph(const lc_sem* s, lc_graph** out) {
    return guarded([&] {
        need(s, "sem");
        need(out, "out");
        *out = new lc_graph{s->s.graph()};
    });
}

lc_status lc_sem_implied_covariance(const lc_sem* s, double* out, size_t capacity) {
    return guarded([&] {
        need(s, "sem");
        need(out, "out");
        const auto cov = lc::sem::implied_covariance(s->s);
        const size_t p = static_cast<size_t>(cov.rows());
        lc::require(capacity >= p * p, "output buffer holds " + std::to_string(capacity) + " values, need " +
                                           std::to_string(p * p));
        for (size_t r = 0; r < p; ++r)
            for (size_t c = 0; c < p; ++c) out[r * p + c] = cov(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    });
}

lc_status lc_sem_sample(const lc_sem* s, int n, uint64_t seed, int observed_only, lc_dataset** out) {
    return guarded([&] {
        need(s, "sem");
        need(out, "out");
        auto d = lc::sem::sample(s->s, n, seed);
        if (observed_only) d = lc::sem::observed_columns(s->s, d);
        *out = new lc_dataset{std::move(d)};
    });
}

// ---- datasets ----

lc_status lc_dataset_load(const char* path, lc_dataset** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new lc_dataset{lc::io::read_csv_file(path)};
    });
}

lc_status lc_dataset_from_csv(const char* text, lc_dataset** out) {
    return guarded([&] {
        need(text, "text");
        need(out, "out");
        std::istringstream in(text);
        *out = new lc_dataset{lc::io::read_csv(in)};
    });
}

void lc_dataset_free(lc_dataset* d) { delete d; }

lc_status lc_dataset_shape(const lc_dataset* d, int* rows, int* cols) {
    return guarded([&] {
        need(d, "dataset");
        if (rows) *rows = d->d.rows();
        if (cols) *cols = d->d.cols();
    });
}

lc_status lc_dataset_to_csv(const lc_dataset* d, char** out) {
    return guarded([&] {
        need(d, "dataset");
        need(out, "out");
        std::ostringstream s;
        lc::io::write_csv(s, d->d);
        *out = dup(s.str());
    });
}

lc_status lc_dataset_column(const lc_dataset* d, const char* label, int* out) {
    return guarded([&] {
        need(d, "dataset");
        need(label, "label");
        need(out, "out");
        *out = d->d.column(label);
    });
}

// ---- tests ----

lc_status lc_rank_test(const lc_dataset* d, const int* a, size_t na, const int* b, size_t nb, int r, double alpha,
                       double* p_value, int* decision) {
    return guarded([&] {
        need(d, "dataset");
        auto A = ids(a, na), B = ids(b, nb);
        check_ids(A, d->d.cols(), "column");
        check_ids(B, d->d.cols(), "column");
        lc::require(alpha > 0 && alpha < 1, "alpha must lie in (0, 1)");
        auto t = lc::stats::rank_test_sample(d->d, A, B, r, alpha);
        if (p_value) *p_value = t.p_value;
        if (decision) *decision = t.independent() ? 1 : 0;
    });
}

lc_status lc_gin_test(const lc_dataset* d, const int* z, size_t nz, const int* y, size_t ny, double alpha,
                      uint64_t seed, double* p_value, int* decision) {
    return guarded([&] {
        need(d, "dataset");
        auto Z = ids(z, nz), Y = ids(y, ny);
        check_ids(Z, d->d.cols(), "column");
        check_ids(Y, d->d.cols(), "column");
        lc::require(alpha > 0 && alpha < 1, "alpha must lie in (0, 1)");
        auto g = lc::stats::gin_test(d->d, Z, Y, alpha, seed);
        if (p_value) *p_value = g.test.p_value;
        if (decision) *decision = g.test.independent() ? 1 : 0;
    });
}

// ---- structure learning ----

lc_status lc_vcsgs(const lc_dataset* d, const char* options_json, char** result_json) {
    return guarded([&] {
        need(d, "dataset");
        need(result_json, "out");
        const json o = parse_or_empty(options_json);
        const double alpha = o.value("alpha", 0.01);
        lc::require(alpha > 0 && alpha < 1, "alpha must lie in (0, 1)");
        const std::string mode = o.value("mode", std::string("gaussian"));
        std::unique_ptr<lc::vcsgs::CiTester> ci;
        if (mode == "gaussian")
            ci = lc::vcsgs::fisher_tester(d->d, alpha);
        else if (mode == "nonparam")
            ci = lc::vcsgs::nonparam_tester(d->d, alpha, o.value("permutations", 200), o.value("seed", std::uint64_t{1}));
        else
            lc::fail(lc::ErrorKind::validation, "mode must be gaussian or nonparam, got '" + mode + "'");
        *result_json = dup(run_vcsgs(*ci, &d->d, o, nullptr));
    });
}

lc_status lc_vcsgs_oracle(const lc_graph* truth, const char* options_json, char** result_json) {
    return guarded([&] {
        need(truth, "graph");
        need(result_json, "out");
        const json o = parse_or_empty(options_json);
        auto ci = lc::vcsgs::oracle_tester(truth->g);
        *result_json = dup(run_vcsgs(*ci, nullptr, o, &truth->g));
    });
}

lc_status lc_discover(const lc_dataset* d, const char* options_json, char** result_json) {
    return guarded([&] {
        need(d, "dataset");
        need(result_json, "out");
        const json o = parse_or_empty(options_json);
        lc::discovery::DataTesterOptions t;
        t.alpha = o.value("alpha", t.alpha);
        t.rank_alpha = o.value("rank_alpha", t.rank_alpha);
        lc::require(t.alpha > 0 && t.alpha < 1 && t.rank_alpha > 0 && t.rank_alpha < 1,
                    "alpha and rank_alpha must lie in (0, 1)");
        t.seed = o.value("seed", t.seed);
        auto tester = lc::discovery::data_tester(d->d, t);
        *result_json = dup(run_discovery(*tester, o));
    });
}

lc_status lc_discover_oracle(const lc_graph* g, const char* options_json, char** result_json) {
    return guarded([&] {
        need(g, "graph");
        need(result_json, "out");
        const json o = parse_or_empty(options_json);
        auto tester = lc::discovery::oracle_tester(g->g, o.value("seed", std::uint64_t{1}));
        *result_json = dup(run_discovery(*tester, o));
    });
}

lc_status lc_true_structure(const lc_graph* g, char** result_json) {
    return guarded([&] {
        need(g, "graph");
        need(result_json, "out");
        *result_json = dup(lc::discovery::result_to_json(lc::discovery::true_structure(g->g)).dump(2));
    });
}

lc_status lc_evaluate_discovery(const char* found_json, const lc_graph* truth, char** metrics_json) {
    return guarded([&] {
        need(found_json, "found");
        need(truth, "graph");
        need(metrics_json, "out");
        auto found = lc::discovery::result_from_json(json::parse(found_json));
        *metrics_json = dup(lc::discovery::metrics_to_json(lc::discovery::evaluate(found, truth->g)).dump(2));
    });
}

// ---- faithfulness studies ----

lc_status lc_faithsim(const char* config_json, char** csv) {
    return guarded([&] {
        need(csv, "out");
        const json o = parse_or_empty(config_json);
        const std::string study = o.value("study", std::string("sweep"));
        if (study == "profile") {
            lc::faith::ProfileConfig c;
            c.p = o.value("p", c.p);
            c.nb_sizes = list_or(o, "nb", c.nb_sizes);
            c.k = o.value("k", c.k);
            c.n_graphs = o.value("graphs", c.n_graphs);
            c.bins = o.value("bins", c.bins);
            c.seed = o.value("seed", c.seed);
            c.noise_var = o.value("noise_var", c.noise_var);
            *csv = dup(lc::faith::profile_csv(lc::faith::edge_strength_violation_profile(c)));
            return;
        }
        lc::faith::SweepConfig c;
        c.nodes = list_or(o, "nodes", c.nodes);
        c.nb_sizes = list_or(o, "nb", c.nb_sizes);
        c.thresholds = list_or(o, "thresholds", c.thresholds);
        c.n_graphs = o.value("graphs", c.n_graphs);
        c.seed = o.value("seed", c.seed);
        c.noise_var = o.value("noise_var", c.noise_var);
        if (study == "sweep")
            *csv = dup(lc::faith::sweep_csv(lc::faith::violation_sweep(c)));
        else if (study == "maxk")
            *csv = dup(lc::faith::max_k_csv(lc::faith::max_k_study(c)));
        else
            lc::fail(lc::ErrorKind::validation, "study must be sweep, maxk or profile, got '" + study + "'");
    });
}

// ---- tensor constraint ----

lc_status lc_tensor_check(const lc_sem* s, const char* sets_json, int len_cap, char** report_json) {
    return guarded([&] {
        need(s, "sem");
        need(sets_json, "sets");
        need(report_json, "out");
        const auto& g = s->s.graph();
        const json js = json::parse(sets_json);
        lc::require(js.is_array() && js.size() >= 2, "sets must be a list of at least two label lists");
        std::vector<lc::graph::VertexSet> S;
        for (const auto& set : js) S.push_back(g.resolve(set.get<std::vector<std::string>>()));
        auto c = lc::tensor::tensor_constraint_check(s->s, S, len_cap);
        json report{{"order", S.size()},
                    {"graphical_constraint", c.graphical},
                    {"determinant", c.numeric_det},
                    {"tolerance", c.tolerance},
                    {"numeric_zero", c.numeric_zero},
                    {"consistent", c.consistent}};
        json pairs = json::array();
        for (std::size_t i = 0; i < S.size(); ++i)
            for (std::size_t j = i + 1; j < S.size(); ++j) {
                auto pc = lc::tensor::tensor_constraint_check(s->s, {S[i], S[j]}, len_cap);
                pairs.push_back({{"sets", {i, j}},
                                 {"graphical_constraint", pc.graphical},
                                 {"determinant", pc.numeric_det},
                                 {"numeric_zero", pc.numeric_zero}});
            }
        report["second_order"] = pairs;
        if (S.size() == 3) {
            json axes = json::array();
            for (const auto& a : lc::tensor::odd_dim_axis_sensitivity(s->s, S))
                axes.push_back({{"order", a.order}, {"determinant", a.det}});
            report["axis_orderings"] = axes;
        }
        *report_json = dup(report.dump(2));
    });
}

}  // extern "C"

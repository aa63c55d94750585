#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <bcmlab/bcmlab.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace bcmlab;

namespace {

constexpr const char* tool_version = "1.0.0";

struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx.get(), md, &len) != 1)
        throw std::runtime_error("sha256 digest failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
}

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw usage_error("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

/// Output directory with a digest-carrying manifest.
class run_output {
public:
    run_output(std::string command, const std::string& dir)
        : command_(std::move(command)), dir_(dir), started_(utc_now()) {}

    void write(const std::string& name, const std::string& body) {
        fs::create_directories(dir_);
        std::ofstream out(dir_ / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
        out << body;
        digests_[name] = sha256_hex(body);
    }
    void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

    void finish(const json& config, std::uint64_t seed) {
        json m;
        m["tool"] = "bcm-lab";
        m["version"] = tool_version;
        m["command"] = command_;
        m["config"] = config;
        m["seed"] = seed;
        m["started"] = started_;
        m["finished"] = utc_now();
        m["outputs"] = digests_;
        fs::create_directories(dir_);
        std::ofstream(dir_ / "manifest.json") << m.dump(2) << '\n';
    }

private:
    std::string command_;
    fs::path dir_;
    std::string started_;
    std::map<std::string, std::string> digests_;
};

template <class F>
std::string to_text(F&& f) {
    std::ostringstream os;
    f(os);
    return os.str();
}

// ---------------------------------------------------------- config files

std::string option_key(std::string name) {
    for (auto& ch : name)
        if (ch == '_') ch = '-';
    return "--" + name;
}

std::vector<std::pair<std::string, std::vector<std::string>>> load_config(const std::string& path) {
    std::vector<std::pair<std::string, std::vector<std::string>>> items;
    if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
        json j;
        try {
            j = json::parse(read_text(path));
        } catch (const json::exception& e) {
            throw usage_error("invalid JSON config: " + std::string(e.what()));
        }
        if (!j.is_object()) throw usage_error("JSON config must be an object");
        auto scalar = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
        for (const auto& [k, v] : j.items()) {
            std::vector<std::string> vals;
            if (v.is_array())
                for (const auto& x : v) vals.push_back(scalar(x));
            else if (v.is_object())
                throw usage_error("config key '" + k + "': nested tables are not supported");
            else
                vals.push_back(scalar(v));
            items.emplace_back(k, std::move(vals));
        }
        return items;
    }
    if (!fs::exists(path)) throw usage_error("config file not found: " + path);
    for (const auto& item : CLI::ConfigTOML().from_file(path)) {
        if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == "default"))
            throw usage_error("config key '" + item.fullname() + "': sections are not supported");
        if (item.name == "++" || item.name == "--") continue;
        items.emplace_back(item.name, item.inputs);
    }
    return items;
}

/// File values fill options not given on the command line.
void apply_config(CLI::App* leaf, const std::string& path) {
    for (const auto& [key, vals] : load_config(path)) {
        CLI::Option* op = leaf->get_option_no_throw(option_key(key));
        if (op == nullptr || key == "config") throw usage_error("unknown config key '" + key + "'");
        if (op->count() > 0) continue;
        op->add_result(vals);
        op->run_callback();
    }
}

json resolved_config(const CLI::App* leaf) {
    json cfg = json::object();
    for (const CLI::Option* op : leaf->get_options()) {
        const auto& name = op->get_single_name();
        if (name.empty() || name == "help") continue;
        if (op->count() > 0) {
            const auto& r = op->results();
            cfg[name] = r.size() == 1 ? json(r.front()) : json(r);
        } else {
            cfg[name] = op->get_default_str();
        }
    }
    return cfg;
}

// ---------------------------------------------------------- shared option groups

struct common_opts {
    std::string config, out;
    std::uint64_t seed = 1;
    unsigned threads = 0;

    void add(CLI::App* app, const std::string& default_out, bool with_threads = false) {
        out = default_out;
        app->add_option("--config", config, "TOML or JSON config file (flags override file values)");
        app->add_option("--out", out, "output directory");
        app->add_option("--seed", seed, "master seed");
        if (with_threads)
            app->add_option("--threads", threads, "worker threads (0: machine parallelism)")->envname("BCM_LAB_THREADS");
    }
};

struct pair_opts {
    std::string degseq;
    std::string regime = "finite3";
    std::int64_t n = 1000;
    double theta = 1.0, lambda = 0.0, tau = 3.5, mean = 1.0;
    std::int64_t cap = 0;
    bool no_tune = false;
    double tolerance_factor = 1e-2;
    int max_iterations = 200;

    void add(CLI::App* app) {
        app->add_option("--degseq", degseq, "degree sequence file (overrides the builder options)");
        app->add_option("--regime", regime, "finite3 or heavy")->check(CLI::IsMember({"finite3", "heavy"}));
        app->add_option("--n", n, "number of l-vertices")->check(CLI::PositiveNumber);
        app->add_option("--theta", theta, "ratio m/n")->check(CLI::PositiveNumber);
        app->add_option("--lambda", lambda, "critical window parameter");
        app->add_option("--tau", tau, "heavy-tail exponent in (3,4)");
        app->add_option("--mean", mean, "truncated Poisson mean of the base law (finite3)");
        app->add_option("--cap", cap, "largest degree of the base law (0: floor n^(1/3))");
        app->add_flag("--no-tune", no_tune, "skip critical tuning (heavy)");
        app->add_option("--tolerance-factor", tolerance_factor, "tuning tolerance factor");
        app->add_option("--max-iterations", max_iterations, "tuning evaluation budget");
    }

    degree_sequence_pair build(std::uint64_t seed) const {
        if (!degseq.empty()) {
            std::istringstream in(read_text(degseq));
            return read_degseq(in);
        }
        tuning_options opt{tolerance_factor, max_iterations};
        if (regime == "heavy") return build_heavy_tail(n, theta, lambda, tau, seed, !no_tune, opt);
        const auto law = truncated_poisson(mean, cap > 0 ? cap : default_poisson_cap(n));
        return build_finite_third(n, theta, lambda, law, seed, opt);
    }
};

struct ensemble_opts {
    std::size_t replicas = 100, reference_replicas = 500, pilot = 200, top_k = 3;
    double dt = 1e-3, T = 0.0;
    bool no_triangles = false;

    void add(CLI::App* app, bool triangles_flag = true) {
        app->add_option("--replicas", replicas, "graph replicas")->check(CLI::PositiveNumber);
        app->add_option("--reference-replicas", reference_replicas, "limit-simulation paths");
        app->add_option("--dt", dt, "simulation grid step")->check(CLI::PositiveNumber);
        app->add_option("--T", T, "simulation horizon (0: pilot calibration)");
        app->add_option("--pilot", pilot, "pilot paths for horizon calibration")->check(CLI::PositiveNumber);
        app->add_option("--top-k", top_k, "ranks compared")->check(CLI::PositiveNumber);
        if (triangles_flag) app->add_flag("--no-triangles", no_triangles, "skip triangle counting");
    }

    ensemble_config config(degree_sequence_pair pair, const common_opts& c) const {
        ensemble_config cfg;
        cfg.pair = std::move(pair);
        cfg.replicas = replicas;
        cfg.reference_replicas = reference_replicas;
        cfg.pilot_paths = pilot;
        cfg.top_k = top_k;
        cfg.dt = dt;
        cfg.T = T;
        cfg.triangles = !no_triangles;
        cfg.threads = c.threads;
        cfg.seed = c.seed;
        return cfg;
    }
};

struct levy_opts {
    double kappa = 1.0, rho = 1.0, lambda = 0.0, dt = 1e-3, T = 5.0;
    std::vector<double> beta;
    std::string beta_file;

    void add(CLI::App* app) {
        app->add_option("--kappa", kappa, "Brownian variance")->check(CLI::NonNegativeNumber);
        app->add_option("--rho", rho, "parabolic drift coefficient")->check(CLI::NonNegativeNumber);
        app->add_option("--lambda", lambda, "linear drift");
        app->add_option("--beta", beta, "jump sizes")->delimiter(',');
        app->add_option("--beta-file", beta_file, "file of jump sizes, one per line");
        app->add_option("--dt", dt, "grid step")->check(CLI::PositiveNumber);
        app->add_option("--T", T, "horizon")->check(CLI::PositiveNumber);
    }

    levy_params params() const {
        levy_params p{kappa, rho, lambda, beta, 0.0};
        if (!beta_file.empty()) {
            std::istringstream in(read_text(beta_file));
            const auto extra = read_beta(in);
            p.beta.insert(p.beta.end(), extra.begin(), extra.end());
        }
        std::sort(p.beta.begin(), p.beta.end(), std::greater<>{});
        validate(p);
        return p;
    }
};

json moments_json(const degree_sequence_pair& p) {
    const auto ms = moments(p);
    std::int64_t sr = 0;
    for (auto d : p.d_r) sr += d;
    return {{"n", p.n()},           {"m", p.m()},         {"sum_l", p.half_edges()}, {"sum_r", sr},
            {"regime", p.reg.token()}, {"nu", ms.nu},     {"nu_l", ms.nu_l},         {"nu_r", ms.nu_r},
            {"max_degree_l", p.d_l.front()}, {"max_degree_r", p.d_r.front()}};
}

json constants_json(const degree_sequence_pair& p) {
    try {
        const auto c = compute_limit_constants(p, p.lambda);
        json j{{"kappa", c.kappa}, {"rho", c.rho},         {"lambda", c.lambda},     {"nu_inf_l", c.nu_inf_l},
               {"nu_inf_r", c.nu_inf_r}, {"theta", c.theta}, {"mu1_l", c.mu1_l}, {"mu1_r", c.mu1_r}};
        if (c.reg.heavy()) {
            std::vector<double> head(c.beta_merged.begin(),
                                     c.beta_merged.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(10, c.beta_merged.size())));
            j["beta_merged_head"] = head;
            j["beta_tail_l2"] = {c.beta_tail_l, c.beta_tail_r};
        }
        return j;
    } catch (const degeneracy_error& e) {
        return {{"degenerate", e.what()}};
    }
}

std::string components_csv(const component_decomposition& dec) {
    return to_text([&](std::ostream& os) {
        os << "rank,size_r,size_l,edges,surplus\n";
        for (std::size_t i = 0; i < dec.records.size(); ++i) {
            const auto& c = dec.records[i];
            os << i + 1 << ',' << c.size_r << ',' << c.size_l << ',' << c.edge_count << ',' << c.surplus << '\n';
        }
    });
}

json quantiles_json(const std::vector<double>& xs) {
    json j;
    for (double q : {0.05, 0.25, 0.5, 0.75, 0.95}) {
        std::ostringstream k;
        k << "q" << std::setw(2) << std::setfill('0') << static_cast<int>(std::lround(q * 100));
        j[k.str()] = xs.empty() ? 0.0 : quantile(xs, q);
    }
    return j;
}

// ---------------------------------------------------------- command table

struct leaf {
    CLI::App* app = nullptr;
    std::string name;
    common_opts* common = nullptr;
    std::function<int(run_output&)> run;
};

class command_line {
public:
    command_line() : app_("Critical bipartite configuration models: builders, exploration, limit simulation and checks",
                          "bcm-lab") {
        app_.require_subcommand(1);
        app_.set_version_flag("--version", tool_version);
        app_.option_defaults()->always_capture_default();
        build_degseq();
        build_bcm();
        build_explore();
        build_levy();
        build_mc();
        build_validate();
    }

    int main(int argc, char** argv) {
        try {
            app_.parse(argc, argv);
        } catch (const CLI::ParseError& e) {
            const int code = app_.exit(e);
            return code == 0 ? 0 : 2;
        }
        for (auto& l : leaves_) {
            if (!l->app->parsed()) continue;
            try {
                if (!l->common->config.empty()) apply_config(l->app, l->common->config);
                run_output out(l->name, l->common->out);
                const int code = l->run(out);
                out.finish(resolved_config(l->app), l->common->seed);
                return code;
            } catch (const CLI::Error& e) {
                std::cerr << "bcm-lab: " << e.what() << '\n';
                return 2;
            } catch (const usage_error& e) {
                std::cerr << "bcm-lab: " << e.what() << '\n';
                return 2;
            } catch (const structural_error& e) {
                std::cerr << "bcm-lab: invariant failure: " << e.what() << '\n';
                return 1;
            } catch (const bcmlab::error& e) {
                std::cerr << "bcm-lab: " << e.what() << '\n';
                return 2;
            } catch (const std::exception& e) {
                std::cerr << "bcm-lab: " << e.what() << '\n';
                return 1;
            }
        }
        return 2;
    }

private:
    CLI::App app_;
    std::vector<std::unique_ptr<leaf>> leaves_;
    std::vector<std::unique_ptr<common_opts>> commons_;

    CLI::App* group(const std::string& name, const std::string& help) {
        auto* g = app_.add_subcommand(name, help);
        g->require_subcommand(1);
        return g;
    }

    template <class Setup>
    void add_leaf(CLI::App* parent, const std::string& name, const std::string& help, bool threads, Setup setup) {
        auto l = std::make_unique<leaf>();
        l->app = parent->add_subcommand(name, help);
        l->name = parent->get_name() + " " + name;
        commons_.push_back(std::make_unique<common_opts>());
        l->common = commons_.back().get();
        l->common->add(l->app, "out/" + parent->get_name() + "-" + name, threads);
        l->run = setup(l->app, *l->common);
        leaves_.push_back(std::move(l));
    }

    void build_degseq() {
        auto* g = group("degseq", "degree sequence builders");
        add_leaf(g, "build", "build a critical degree sequence pair", false, [](CLI::App* app, common_opts& c) {
            auto po = std::make_shared<pair_opts>();
            po->add(app);
            return std::function<int(run_output&)>([po, &c](run_output& out) {
                const auto p = po->build(c.seed);
                out.write("degseq.txt", to_text([&](std::ostream& os) { write_degseq(os, p); }));
                const double scale = make_scaling(p.reg, p.n()).c_n;
                json s{{"moments", moments_json(p)},
                       {"target_nu", 1.0 + p.lambda / scale},
                       {"constants", constants_json(p)}};
                out.write_json("summary.json", s);
                return 0;
            });
        });
    }

    void build_bcm() {
        auto* g = group("bcm", "bipartite configuration model");
        add_leaf(g, "generate", "sample a uniform matching", false, [](CLI::App* app, common_opts& c) {
            auto po = std::make_shared<pair_opts>();
            po->add(app);
            return std::function<int(run_output&)>([po, &c](run_output& out) {
                const auto p = po->build(c.seed);
                const auto gr = generate(p, derive_seed(c.seed, 1));
                const auto dec = decompose(gr);
                out.write("edges.csv", to_text([&](std::ostream& os) { write_edge_list(os, gr); }));
                out.write("components.csv", components_csv(dec));
                std::int64_t surplus = 0;
                for (const auto& r : dec.records) surplus += r.surplus;
                out.write_json("summary.json", {{"moments", moments_json(p)},
                                                {"components", dec.records.size()},
                                                {"largest_size_r", dec.records.front().size_r},
                                                {"largest_size_l", dec.records.front().size_l},
                                                {"surplus", surplus}});
                return 0;
            });
        });
        add_leaf(g, "triangles", "count intersection-graph triangles per component", false,
                 [](CLI::App* app, common_opts& c) {
                     auto po = std::make_shared<pair_opts>();
                     auto edges = std::make_shared<std::string>();
                     po->add(app);
                     app->add_option("--edges", *edges, "edge list file (instead of sampling)");
                     return std::function<int(run_output&)>([po, edges, &c](run_output& out) {
                         const auto gr = [&] {
                             if (edges->empty()) return generate(po->build(c.seed), derive_seed(c.seed, 1));
                             std::istringstream in(read_text(*edges));
                             return read_edge_list(in);
                         }();
                         const auto dec = decompose(gr);
                         const auto st = count_triangles(project_rig(gr), gr, dec);
                         out.write("triangles.csv", to_text([&](std::ostream& os) {
                                       os << "rank,size_r,size_l,surplus,triangles,type_one,type_two,proxy\n";
                                       for (std::size_t i = 0; i < dec.records.size(); ++i) {
                                           const auto& r = dec.records[i];
                                           const auto& t = st.per_component[i];
                                           os << i + 1 << ',' << r.size_r << ',' << r.size_l << ',' << r.surplus << ','
                                              << t.total << ',' << t.type_one << ',' << t.type_two << ',' << t.proxy
                                              << '\n';
                                       }
                                   }));
                         out.write_json("summary.json", {{"triangles", st.totals.total},
                                                         {"type_one", st.totals.type_one},
                                                         {"type_two", st.totals.type_two},
                                                         {"proxy", st.totals.proxy},
                                                         {"triangle_factor", triangle_factor(gr.pair().d_r)}});
                         return 0;
                     });
                 });
    }

    void build_explore() {
        auto* g = group("explore", "depth-first exploration walk");
        add_leaf(g, "run", "explore a sampled graph and record the walk", false, [](CLI::App* app, common_opts& c) {
            auto po = std::make_shared<pair_opts>();
            auto s = std::make_shared<double>(0.0);
            po->add(app);
            app->add_option("--s", *s, "perturbation weight (0: l-side criticality factor)");
            return std::function<int(run_output&)>([po, s, &c](run_output& out) {
                const auto p = po->build(c.seed);
                const auto gr = generate(p, derive_seed(c.seed, 1));
                const double weight = *s > 0 ? *s : default_s(p);
                const auto tr = explore(gr, weight, derive_seed(c.seed, 2));
                const auto wc = components_from_walk(tr);
                const auto bad = check_trace_identities(tr);
                std::vector<std::pair<std::int64_t, std::int64_t>> a, b;
                for (const auto& w : wc.discovery) a.emplace_back(w.size_r, w.size_l);
                for (const auto& r : decompose(gr).records) b.emplace_back(r.size_r, r.size_l);
                std::sort(a.begin(), a.end());
                std::sort(b.begin(), b.end());
                out.write("trace.csv", to_text([&](std::ostream& os) { write_trace_csv(os, tr); }));
                out.write("components.csv", to_text([&](std::ostream& os) {
                              os << "discovery,tau_prev,tau,size_r,size_l\n";
                              for (std::size_t i = 0; i < wc.discovery.size(); ++i) {
                                  const auto& w = wc.discovery[i];
                                  os << i + 1 << ',' << w.tau_prev << ',' << w.tau << ',' << w.size_r << ','
                                     << w.size_l << '\n';
                              }
                          }));
                const bool ok = !bad && a == b;
                out.write_json("summary.json", {{"s", weight},
                                                {"steps", tr.steps()},
                                                {"components", wc.discovery.size()},
                                                {"surplus", tr.Cn.empty() ? 0 : tr.Cn.back()},
                                                {"identities_ok", !bad},
                                                {"first_failing_step", bad ? json(*bad) : json(nullptr)},
                                                {"oracle_match", a == b}});
                if (!ok) std::cerr << "bcm-lab: exploration invariants failed\n";
                return ok ? 0 : 1;
            });
        });
    }

    void build_levy() {
        auto* g = group("levy", "limit process simulation");
        add_leaf(g, "simulate", "simulate a thinned Levy path on a grid", false, [](CLI::App* app, common_opts& c) {
            auto lo = std::make_shared<levy_opts>();
            lo->add(app);
            return std::function<int(run_output&)>([lo, &c](run_output& out) {
                const auto lp = simulate(lo->params(), lo->dt, lo->T, c.seed);
                out.write("path.csv", to_text([&](std::ostream& os) { write_path_csv(os, lp.path); }));
                const auto es = excursions(lp.path, 5);
                out.write_json("summary.json", {{"points", lp.path.size()},
                                                {"final", lp.path.values.back()},
                                                {"minimum", *std::min_element(lp.path.values.begin(), lp.path.values.end())},
                                                {"excursions", es.total_count},
                                                {"top_lengths", es.lengths()}});
                return 0;
            });
        });
        add_leaf(g, "excursions", "extract excursions above the running minimum", false,
                 [](CLI::App* app, common_opts& c) {
                     auto lo = std::make_shared<levy_opts>();
                     auto path = std::make_shared<std::string>(), counting = std::make_shared<std::string>();
                     auto top_k = std::make_shared<std::size_t>(20);
                     lo->add(app);
                     app->add_option("--path", *path, "path CSV (t,value); simulated from the parameters if absent");
                     app->add_option("--counting", *counting, "non-decreasing path CSV for excursion marks");
                     app->add_option("--top-k", *top_k, "longest excursions reported");
                     return std::function<int(run_output&)>([=, &c](run_output& out) {
                         const auto f = [&] {
                             if (path->empty()) return simulate(lo->params(), lo->dt, lo->T, c.seed).path;
                             std::istringstream in(read_text(*path));
                             return read_path_csv(in);
                         }();
                         excursion_set es;
                         if (counting->empty()) {
                             es = excursions(f, *top_k);
                         } else {
                             std::istringstream in(read_text(*counting));
                             es = marked_excursions(f, read_path_csv(in), *top_k);
                         }
                         out.write("excursions.csv", to_text([&](std::ostream& os) { write_excursions_csv(os, es); }));
                         out.write_json("summary.json", {{"total", es.total_count},
                                                         {"rest_length", es.rest_length},
                                                         {"time_at_minimum", es.time_at_minimum},
                                                         {"open_tail", es.open_tail},
                                                         {"lengths", es.lengths()}});
                         return 0;
                     });
                 });
    }

    void build_mc() {
        auto* g = group("mc", "Monte Carlo experiments");
        add_leaf(g, "ensemble", "replicate graphs and compare with the limit", true, [](CLI::App* app, common_opts& c) {
            auto po = std::make_shared<pair_opts>();
            auto eo = std::make_shared<ensemble_opts>();
            po->add(app);
            eo->add(app);
            return std::function<int(run_output&)>([po, eo, &c](run_output& out) {
                const auto cfg = eo->config(po->build(c.seed), c);
                const auto es = run_ensemble(cfg);
                out.write("stats.csv", to_text([&](std::ostream& os) {
                              os << "replica,order,rank,size_r,size_l,triangles\n";
                              for (std::size_t i = 0; i < es.replicas.size(); ++i)
                                  for (const auto* ord : {"r", "l"}) {
                                      const auto& v = ord[0] == 'r' ? es.replicas[i].by_r : es.replicas[i].by_l;
                                      for (std::size_t k = 0; k < v.size(); ++k)
                                          os << i << ',' << ord << ',' << k + 1 << ',' << format_double(v[k].size_r)
                                             << ',' << format_double(v[k].size_l) << ','
                                             << format_double(v[k].triangles) << '\n';
                                  }
                          }));
                out.write("reference.csv", to_text([&](std::ostream& os) {
                              os << "path,rank,length\n";
                              for (std::size_t i = 0; i < es.reference_heads.size(); ++i)
                                  for (std::size_t k = 0; k < es.reference_heads[i].size(); ++k)
                                      os << i << ',' << k + 1 << ',' << format_double(es.reference_heads[i][k]) << '\n';
                          }));
                json ranks = json::array();
                for (std::size_t k = 0; k < cfg.top_k; ++k) {
                    std::vector<double> emp, ref;
                    for (const auto& r : es.replicas) emp.push_back(k < r.by_r.size() ? r.by_r[k].size_r : 0.0);
                    for (const auto& h : es.reference_heads) ref.push_back(h[k]);
                    json row{{"rank", k + 1}, {"size_r", quantiles_json(emp)}, {"reference", quantiles_json(ref)},
                             {"mean_size_r", summarize(emp).mean}};
                    if (k < es.ks.size())
                        row["ks"] = {{"r_by_r", es.ks[k].r_by_r}, {"l_by_r", es.ks[k].l_by_r},
                                     {"r_by_l", es.ks[k].r_by_l}, {"l_by_l", es.ks[k].l_by_l}};
                    ranks.push_back(row);
                }
                const bool ok = es.invariant_failures == 0;
                out.write_json("summary.json", {{"moments", moments_json(cfg.pair)},
                                                {"constants", constants_json(cfg.pair)},
                                                {"scaling", {{"a_n", es.scaling.a_n}, {"b_n", es.scaling.b_n}, {"c_n", es.scaling.c_n}}},
                                                {"horizon", {{"T", es.horizon.T}, {"pilot_fraction", es.horizon.pilot_fraction},
                                                             {"converged", es.horizon.converged}}},
                                                {"ranks", ranks},
                                                {"invariant_failures", es.invariant_failures},
                                                {"pass", ok}});
                if (!ok) std::cerr << "bcm-lab: " << es.invariant_failures << " replicas failed invariant checks\n";
                return ok ? 0 : 1;
            });
        });
        add_leaf(g, "susceptibility", "subcritical expected cluster size against its bound", true,
                 [](CLI::App* app, common_opts& c) {
                     auto po = std::make_shared<pair_opts>();
                     auto replicas = std::make_shared<std::size_t>(1000);
                     po->add(app);
                     app->add_option("--replicas", *replicas, "graph replicas");
                     return std::function<int(run_output&)>([po, replicas, &c](run_output& out) {
                         const auto rep = susceptibility_check(po->build(c.seed), *replicas, c.seed, c.threads);
                         out.write_json("summary.json", {{"nu", rep.nu},
                                                         {"r", {{"estimate", rep.estimate_r}, {"se", rep.se_r}, {"bound", rep.bound_r}, {"pass", rep.pass_r}}},
                                                         {"l", {{"estimate", rep.estimate_l}, {"se", rep.se_l}, {"bound", rep.bound_l}, {"pass", rep.pass_l}}},
                                                         {"pass", rep.pass()}});
                         return rep.pass() ? 0 : 1;
                     });
                 });
        add_leaf(g, "paths", "alternating path counts against the expected bound", true,
                 [](CLI::App* app, common_opts& c) {
                     auto po = std::make_shared<pair_opts>();
                     auto replicas = std::make_shared<std::size_t>(1000);
                     auto len = std::make_shared<std::int64_t>(1);
                     po->add(app);
                     app->add_option("--replicas", *replicas, "graph replicas");
                     app->add_option("--length", *len, "half-length of the paths (2*length edges)");
                     return std::function<int(run_output&)>([=, &c](run_output& out) {
                         const auto rep = path_count_check(po->build(c.seed), *len, *replicas, c.seed, c.threads);
                         out.write_json("summary.json", {{"half_length", rep.half_length},
                                                         {"l", {{"mean", rep.mean_l}, {"se", rep.se_l}, {"mean_ordered", rep.mean_l_ordered}, {"bound", rep.bound_l}}},
                                                         {"r", {{"mean", rep.mean_r}, {"se", rep.se_r}, {"mean_ordered", rep.mean_r_ordered}, {"bound", rep.bound_r}}},
                                                         {"pass", rep.pass},
                                                         {"pass_ordered", rep.pass_ordered}});
                         return rep.pass ? 0 : 1;
                     });
                 });
        add_leaf(g, "triangles", "per-rank triangle counts against the limit", true, [](CLI::App* app, common_opts& c) {
            auto po = std::make_shared<pair_opts>();
            auto eo = std::make_shared<ensemble_opts>();
            po->add(app);
            eo->add(app, false);
            return std::function<int(run_output&)>([po, eo, &c](run_output& out) {
                const auto rep = triangle_limit_check(eo->config(po->build(c.seed), c));
                out.write("stats.csv", to_text([&](std::ostream& os) {
                              os << "rank,empirical_mean,empirical_se,predicted_mean,ratio\n";
                              for (const auto& r : rep.rows)
                                  os << r.rank << ',' << format_double(r.empirical_mean) << ','
                                     << format_double(r.empirical_se) << ',' << format_double(r.predicted_mean) << ','
                                     << format_double(r.ratio) << '\n';
                          }));
                json rows = json::array();
                for (const auto& r : rep.rows)
                    rows.push_back({{"rank", r.rank}, {"empirical_mean", r.empirical_mean}, {"predicted_mean", r.predicted_mean},
                                    {"ratio", r.ratio}});
                out.write_json("summary.json", {{"factor", rep.factor}, {"hub_term", rep.hub_term}, {"rows", rows},
                                                {"horizon", rep.horizon.T}});
                return 0;
            });
        });
    }

    void build_validate() {
        auto* g = group("validate", "built-in acceptance checks");
        add_leaf(g, "all", "run every check and report pass or fail", true, [](CLI::App* app, common_opts& c) {
            c.seed = validation_options{}.seed;
            app->get_option("--seed")->default_val(c.seed);
            auto quick = std::make_shared<bool>(false);
            auto only = std::make_shared<std::vector<int>>();
            app->add_flag("--quick", *quick, "fixture-scale subset");
            app->add_option("--only", *only, "run only these check ids")->check(CLI::Range(1, check_count));
            return std::function<int(run_output&)>([quick, only, &c](run_output& out) {
                validation_options opt{*quick, c.threads, c.seed};
                std::vector<int> ids = *only;
                if (ids.empty()) {
                    if (*quick)
                        ids = quick_checks();
                    else
                        for (int i = 1; i <= check_count; ++i) ids.push_back(i);
                }
                bool all = true;
                json results = json::array();
                std::ostringstream csv;
                csv << "id,pass,name,detail\n";
                for (int id : ids) {
                    const auto r = run_check(id, opt);
                    std::cout << format_result(r) << std::endl;
                    all = all && r.pass;
                    results.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
                    csv << r.id << ',' << (r.pass ? 1 : 0) << ",\"" << r.name << "\",\"" << r.detail << "\"\n";
                }
                out.write("results.csv", csv.str());
                out.write_json("summary.json", {{"checks", results}, {"pass", all}});
                return all ? 0 : 1;
            });
        });
    }
};

} // namespace

int main(int argc, char** argv) {
    command_line cli;
    return cli.main(argc, argv);
}

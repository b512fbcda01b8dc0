#include "mvmc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "mvmc/json_io.hpp"

namespace mvmc {

namespace {

constexpr int kSchemaVersion = 1;

const char* kCsvHeader =
    "schema_version,family,setting,d,p,q,eps,T,gamma,access,trial,seed,n,M,N,"
    "r_bar,err_p,success,q_transition,q_reward,q_lattice,deflated_reward,"
    "deflated_dp,classical_n,classical_err_p";

int worker_count() {
    if (const char* env = std::getenv("MVMC_WORKERS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

std::vector<double> number_list(const json& j, const std::string& key,
                                std::vector<double> fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    std::vector<double> out;
    if (v.is_array()) {
        for (const auto& x : v) out.push_back(norm_index_from_json(x));
    } else {
        out.push_back(norm_index_from_json(v));
    }
    if (out.empty()) throw ConfigInvalid("'" + key + "' must be nonempty");
    return out;
}

}  // namespace

ExperimentConfig experiment_config_from_json(const json& j) {
    static const std::set<std::string> known = {
        "name",       "master_seed", "trials",     "instance_file",
        "family",     "dims",        "eps",        "p",
        "q",          "gamma",       "T",          "r_max",
        "k",          "setting",     "access",     "rotation",
        "cost",       "classical_baseline",        "baseline_delta",
        "out_csv"};
    if (!j.is_object()) throw ConfigInvalid("config root must be an object");
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw ConfigInvalid("unknown config key '" + key + "'");

    ExperimentConfig cfg;
    try {
        cfg.name = j.value("name", cfg.name);
        cfg.master_seed = j.value("master_seed", cfg.master_seed);
        cfg.trials = j.value("trials", cfg.trials);
        cfg.instance_file = j.value("instance_file", cfg.instance_file);
        if (j.contains("family"))
            cfg.family = fixture_family_from_string(j.at("family").get<std::string>());
        if (j.contains("dims")) {
            if (j.at("dims").is_array())
                cfg.dims = j.at("dims").get<std::vector<int>>();
            else
                cfg.dims = {j.at("dims").get<int>()};
        }
        {
            auto to_vec = [](std::vector<double> v) { return v; };
            cfg.eps_values = to_vec(number_list(j, "eps", cfg.eps_values));
            cfg.p_values = to_vec(number_list(j, "p", cfg.p_values));
            cfg.q_values = to_vec(number_list(j, "q", cfg.q_values));
        }
        cfg.gamma = j.value("gamma", cfg.gamma);
        if (j.contains("T")) {
            cfg.T_values.clear();
            const json& t = j.at("T");
            if (t.is_array())
                for (const auto& x : t) cfg.T_values.push_back(depth_from_json(x));
            else
                cfg.T_values.push_back(depth_from_json(t));
        }
        cfg.r_max = j.value("r_max", cfg.r_max);
        cfg.k = j.value("k", cfg.k);
        if (j.contains("setting"))
            cfg.setting = reward_setting_from_string(j.at("setting").get<std::string>());
        if (j.contains("access")) {
            cfg.access_kinds.clear();
            const json& a = j.at("access");
            if (a.is_array())
                for (const auto& x : a)
                    cfg.access_kinds.push_back(oracle_kind_from_string(x.get<std::string>()));
            else
                cfg.access_kinds.push_back(oracle_kind_from_string(a.get<std::string>()));
        }
        cfg.rotation = j.value("rotation", cfg.rotation);
        if (j.contains("cost")) {
            const json& c = j.at("cost");
            cfg.cost.c1 = c.value("c1", cfg.cost.c1);
            cfg.cost.c2 = c.value("c2", cfg.cost.c2);
            cfg.cost.injected_error = c.value("injected_error", cfg.cost.injected_error);
        }
        cfg.run_classical_baseline = j.value("classical_baseline", cfg.run_classical_baseline);
        cfg.baseline_delta = j.value("baseline_delta", cfg.baseline_delta);
        cfg.out_csv = j.value("out_csv", cfg.out_csv);
    } catch (const json::exception& e) {
        throw ConfigInvalid(std::string("malformed config: ") + e.what());
    }

    if (cfg.trials < 1) throw ConfigInvalid("trials must be >= 1");
    if (cfg.dims.empty()) throw ConfigInvalid("dims must be nonempty");
    for (int d : cfg.dims)
        if (d < 1) throw ConfigInvalid("dims entries must be >= 1");
    for (double e : cfg.eps_values)
        if (!(e > 0.0)) throw ConfigInvalid("eps entries must be positive");
    for (double p : cfg.p_values)
        if (!(p >= 1.0)) throw ConfigInvalid("p entries must lie in [1, inf]");
    for (double q : cfg.q_values)
        if (!(q >= 1.0)) throw ConfigInvalid("q entries must lie in [1, inf]");
    if (!(cfg.gamma > 0.0 && cfg.gamma <= 1.0))
        throw ConfigInvalid("gamma must lie in (0, 1]");
    if (cfg.T_values.empty()) throw ConfigInvalid("T must be nonempty");
    if (!(cfg.r_max > 0.0)) throw ConfigInvalid("r_max must be positive");
    if (cfg.k < 1) throw ConfigInvalid("k must be >= 1");
    if (cfg.rotation != "identity" && cfg.rotation != "random" &&
        cfg.rotation != "hadamard")
        throw ConfigInvalid("rotation must be identity | random | hadamard");
    if (cfg.setting == RewardSetting::ExactDepth)
        for (const Depth& t : cfg.T_values)
            if (t.is_inf())
                throw ConfigInvalid("exact-depth sweeps need finite T");
    for (OracleKind kind : cfg.access_kinds)
        if (kind == OracleKind::Transition)
            throw ConfigInvalid("transition access is not a reward encoding");
    return cfg;
}

json experiment_config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["name"] = cfg.name;
    j["master_seed"] = cfg.master_seed;
    j["trials"] = cfg.trials;
    if (!cfg.instance_file.empty()) j["instance_file"] = cfg.instance_file;
    j["family"] = to_string(cfg.family);
    j["dims"] = cfg.dims;
    json eps = json::array(), p = json::array(), q = json::array(), t = json::array();
    for (double e : cfg.eps_values) eps.push_back(e);
    for (double v : cfg.p_values) p.push_back(norm_index_to_json(v));
    for (double v : cfg.q_values) q.push_back(norm_index_to_json(v));
    for (const Depth& v : cfg.T_values) t.push_back(depth_to_json(v));
    j["eps"] = eps;
    j["p"] = p;
    j["q"] = q;
    j["T"] = t;
    j["gamma"] = cfg.gamma;
    j["r_max"] = cfg.r_max;
    j["k"] = cfg.k;
    j["setting"] = to_string(cfg.setting);
    json acc = json::array();
    for (OracleKind kind : cfg.access_kinds) acc.push_back(to_string(kind));
    j["access"] = acc;
    j["rotation"] = cfg.rotation;
    j["cost"] = {{"c1", cfg.cost.c1},
                 {"c2", cfg.cost.c2},
                 {"injected_error", cfg.cost.injected_error}};
    j["classical_baseline"] = cfg.run_classical_baseline;
    j["baseline_delta"] = cfg.baseline_delta;
    if (!cfg.out_csv.empty()) j["out_csv"] = cfg.out_csv;
    return j;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigInvalid("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigInvalid(std::string("config is not valid JSON: ") + e.what());
    }
    return experiment_config_from_json(j);
}

// ---------------------------------------------------------------------------
// Trial execution.
// ---------------------------------------------------------------------------

namespace {

// One sweep point + trial, fully self-contained so workers need no shared
// mutable state beyond the output slot.
struct TrialTask {
    OracleKind access = OracleKind::Phase;
    int d = 1;
    Depth T = Depth::finite(1);
    double eps = 0.1;
    double p = kInf;
    double q = 2.0;
    int trial = 0;
    std::uint64_t seed = 0;
};

// Wraps a path-independent one-state loop reward as a one-path exact-depth
// payload (used for depth sweeps of the exact-depth cost factors).
MrpInstance exact_depth_loop(const Eigen::VectorXd& reward, int d, Depth T,
                             double gamma, double q, double r_max) {
    MrpInstance inst;
    inst.space.states = {"s"};
    inst.transitions.rows = Eigen::MatrixXd::Ones(1, 1);
    inst.s0 = 0;
    inst.T = T;
    inst.rewards.setting = RewardSetting::ExactDepth;
    inst.rewards.d = d;
    inst.rewards.q = q;
    inst.rewards.r_max = r_max;
    inst.rewards.gamma = gamma;
    inst.rewards.exact.emplace(0, reward);  // the unique all-zero path key
    inst.validate();
    return inst;
}

MrpInstance instance_for(const ExperimentConfig& cfg, const TrialTask& task,
                         const MrpInstance* from_file) {
    if (from_file != nullptr) return *from_file;
    CounterRng bit_rng(task.seed, 0x62697473ULL);
    if (cfg.family == FixtureFamily::MajorityParity) {
        const int tp = majority_parity_t_prime(task.T, cfg.gamma);
        auto bits = random_majority_parity_bits(task.d, cfg.k, tp,
                                                mix_seed(task.seed, 0x62697473ULL));
        return majority_parity_instance(bits, task.d, cfg.k, tp, task.q, cfg.r_max);
    }
    std::vector<int> b(task.d);
    for (int& x : b) x = static_cast<int>(bit_rng.below(2));
    if (cfg.setting == RewardSetting::ExactDepth) {
        const double tg = discount_sum(task.T, cfg.gamma);
        Eigen::VectorXd r =
            single_loop_value(cfg.family, b, task.d, task.eps, task.T, cfg.gamma,
                              task.q, cfg.r_max) /
            tg;
        return exact_depth_loop(r, task.d, task.T, cfg.gamma, task.q, cfg.r_max);
    }
    return single_loop_instance(cfg.family, b, task.d, task.eps, task.T,
                                cfg.gamma, task.q, cfg.r_max);
}

OrthogonalMatrix rotation_for(const ExperimentConfig& cfg, int d) {
    if (cfg.rotation == "random")
        return random_orthogonal(d, mix_seed(cfg.master_seed, 0x726f7461ULL));
    if (cfg.rotation == "hadamard") return hadamard(d);
    return identity_rotation(d);
}

TrialRecord run_one(const ExperimentConfig& cfg, const TrialTask& task,
                    const MrpInstance* from_file) {
    const auto t0 = std::chrono::steady_clock::now();
    const MrpInstance inst = instance_for(cfg, task, from_file);
    const OrthogonalMatrix rot = rotation_for(cfg, inst.rewards.d);

    const Estimate est = solve_mvmc(inst, task.p, task.eps, rot, task.access,
                                    cfg.cost, task.seed);

    TrialRecord rec;
    rec.family = from_file ? "file" : to_string(cfg.family);
    rec.setting = to_string(inst.rewards.setting);
    rec.d = inst.rewards.d;
    rec.p = task.p;
    rec.q = inst.rewards.q;
    rec.eps = task.eps;
    rec.t_horizon = inst.T.as_double();
    rec.gamma = inst.rewards.gamma;
    rec.access = to_string(task.access);
    rec.trial = task.trial;
    rec.seed = task.seed;
    rec.n = est.n;
    rec.M = est.M;
    rec.N = est.N;
    rec.r_bar = est.r_bar;
    rec.err_p = est.err_p;
    rec.success = est.success;
    rec.q_transition = est.counts.transition;
    rec.q_reward = est.counts.reward_base_total();
    rec.q_lattice = est.counts.derived_lattice;
    rec.deflated_reward = est.costs.deflated_reward;
    rec.deflated_dp = est.costs.deflated_dp;

    if (cfg.run_classical_baseline) {
        const Eigen::VectorXd vc = classical_estimate(
            inst, task.eps, cfg.baseline_delta, mix_seed(task.seed, 0x636c6173ULL));
        const double bound = classical_coordinate_bound(inst);
        rec.classical_n = static_cast<double>(classical_sample_count(
            bound, task.eps, cfg.baseline_delta, inst.rewards.d));
        rec.classical_err_p = lq_norm(
            Eigen::VectorXd(rot.m * vc - est.target), task.p);
    }
    const auto t1 = std::chrono::steady_clock::now();
    rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    return rec;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    std::optional<MrpInstance> file_instance;
    if (!cfg.instance_file.empty()) {
        std::ifstream in(cfg.instance_file);
        if (!in)
            throw ConfigInvalid("cannot open instance file '" + cfg.instance_file + "'");
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw ConfigInvalid(std::string("instance file is not valid JSON: ") +
                                e.what());
        }
        file_instance = instance_from_json(j);
    }

    std::vector<TrialTask> tasks;
    std::uint64_t global = 0;
    const std::vector<int> dims =
        file_instance ? std::vector<int>{file_instance->rewards.d} : cfg.dims;
    const std::vector<double> qs =
        file_instance ? std::vector<double>{file_instance->rewards.q} : cfg.q_values;
    for (OracleKind access : cfg.access_kinds)
        for (int d : dims)
            for (const Depth& T : cfg.T_values)
                for (double eps : cfg.eps_values)
                    for (double p : cfg.p_values)
                        for (double q : qs)
                            for (int trial = 0; trial < cfg.trials; ++trial) {
                                TrialTask t;
                                t.access = access;
                                t.d = d;
                                t.T = T;
                                t.eps = eps;
                                t.p = p;
                                t.q = q;
                                t.trial = trial;
                                t.seed = mix_seed(cfg.master_seed, global);
                                tasks.push_back(t);
                                ++global;
                            }

    const auto t0 = std::chrono::steady_clock::now();
    ExperimentResult result;
    result.records.resize(tasks.size());
    const MrpInstance* fi = file_instance ? &*file_instance : nullptr;

    const int workers =
        std::min<int>(worker_count(), static_cast<int>(tasks.size()) == 0
                                          ? 1
                                          : static_cast<int>(tasks.size()));
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto body = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            try {
                result.records[i] = run_one(cfg, tasks[i], fi);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    if (workers <= 1) {
        body();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(body);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    const auto t1 = std::chrono::steady_clock::now();
    result.total_wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    for (const TrialRecord& r : result.records)
        if (!r.success) ++result.failures;
    return result;
}

// ---------------------------------------------------------------------------
// CSV.
// ---------------------------------------------------------------------------

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string records_to_csv(const std::vector<TrialRecord>& records) {
    std::string out = kCsvHeader;
    out += '\n';
    for (const TrialRecord& r : records) {
        out += std::to_string(kSchemaVersion);
        out += ',';
        out += csv_escape(r.family);
        out += ',';
        out += csv_escape(r.setting);
        out += ',';
        out += std::to_string(r.d);
        out += ',';
        out += format_double(r.p);
        out += ',';
        out += format_double(r.q);
        out += ',';
        out += format_double(r.eps);
        out += ',';
        out += format_double(r.t_horizon);
        out += ',';
        out += format_double(r.gamma);
        out += ',';
        out += csv_escape(r.access);
        out += ',';
        out += std::to_string(r.trial);
        out += ',';
        out += std::to_string(r.seed);
        out += ',';
        out += std::to_string(r.n);
        out += ',';
        out += std::to_string(r.M);
        out += ',';
        out += std::to_string(r.N);
        out += ',';
        out += format_double(r.r_bar);
        out += ',';
        out += format_double(r.err_p);
        out += ',';
        out += (r.success ? "1" : "0");
        out += ',';
        out += std::to_string(r.q_transition);
        out += ',';
        out += std::to_string(r.q_reward);
        out += ',';
        out += std::to_string(r.q_lattice);
        out += ',';
        out += format_double(r.deflated_reward);
        out += ',';
        out += format_double(r.deflated_dp);
        out += ',';
        out += format_double(r.classical_n);
        out += ',';
        out += format_double(r.classical_err_p);
        out += '\n';
    }
    return out;
}

void write_csv(const ExperimentConfig& cfg, const ExperimentResult& result) {
    const std::string body = records_to_csv(result.records);
    if (cfg.out_csv.empty()) {
        std::cout << body;
        return;
    }
    std::ofstream out(cfg.out_csv, std::ios::binary);
    if (!out) throw OutputUnwritable("cannot open '" + cfg.out_csv + "' for writing");
    out << body;
    if (!out) throw OutputUnwritable("short write to '" + cfg.out_csv + "'");
}

namespace {

double parse_double_field(const std::string& s) {
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    return std::strtod(s.c_str(), nullptr);
}

// Minimal RFC-4180 row parser (quotes, embedded commas/newlines).
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            row.push_back(std::move(field));
            field.clear();
            if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
            row.clear();
        } else {
            field += c;
        }
    }
    if (!field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

std::vector<TrialRecord> records_from_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigInvalid("cannot open CSV '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const auto rows = parse_csv(buf.str());
    if (rows.empty()) throw ConfigInvalid("empty CSV '" + path + "'");

    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < rows[0].size(); ++i) col[rows[0][i]] = i;
    auto need = [&](const char* name) {
        auto it = col.find(name);
        if (it == col.end())
            throw ConfigInvalid("CSV '" + path + "' lacks column '" + name + "'");
        return it->second;
    };
    const std::size_t c_family = need("family"), c_setting = need("setting"),
                      c_d = need("d"), c_p = need("p"), c_q = need("q"),
                      c_eps = need("eps"), c_T = need("T"), c_gamma = need("gamma"),
                      c_access = need("access"), c_trial = need("trial"),
                      c_seed = need("seed"), c_n = need("n"), c_M = need("M"),
                      c_N = need("N"), c_rbar = need("r_bar"), c_err = need("err_p"),
                      c_succ = need("success"), c_qt = need("q_transition"),
                      c_qr = need("q_reward"), c_ql = need("q_lattice"),
                      c_dr = need("deflated_reward"), c_dd = need("deflated_dp"),
                      c_cn = need("classical_n"), c_ce = need("classical_err_p");

    std::vector<TrialRecord> records;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.size() < rows[0].size())
            throw ConfigInvalid("CSV '" + path + "' row " + std::to_string(i) +
                                " is short");
        TrialRecord rec;
        rec.family = r[c_family];
        rec.setting = r[c_setting];
        rec.d = std::atoi(r[c_d].c_str());
        rec.p = parse_double_field(r[c_p]);
        rec.q = parse_double_field(r[c_q]);
        rec.eps = parse_double_field(r[c_eps]);
        rec.t_horizon = parse_double_field(r[c_T]);
        rec.gamma = parse_double_field(r[c_gamma]);
        rec.access = r[c_access];
        rec.trial = std::atoi(r[c_trial].c_str());
        rec.seed = std::strtoull(r[c_seed].c_str(), nullptr, 10);
        rec.n = std::atoi(r[c_n].c_str());
        rec.M = std::strtoull(r[c_M].c_str(), nullptr, 10);
        rec.N = std::atoi(r[c_N].c_str());
        rec.r_bar = parse_double_field(r[c_rbar]);
        rec.err_p = parse_double_field(r[c_err]);
        rec.success = r[c_succ] == "1";
        rec.q_transition = std::strtoull(r[c_qt].c_str(), nullptr, 10);
        rec.q_reward = std::strtoull(r[c_qr].c_str(), nullptr, 10);
        rec.q_lattice = std::strtoull(r[c_ql].c_str(), nullptr, 10);
        rec.deflated_reward = parse_double_field(r[c_dr]);
        rec.deflated_dp = parse_double_field(r[c_dd]);
        rec.classical_n = parse_double_field(r[c_cn]);
        rec.classical_err_p = parse_double_field(r[c_ce]);
        records.push_back(std::move(rec));
    }
    return records;
}

std::string summarize(const ExperimentConfig& cfg, const ExperimentResult& result) {
    const std::size_t n = result.records.size();
    double err_sum = 0.0;
    std::uint64_t succ = 0, qt = 0, qr = 0, ql = 0;
    for (const TrialRecord& r : result.records) {
        err_sum += r.err_p;
        succ += r.success ? 1 : 0;
        qt += r.q_transition;
        qr += r.q_reward;
        ql += r.q_lattice;
    }
    std::ostringstream out;
    out << "experiment " << cfg.name << ": " << n << " trial(s)\n";
    if (n > 0) {
        out << "  success rate  " << format_double(double(succ) / double(n))
            << "\n";
        out << "  mean err_p    " << format_double(err_sum / double(n)) << "\n";
        out << "  queries       transition=" << qt << " reward=" << qr
            << " derived_lattice=" << ql << "\n";
    }
    out << "  wall time     " << format_double(result.total_wall_ms) << " ms\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Fits.
// ---------------------------------------------------------------------------

FitResult fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ConfigInvalid("fit: x/y size mismatch");
    // Aggregate by distinct x (mean y), then regress log y on log x.
    std::map<double, std::pair<double, int>> groups;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0) || std::isinf(x[i]) || std::isinf(y[i]))
            continue;
        auto& g = groups[x[i]];
        g.first += y[i];
        g.second += 1;
    }
    if (groups.size() < 3)
        throw InsufficientPoints("log-log fit needs >= 3 distinct positive x; got " +
                                 std::to_string(groups.size()));
    std::vector<double> lx, ly;
    for (const auto& [xv, g] : groups) {
        lx.push_back(std::log(xv));
        ly.push_back(std::log(g.first / g.second));
    }
    const int m = static_cast<int>(lx.size());
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < m; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < m; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    FitResult fit;
    fit.points = m;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ssr = 0.0;
    for (int i = 0; i < m; ++i) {
        const double resid = ly[i] - (fit.intercept + fit.slope * lx[i]);
        ssr += resid * resid;
    }
    fit.stderr_slope = m > 2 ? std::sqrt(ssr / (m - 2) / sxx) : 0.0;
    return fit;
}

namespace {

double axis_value(const TrialRecord& r, const std::string& axis) {
    if (axis == "d") return static_cast<double>(r.d);
    if (axis == "eps") return r.eps;
    if (axis == "T") return r.t_horizon;
    throw ConfigInvalid("unknown fit axis '" + axis + "' (want d | eps | T)");
}

double counter_value(const TrialRecord& r, const std::string& counter) {
    if (counter == "reward") return r.deflated_reward;
    if (counter == "transition" || counter == "dp") return r.deflated_dp;
    if (counter == "q_reward") return static_cast<double>(r.q_reward);
    if (counter == "q_transition") return static_cast<double>(r.q_transition);
    if (counter == "q_lattice") return static_cast<double>(r.q_lattice);
    throw ConfigInvalid("unknown counter '" + counter + "'");
}

}  // namespace

FitResult fit_scaling(const std::vector<TrialRecord>& records,
                      const std::string& axis, const std::string& counter) {
    std::vector<double> x, y;
    x.reserve(records.size());
    y.reserve(records.size());
    for (const TrialRecord& r : records) {
        x.push_back(axis_value(r, axis));
        y.push_back(counter_value(r, counter));
    }
    return fit_loglog(x, y);
}

// ---------------------------------------------------------------------------
// Plots.  Pure string assembly from deterministic inputs, so regenerating
// with the same records yields identical bytes.
// ---------------------------------------------------------------------------

namespace {

constexpr double kW = 640.0, kH = 440.0, kMargin = 60.0;

std::string svg_header() {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" "
           "height=\"440\" viewBox=\"0 0 640 440\">\n"
           "<rect width=\"640\" height=\"440\" fill=\"white\"/>\n"
           "<line x1=\"60\" y1=\"380\" x2=\"580\" y2=\"380\" stroke=\"black\"/>\n"
           "<line x1=\"60\" y1=\"60\" x2=\"60\" y2=\"380\" stroke=\"black\"/>\n";
}

std::string svg_text(double x, double y, const std::string& s) {
    return "<text x=\"" + format_double(x) + "\" y=\"" + format_double(y) +
           "\" font-family=\"monospace\" font-size=\"12\">" + s + "</text>\n";
}

std::string scaling_plot(const std::vector<TrialRecord>& records,
                         const std::string& axis, const std::string& counter) {
    std::map<double, std::pair<double, int>> groups;
    for (const TrialRecord& r : records) {
        const double xv = axis_value(r, axis);
        const double yv = counter_value(r, counter);
        if (!(xv > 0.0) || !(yv > 0.0) || std::isinf(xv) || std::isinf(yv)) continue;
        auto& g = groups[xv];
        g.first += yv;
        g.second += 1;
    }
    std::string out = svg_header();
    out += svg_text(kMargin, kH - 20.0, axis + " (log)");
    out += svg_text(8.0, 40.0, counter + " (log)");
    if (!groups.empty()) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& [xv, g] : groups)
            pts.emplace_back(std::log10(xv), std::log10(g.first / g.second));
        double x0 = pts.front().first, x1 = pts.back().first;
        double y0 = pts.front().second, y1 = y0;
        for (const auto& p : pts) {
            y0 = std::min(y0, p.second);
            y1 = std::max(y1, p.second);
        }
        if (x1 - x0 < 1e-12) {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if (y1 - y0 < 1e-12) {
            y0 -= 0.5;
            y1 += 0.5;
        }
        auto px = [&](double lx) {
            return kMargin + (lx - x0) / (x1 - x0) * (kW - 2.0 * kMargin);
        };
        auto py = [&](double ly) {
            return (kH - kMargin) - (ly - y0) / (y1 - y0) * (kH - 2.0 * kMargin);
        };
        std::string poly;
        for (const auto& p : pts) {
            out += "<circle cx=\"" + format_double(px(p.first)) + "\" cy=\"" +
                   format_double(py(p.second)) + "\" r=\"3\" fill=\"steelblue\"/>\n";
            if (!poly.empty()) poly += ' ';
            poly += format_double(px(p.first)) + "," + format_double(py(p.second));
        }
        out += "<polyline points=\"" + poly +
               "\" fill=\"none\" stroke=\"steelblue\"/>\n";
        if (groups.size() >= 3) {
            const FitResult fit = fit_scaling(records, axis, counter);
            out += svg_text(kMargin + 10.0, kMargin + 10.0,
                            "slope " + format_double(fit.slope) + " +/- " +
                                format_double(fit.stderr_slope));
        }
    }
    out += "</svg>\n";
    return out;
}

std::string success_plot(const std::vector<TrialRecord>& records) {
    // Success rate per (family, access, d, eps) group.
    std::map<std::string, std::pair<int, int>> groups;
    for (const TrialRecord& r : records) {
        const std::string key = r.family + "/" + r.access + "/d=" +
                                std::to_string(r.d) + "/eps=" +
                                format_double(r.eps);
        auto& g = groups[key];
        g.first += r.success ? 1 : 0;
        g.second += 1;
    }
    std::string out = svg_header();
    out += svg_text(8.0, 40.0, "success rate");
    if (!groups.empty()) {
        const double span = kW - 2.0 * kMargin;
        const double bw = span / static_cast<double>(groups.size());
        int i = 0;
        for (const auto& [key, g] : groups) {
            const double rate = double(g.first) / double(g.second);
            const double x = kMargin + bw * i + bw * 0.1;
            const double h = rate * (kH - 2.0 * kMargin);
            out += "<rect x=\"" + format_double(x) + "\" y=\"" +
                   format_double((kH - kMargin) - h) + "\" width=\"" +
                   format_double(bw * 0.8) + "\" height=\"" + format_double(h) +
                   "\" fill=\"seagreen\"/>\n";
            out += svg_text(x, kH - 20.0 - 12.0 * (i % 2), key);
            ++i;
        }
    }
    out += "</svg>\n";
    return out;
}

}  // namespace

std::string render_plot(const std::vector<TrialRecord>& records,
                        const std::string& spec) {
    if (spec == "success") return success_plot(records);
    // scaling:<axis>:<counter>
    if (spec.rfind("scaling:", 0) == 0) {
        const std::string rest = spec.substr(8);
        const auto sep = rest.find(':');
        if (sep == std::string::npos)
            throw ConfigInvalid("plot spec must be scaling:<axis>:<counter>");
        return scaling_plot(records, rest.substr(0, sep), rest.substr(sep + 1));
    }
    throw ConfigInvalid("unknown plot spec '" + spec +
                        "' (want success | scaling:<axis>:<counter>)");
}

}  // namespace mvmc

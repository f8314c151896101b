#include "memfem/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "memfem/errors.hpp"
#include "memfem/expr.hpp"

namespace memfem {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const char* where, const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            throw ConfigError(std::string("unknown key '") + it.key() + "' in " + where);
    }
}

double get_num(const json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number())
        throw ConfigError(std::string("'") + key + "' must be a number");
    const double v = obj[key].get<double>();
    if (!std::isfinite(v))
        throw ConfigError(std::string("'") + key + "' must be finite");
    return v;
}

int get_int(const json& obj, const char* key, int fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_integer())
        throw ConfigError(std::string("'") + key + "' must be an integer");
    return obj[key].get<int>();
}

std::string get_str(const json& obj, const char* key, const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_string())
        throw ConfigError(std::string("'") + key + "' must be a string");
    return obj[key].get<std::string>();
}

std::vector<double> get_num_list(const json& obj, const char* key,
                                 std::vector<double> fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_array())
        throw ConfigError(std::string("'") + key + "' must be an array");
    std::vector<double> out;
    for (const auto& v : obj[key]) {
        if (!v.is_number())
            throw ConfigError(std::string("'") + key + "' entries must be numbers");
        const double d = v.get<double>();
        if (!std::isfinite(d))
            throw ConfigError(std::string("'") + key + "' entries must be finite");
        out.push_back(d);
    }
    return out;
}

std::vector<int> get_int_list(const json& obj, const char* key,
                              std::vector<int> fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_array())
        throw ConfigError(std::string("'") + key + "' must be an array");
    std::vector<int> out;
    for (const auto& v : obj[key]) {
        if (!v.is_number_integer())
            throw ConfigError(std::string("'") + key + "' entries must be integers");
        out.push_back(v.get<int>());
    }
    return out;
}

void check_positive(double v, const char* what) {
    if (!(v > 0.0)) throw ConfigError(std::string(what) + " must be positive");
}

bool is_step_multiple(double value, double dt) {
    const double raw = value / dt;
    const long k = std::lround(raw);
    return k >= 1 && std::abs(raw - k) <= 1e-9 * std::max(1.0, raw);
}

void validate(RunConfig& cfg) {
    const std::set<std::string> problems{"thin", "thick", "concentration", "delta_study"};
    if (!problems.count(cfg.problem))
        throw ConfigError("problem must be thin, thick, concentration, or delta_study");

    if (cfg.n < 2) throw ConfigError("mesh n must be at least 2");
    for (const Box& b : cfg.boxes) {
        if (!(std::isfinite(b.x0) && std::isfinite(b.y0) && std::isfinite(b.x1) &&
              std::isfinite(b.y1)))
            throw ConfigError("box coordinates must be finite");
        if (!(b.x0 < b.x1 && b.y0 < b.y1))
            throw ConfigError("box corners must satisfy x0 < x1 and y0 < y1");
    }

    check_positive(cfg.sigma_int, "sigma_int");
    check_positive(cfg.sigma_out, "sigma_out");
    check_positive(cfg.alpha, "alpha");
    if (cfg.delta < 0.0) throw ConfigError("delta must be nonnegative");
    check_positive(cfg.dt, "dt");
    check_positive(cfg.t_end, "t_end");
    if (!is_step_multiple(cfg.t_end, cfg.dt))
        throw ConfigError("t_end must be a positive multiple of dt");
    check_positive(cfg.picard_tol, "picard_tol");
    if (cfg.max_sweeps < 1) throw ConfigError("max_sweeps must be at least 1");
    check_positive(cfg.cg_tol, "cg_tol");
    check_positive(cfg.compat_tol, "compat_tol");
    if (cfg.cg_max_iter < 1) throw ConfigError("cg_max_iter must be at least 1");
    if (cfg.threads < 1) throw ConfigError("threads must be at least 1");

    if (cfg.window == 0.0) cfg.window = cfg.t_end;
    if (!is_step_multiple(cfg.window, cfg.dt))
        throw ConfigError("window must be a positive multiple of dt");

    if (cfg.problem == "thin") {
        if (cfg.scheme != "marching" && cfg.scheme != "picard")
            throw ConfigError("thin scheme must be marching or picard");
        if (cfg.thicken_k != 0)
            throw ConfigError("thin runs use thicken_k = 0");
        if (cfg.boxes.empty()) throw ConfigError("thin runs need at least one box");
    } else if (cfg.problem == "thick") {
        if (cfg.scheme != "implicit" && cfg.scheme != "explicit" && cfg.scheme != "picard")
            throw ConfigError("thick scheme must be implicit, explicit, or picard");
        if (cfg.scheme != "implicit" && !(cfg.delta > 0.0))
            throw ConfigError("explicit and picard schemes require delta > 0");
        if (cfg.thicken_k < 1)
            throw ConfigError("thick runs need thicken_k >= 1");
        if (cfg.boxes.empty()) throw ConfigError("thick runs need at least one box");
    } else if (cfg.problem == "delta_study") {
        if (cfg.scheme != "implicit")
            throw ConfigError("delta studies run the implicit scheme");
        if (cfg.thicken_k < 1)
            throw ConfigError("delta studies need thicken_k >= 1");
        if (cfg.boxes.empty()) throw ConfigError("delta studies need at least one box");
        if (cfg.delta_list.empty()) throw ConfigError("delta_list must be nonempty");
        for (std::size_t i = 0; i < cfg.delta_list.size(); ++i) {
            if (!(cfg.delta_list[i] > 0.0))
                throw ConfigError("delta_list entries must be positive");
            if (i > 0 && !(cfg.delta_list[i] < cfg.delta_list[i - 1]))
                throw ConfigError("delta_list must be strictly decreasing");
        }
    } else {  // concentration
        if (cfg.scheme != "marching")
            throw ConfigError("concentration runs march the thin problem");
        if (cfg.thicken_k != 0)
            throw ConfigError("concentration starts from a thin mesh (thicken_k = 0)");
        if (cfg.boxes.empty())
            throw ConfigError("concentration runs need at least one box");
        if (cfg.eta_cells.empty()) throw ConfigError("eta_cells must be nonempty");
        for (int k : cfg.eta_cells) {
            if (k < 1) throw ConfigError("eta_cells entries must be positive");
        }
        if (cfg.sample_times.empty()) {
            cfg.sample_times = {0.5 * cfg.t_end, cfg.t_end};
        }
        for (double t : cfg.sample_times) {
            if (t < 0.0 || t > cfg.t_end + 1e-12)
                throw ConfigError("sample_times must lie inside [0, t_end]");
        }
    }

    for (double t : cfg.dump_times) {
        if (t < -1e-12 || t > cfg.t_end + 1e-12)
            throw ConfigError("dump_times must lie inside [0, t_end]");
    }

    // Expressions must parse up front; evaluation errors surface at run time.
    Expr::parse(cfg.f_expr);
    Expr::parse(cfg.u0_expr);
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");

    require_keys(j, "config",
                 {"problem", "mesh", "physics", "time", "tolerances", "f_expr",
                  "u0_expr", "output", "delta_list", "eta_cells", "seed", "threads"});

    RunConfig cfg;
    cfg.problem = get_str(j, "problem", cfg.problem);

    if (j.contains("mesh")) {
        const json& m = j["mesh"];
        if (!m.is_object()) throw ConfigError("'mesh' must be an object");
        require_keys(m, "mesh", {"n", "boxes", "thicken_k"});
        cfg.n = get_int(m, "n", cfg.n);
        cfg.thicken_k = get_int(m, "thicken_k", cfg.thicken_k);
        if (m.contains("boxes")) {
            if (!m["boxes"].is_array()) throw ConfigError("'boxes' must be an array");
            for (const auto& b : m["boxes"]) {
                if (!b.is_array() || b.size() != 4)
                    throw ConfigError("each box is an array [x0, y0, x1, y1]");
                for (const auto& v : b) {
                    if (!v.is_number())
                        throw ConfigError("box coordinates must be numbers");
                }
                cfg.boxes.push_back({b[0].get<double>(), b[1].get<double>(),
                                     b[2].get<double>(), b[3].get<double>()});
            }
        }
    }

    if (j.contains("physics")) {
        const json& p = j["physics"];
        if (!p.is_object()) throw ConfigError("'physics' must be an object");
        require_keys(p, "physics", {"sigma_int", "sigma_out", "alpha", "delta"});
        cfg.sigma_int = get_num(p, "sigma_int", cfg.sigma_int);
        cfg.sigma_out = get_num(p, "sigma_out", cfg.sigma_out);
        cfg.alpha = get_num(p, "alpha", cfg.alpha);
        cfg.delta = get_num(p, "delta", cfg.delta);
    }

    if (j.contains("time")) {
        const json& t = j["time"];
        if (!t.is_object()) throw ConfigError("'time' must be an object");
        require_keys(t, "time",
                     {"t_end", "dt", "scheme", "window", "picard_tol", "max_sweeps"});
        cfg.t_end = get_num(t, "t_end", cfg.t_end);
        cfg.dt = get_num(t, "dt", cfg.dt);
        cfg.scheme = get_str(t, "scheme", cfg.scheme);
        cfg.window = get_num(t, "window", cfg.window);
        cfg.picard_tol = get_num(t, "picard_tol", cfg.picard_tol);
        cfg.max_sweeps = get_int(t, "max_sweeps", cfg.max_sweeps);
    }

    if (j.contains("tolerances")) {
        const json& t = j["tolerances"];
        if (!t.is_object()) throw ConfigError("'tolerances' must be an object");
        require_keys(t, "tolerances", {"cg_tol", "cg_max_iter", "compat_tol"});
        cfg.cg_tol = get_num(t, "cg_tol", cfg.cg_tol);
        cfg.cg_max_iter = get_int(t, "cg_max_iter", cfg.cg_max_iter);
        cfg.compat_tol = get_num(t, "compat_tol", cfg.compat_tol);
    }

    cfg.f_expr = get_str(j, "f_expr", cfg.f_expr);
    cfg.u0_expr = get_str(j, "u0_expr", cfg.u0_expr);

    if (j.contains("output")) {
        const json& o = j["output"];
        if (!o.is_object()) throw ConfigError("'output' must be an object");
        require_keys(o, "output", {"dump_times", "sample_times"});
        cfg.dump_times = get_num_list(o, "dump_times", cfg.dump_times);
        cfg.sample_times = get_num_list(o, "sample_times", cfg.sample_times);
    }

    cfg.delta_list = get_num_list(j, "delta_list", cfg.delta_list);
    cfg.eta_cells = get_int_list(j, "eta_cells", cfg.eta_cells);

    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
            throw ConfigError("'seed' must be an integer");
        cfg.seed = j["seed"].get<std::uint64_t>();
    }
    cfg.threads = get_int(j, "threads", cfg.threads);

    validate(cfg);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
    json j;
    j["problem"] = cfg.problem;

    json boxes = json::array();
    for (const Box& b : cfg.boxes) boxes.push_back({b.x0, b.y0, b.x1, b.y1});
    j["mesh"] = {{"n", cfg.n}, {"boxes", boxes}, {"thicken_k", cfg.thicken_k}};

    j["physics"] = {{"sigma_int", cfg.sigma_int},
                    {"sigma_out", cfg.sigma_out},
                    {"alpha", cfg.alpha},
                    {"delta", cfg.delta}};
    j["time"] = {{"t_end", cfg.t_end},
                 {"dt", cfg.dt},
                 {"scheme", cfg.scheme},
                 {"window", cfg.window},
                 {"picard_tol", cfg.picard_tol},
                 {"max_sweeps", cfg.max_sweeps}};
    j["tolerances"] = {{"cg_tol", cfg.cg_tol},
                       {"cg_max_iter", cfg.cg_max_iter},
                       {"compat_tol", cfg.compat_tol}};
    j["f_expr"] = cfg.f_expr;
    j["u0_expr"] = cfg.u0_expr;
    j["output"] = {{"dump_times", cfg.dump_times}, {"sample_times", cfg.sample_times}};
    j["delta_list"] = cfg.delta_list;
    j["eta_cells"] = cfg.eta_cells;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    return j.dump(2) + "\n";
}

}  // namespace memfem

#include "critforms/config.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace critforms {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

ConfigValue parse_scalar(const std::string& tok) {
    if (tok == "true") return true;
    if (tok == "false") return false;
    if (tok.size() >= 2 && tok.front() == '"' && tok.back() == '"')
        return tok.substr(1, tok.size() - 2);
    // integer?
    {
        std::int64_t v = 0;
        auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (r.ec == std::errc() && r.ptr == tok.data() + tok.size()) return v;
    }
    {
        double v = 0.0;
        auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (r.ec == std::errc() && r.ptr == tok.data() + tok.size()) return v;
    }
    throw InputError("config: cannot parse value '" + tok + "'");
}

std::string strip_comment(const std::string& line) {
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_str = !in_str;
        if (line[i] == '#' && !in_str) return line.substr(0, i);
    }
    return line;
}

}  // namespace

ConfigTree parse_toml(const std::string& text) {
    ConfigTree tree;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw InputError("toml line " + std::to_string(lineno) + ": bad table header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InputError("toml line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw InputError("toml line " + std::to_string(lineno) + ": empty key or value");
        if (!section.empty()) key = section + "." + key;
        if (val.front() == '[') {
            if (val.back() != ']')
                throw InputError("toml line " + std::to_string(lineno) + ": unterminated array");
            std::string body = trim(val.substr(1, val.size() - 2));
            std::vector<double> nums;
            std::vector<std::string> strs;
            bool is_str = false;
            if (!body.empty()) {
                std::istringstream items(body);
                std::string item;
                while (std::getline(items, item, ',')) {
                    item = trim(item);
                    if (item.empty()) continue;
                    ConfigValue v = parse_scalar(item);
                    if (std::holds_alternative<std::string>(v)) {
                        is_str = true;
                        strs.push_back(std::get<std::string>(v));
                    } else if (std::holds_alternative<double>(v)) {
                        nums.push_back(std::get<double>(v));
                    } else if (std::holds_alternative<std::int64_t>(v)) {
                        nums.push_back(static_cast<double>(std::get<std::int64_t>(v)));
                    } else {
                        throw InputError("toml: unsupported array element");
                    }
                }
            }
            if (is_str && !nums.empty())
                throw InputError("toml: mixed array types");
            if (is_str)
                tree[key] = strs;
            else
                tree[key] = nums;
        } else {
            tree[key] = parse_scalar(val);
        }
    }
    return tree;
}

ConfigTree parse_json_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(std::string("json config: ") + e.what());
    }
    ConfigTree tree;
    std::function<void(const std::string&, const nlohmann::json&)> walk =
        [&](const std::string& prefix, const nlohmann::json& node) {
            if (node.is_object()) {
                for (auto it = node.begin(); it != node.end(); ++it)
                    walk(prefix.empty() ? it.key() : prefix + "." + it.key(), it.value());
            } else if (node.is_array()) {
                std::vector<double> nums;
                std::vector<std::string> strs;
                for (const auto& e : node) {
                    if (e.is_string())
                        strs.push_back(e.get<std::string>());
                    else
                        nums.push_back(e.get<double>());
                }
                if (!strs.empty() && !nums.empty())
                    throw InputError("json config: mixed array types at " + prefix);
                if (!strs.empty())
                    tree[prefix] = strs;
                else
                    tree[prefix] = nums;
            } else if (node.is_boolean()) {
                tree[prefix] = node.get<bool>();
            } else if (node.is_number_integer()) {
                tree[prefix] = node.get<std::int64_t>();
            } else if (node.is_number()) {
                tree[prefix] = node.get<double>();
            } else if (node.is_string()) {
                tree[prefix] = node.get<std::string>();
            } else {
                throw InputError("json config: unsupported value at " + prefix);
            }
        };
    walk("", j);
    return tree;
}

ConfigTree parse_config(const std::string& text) {
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        return c == '{' ? parse_json_config(text) : parse_toml(text);
    }
    throw InputError("config: empty input");
}

namespace {

template <typename T>
bool fetch(const ConfigTree& t, const std::string& key, T& out) {
    auto it = t.find(key);
    if (it == t.end()) return false;
    if constexpr (std::is_same_v<T, double>) {
        if (std::holds_alternative<double>(it->second)) {
            out = std::get<double>(it->second);
            return true;
        }
        if (std::holds_alternative<std::int64_t>(it->second)) {
            out = static_cast<double>(std::get<std::int64_t>(it->second));
            return true;
        }
    } else if constexpr (std::is_same_v<T, std::int64_t>) {
        if (std::holds_alternative<std::int64_t>(it->second)) {
            out = std::get<std::int64_t>(it->second);
            return true;
        }
        if (std::holds_alternative<double>(it->second)) {
            out = static_cast<std::int64_t>(std::get<double>(it->second));
            return true;
        }
    } else {
        if (std::holds_alternative<T>(it->second)) {
            out = std::get<T>(it->second);
            return true;
        }
    }
    throw InputError("config: wrong type for key '" + key + "'");
}

}  // namespace

RunConfig RunConfig::from_tree(const ConfigTree& tree) {
    RunConfig c;
    fetch(tree, "task", c.task);
    fetch(tree, "recipe.kind", c.kind);
    std::int64_t d64 = c.d;
    if (fetch(tree, "recipe.d", d64)) c.d = static_cast<int>(d64);
    fetch(tree, "recipe.alpha", c.alpha);
    fetch(tree, "recipe.delta", c.delta);
    fetch(tree, "recipe.h", c.grid_h);
    fetch(tree, "recipe.L", c.box_radius);
    fetch(tree, "recipe.transformed", c.transformed);
    fetch(tree, "recipe.p", c.p);
    fetch(tree, "recipe.x_lo", c.x_lo);
    fetch(tree, "recipe.x_hi", c.x_hi);
    fetch(tree, "recipe.n_nodes", c.n_nodes);
    fetch(tree, "recipe.mu_exponent", c.mu_exponent);
    fetch(tree, "tol", c.tol);
    fetch(tree, "levels", c.levels);
    fetch(tree, "level_counts", c.level_counts);
    fetch(tree, "core_radius", c.core_radius);
    fetch(tree, "out", c.out);
    std::int64_t seed64 = 0;
    if (fetch(tree, "seed", seed64)) {
        c.seed = static_cast<std::uint64_t>(seed64);
        c.seed_set = true;
    }
    fetch(tree, "n_paths", c.n_paths);
    fetch(tree, "t", c.time_horizon);
    fetch(tree, "dt", c.dt);
    fetch(tree, "potential_cap", c.potential_cap);
    fetch(tree, "threads", c.threads);
    fetch(tree, "sweep.delta_min", c.delta_min);
    fetch(tree, "sweep.delta_max", c.delta_max);
    fetch(tree, "sweep.delta_count", c.delta_count);
    return c;
}

RunConfig RunConfig::from_text(const std::string& text) {
    return from_tree(parse_config(text));
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str());
}

std::string RunConfig::canonical_json() const {
    nlohmann::json j;
    j["task"] = task;
    auto& r = j["recipe"];
    r["kind"] = kind;
    r["d"] = d;
    r["alpha"] = alpha;
    r["delta"] = delta;
    r["h"] = grid_h;
    r["L"] = box_radius;
    r["transformed"] = transformed;
    r["p"] = p;
    r["x_lo"] = x_lo;
    r["x_hi"] = x_hi;
    r["n_nodes"] = n_nodes;
    r["mu_exponent"] = mu_exponent;
    j["tol"] = tol;
    j["levels"] = levels;
    j["level_counts"] = level_counts;
    j["core_radius"] = core_radius;
    j["out"] = out;
    if (seed_set) j["seed"] = static_cast<std::int64_t>(seed);
    j["n_paths"] = n_paths;
    j["t"] = time_horizon;
    j["dt"] = dt;
    j["potential_cap"] = potential_cap;
    j["threads"] = threads;
    auto& s = j["sweep"];
    s["delta_min"] = delta_min;
    s["delta_max"] = delta_max;
    s["delta_count"] = delta_count;
    return j.dump();
}

void RunConfig::validate() const {
    static const char* kTasks[] = {"build",  "spectrum", "classify",
                                   "capacity", "khtest",   "critical-cert",
                                   "hardy",  "simulate", "sweep"};
    bool ok = false;
    for (const char* t : kTasks) ok = ok || task == t;
    if (!ok) throw InputError("config: unknown task '" + task + "'");
    if (kind != "stable" && kind != "diffusion")
        throw InputError("config: recipe.kind must be 'stable' or 'diffusion'");
    if (task == "simulate" && !seed_set)
        throw InputError("config: simulate requires an explicit seed");
    if (tol <= 0.0) throw InputError("config: tol must be > 0");
}

}  // namespace critforms

#include "conservd/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace conservd {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Json number(double v) {
    if (std::isfinite(v)) return Json(v);
    return Json(format_double(v));
}

Json vec_json(const Vec& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(number(x));
    return a;
}

namespace {

Json witnessed(const WitnessedValue& w) {
    Json j;
    j["value"] = number(w.value);
    j["point"] = vec_json(w.point);
    return j;
}

Json estimate(const Estimate& e) {
    Json j;
    j["value"] = number(e.value);
    j["std_error"] = number(e.std_error);
    return j;
}

const char* phi_kind_name(PhiKind k) {
    switch (k) {
    case PhiKind::log_power: return "log-power";
    case PhiKind::loglog: return "loglog";
    case PhiKind::quadratic: return "quadratic";
    }
    return "?";
}

}  // namespace

Json growth_table_json(const GrowthTable& t) {
    Json j;
    j["k0"] = number(t.k0);
    Json phi;
    phi["kind"] = phi_kind_name(t.phi.kind);
    phi["C"] = number(t.phi.C);
    if (t.phi.kind == PhiKind::log_power) phi["beta"] = number(t.phi.beta);
    phi["formula"] = t.phi.describe();
    j["phi"] = phi;
    Json rows = Json::array();
    for (const auto& r : t.rows) {
        Json row;
        row["n"] = r.n;
        row["a_n"] = witnessed(r.a);
        row["b_n"] = witnessed(r.b);
        row["c_n"] = witnessed(r.c);
        row["vol_n"] = estimate(r.vol);
        row["bnorm_n"] = estimate(r.bnorm);
        row["A_hat_n"] = number(r.a_hat);
        rows.push_back(row);
    }
    j["rows"] = rows;
    return j;
}

Json verdict_json(const CriterionVerdict& v) {
    Json j;
    j["criterion"] = v.criterion;
    j["verdict"] = verdict_name(v.verdict);
    Json c;
    for (const auto& [k, val] : v.constants) c[k] = number(val);
    j["constants"] = c;
    j["horizon"] = v.horizon;
    j["tolerance"] = number(v.tolerance);
    j["policy"] = v.policy;
    if (v.witness_point || v.witness_index) {
        Json w;
        if (v.witness_point) w["point"] = vec_json(*v.witness_point);
        if (v.witness_index) w["index"] = *v.witness_index;
        w["reason"] = v.witness_reason;
        j["witness"] = w;
    } else {
        j["witness"] = nullptr;
    }
    Json d;
    d["n"] = v.decay_n;
    d["log_q"] = vec_json(v.log_q);
    d["verdict"] = v.decay_verdict;
    j["decay"] = d;
    j["notes"] = v.notes;
    j["growth_exponent"] = number(fitted_growth_exponent(v.table));
    j["growth_table"] = growth_table_json(v.table);
    return j;
}

Json feller_json(const FellerResult& r) {
    Json j;
    j["policy"] = r.policy;
    j["h_monotone"] = r.h_monotone;
    j["max_dual_rel_diff"] = number(r.max_dual_rel_diff);
    for (const FellerSide* s : {&r.plus, &r.minus}) {
        Json side;
        side["verdict"] = side_verdict_name(s->verdict);
        side["slope"] = number(s->slope);
        side["spread"] = number(s->spread);
        side["L"] = vec_json(s->L);
        side["h"] = vec_json(s->h);
        side["Phi"] = vec_json(s->phi);
        side["Phi_alt"] = vec_json(s->phi_alt);
        j[s->sign > 0 ? "plus" : "minus"] = side;
    }
    Json g;
    g["x"] = vec_json(r.grid_x);
    g["h"] = vec_json(r.grid_h);
    j["grid"] = g;
    return j;
}

Json explosion_json(const ExplosionEstimate& e) {
    Json j;
    j["T"] = number(e.T);
    j["dt"] = number(e.dt);
    j["paths"] = e.paths;
    j["invalid_paths"] = e.invalid_paths;
    j["seed"] = e.seed;
    Json rungs = Json::array();
    for (const auto& r : e.rungs) {
        Json x;
        x["radius"] = number(r.radius);
        x["escaped"] = r.escaped;
        x["p"] = number(r.p);
        x["wilson_lo"] = number(r.lo);
        x["wilson_hi"] = number(r.hi);
        rungs.push_back(x);
    }
    j["rungs"] = rungs;
    j["reading"] = "finite-radius escape by the horizon; consistent with or in tension with a criterion, not a proof";
    return j;
}

Json problem_json(const Problem& p) {
    Json j;
    j["source"] = p.source;
    j["dimension"] = p.dim;
    j["mu_power"] = p.mu_power;
    j["A"] = p.a_text;
    j["B"] = p.b_text;
    j["phi"] = p.phi_text;
    j["rho"] = p.rho_text;
    j["k0"] = number(p.domain.k0);
    j["intrinsic_gauge"] = p.intrinsic_gauge;
    j["domain"] = p.domain.indicator ? (p.domain.closed ? "closed region" : "open region") : "whole space";
    return j;
}

std::string growth_csv(const CriterionVerdict& v) {
    std::ostringstream os;
    os << "n,a_n,b_n,c_n,vol_n,bnorm_n,A_hat_n,log_q_n\n";
    for (std::size_t k = 0; k < v.table.rows.size(); ++k) {
        const auto& r = v.table.rows[k];
        double lq = std::nan("");
        for (std::size_t i = 0; i < v.decay_n.size(); ++i)
            if (v.decay_n[i] == r.n) lq = v.log_q[i];
        os << r.n << ',' << format_double(r.a.value) << ',' << format_double(r.b.value) << ','
           << format_double(r.c.value) << ',' << format_double(r.vol.value) << ',' << format_double(r.bnorm.value)
           << ',' << format_double(r.a_hat) << ',' << format_double(lq) << '\n';
    }
    return os.str();
}

std::string feller_csv(const FellerResult& r) {
    std::ostringstream os;
    os << "side,L,h,Phi,Phi_alt\n";
    for (const FellerSide* s : {&r.plus, &r.minus})
        for (std::size_t k = 0; k < s->L.size(); ++k)
            os << (s->sign > 0 ? "plus" : "minus") << ',' << format_double(s->L[k]) << ',' << format_double(s->h[k])
               << ',' << format_double(s->phi[k]) << ',' << format_double(s->phi_alt[k]) << '\n';
    return os.str();
}

std::string explosion_csv(const ExplosionEstimate& e) {
    std::ostringstream os;
    os << "radius,escaped,p,lo,hi\n";
    for (const auto& r : e.rungs)
        os << format_double(r.radius) << ',' << r.escaped << ',' << format_double(r.p) << ',' << format_double(r.lo)
           << ',' << format_double(r.hi) << '\n';
    return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    f << text;
    if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        bool quoted = false;
        for (std::size_t k = 0; k < line.size(); ++k) {
            if (line[k] == '"') quoted = !quoted;
            if (line[k] == '#' && !quoted) {
                line.resize(k);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": unterminated section");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty section name");
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        std::string full = section.empty() ? key : section + "." + key;
        if (out.count(full)) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + full + "'");
        out[full] = trim(line.substr(eq + 1));
    }
    return out;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

// Splits on separators outside quotes and parentheses; strips quotes from items.
std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    bool quoted = false;
    for (char ch : s) {
        if (ch == '"') quoted = !quoted;
        else if (!quoted && ch == '(') ++depth;
        else if (!quoted && ch == ')') --depth;
        if (ch == sep && !quoted && depth == 0) {
            out.push_back(unquote(trim(cur)));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (quoted) throw ConfigError("unterminated quote in '" + s + "'");
    std::string last = trim(cur);
    if (!last.empty() || !out.empty()) out.push_back(unquote(last));
    return out;
}

double parse_double(const std::string& s, const std::string& what) {
    std::string t = unquote(trim(s));
    if (t.empty()) throw ConfigError(what + ": empty number");
    char* end = nullptr;
    double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) {
        // allow simple ratios such as 5/6
        std::size_t slash = t.find('/');
        if (slash != std::string::npos) {
            double a = parse_double(t.substr(0, slash), what), b = parse_double(t.substr(slash + 1), what);
            if (b == 0.0) throw ConfigError(what + ": division by zero");
            return a / b;
        }
        throw ConfigError(what + ": not a number '" + t + "'");
    }
    return v;
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    for (const auto& item : split_list(s)) out.push_back(parse_double(item, "list"));
    return out;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    for (const auto& item : split_list(s)) {
        double v = parse_double(item, "integer list");
        if (v != std::floor(v) || std::fabs(v) > 1e9) throw ConfigError("not an integer: '" + item + "'");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

}  // namespace conservd

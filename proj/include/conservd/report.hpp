#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "conservd/criteria.hpp"
#include "conservd/oracles.hpp"
#include "conservd/registry.hpp"

namespace conservd {

using Json = nlohmann::ordered_json;

constexpr int kReportVersion = 1;

// Non-finite doubles become the strings "inf", "-inf", "nan".
Json number(double v);
Json vec_json(const Vec& v);

Json verdict_json(const CriterionVerdict& v);
Json growth_table_json(const GrowthTable& t);
Json feller_json(const FellerResult& r);
Json explosion_json(const ExplosionEstimate& e);
Json problem_json(const Problem& p);

// n,a_n,b_n,c_n,vol_n,bnorm_n,A_hat_n,log_q_n
std::string growth_csv(const CriterionVerdict& v);
// side,L,h,Phi,Phi_alt
std::string feller_csv(const FellerResult& r);
// radius,escaped,p,lo,hi
std::string explosion_csv(const ExplosionEstimate& e);

std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& text);

// Flat key/value file with [sections]; keys are returned as "section.key".
// Values may be double-quoted; '#' starts a comment outside quotes.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> parse_config_file(const std::string& path);

std::vector<std::string> split_list(const std::string& s, char sep = ',');
std::vector<double> parse_double_list(const std::string& s);
std::vector<int> parse_int_list(const std::string& s);
double parse_double(const std::string& s, const std::string& what);

}  // namespace conservd

#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace conservd {

enum class NodeKind { constant, variable, negate, add, sub, mul, div, power, call, piecewise, compare };
enum class Func { exp, log, sqrt, abs, pow, min, max };
enum class CmpOp { lt, le, gt, ge, eq, ne };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    NodeKind kind = NodeKind::constant;
    double value = 0.0;   // constant
    int index = 0;        // variable, 1-based
    Func fn = Func::exp;  // call
    CmpOp op = CmpOp::lt; // compare
    std::vector<NodePtr> kids;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t pos, std::string expected)
        : std::runtime_error(msg), position(pos), expected(std::move(expected)) {}
    std::size_t position;
    std::string expected;
};

NodePtr make_constant(double v);
NodePtr make_variable(int index);
NodePtr make_unary(NodeKind kind, NodePtr a);
NodePtr make_binary(NodeKind kind, NodePtr a, NodePtr b);
NodePtr make_call(Func fn, std::vector<NodePtr> args);
NodePtr make_compare(CmpOp op, NodePtr a, NodePtr b);
NodePtr make_piecewise(NodePtr cond, NodePtr a, NodePtr b);

int func_arity(Func fn);
const char* func_name(Func fn);

// Throws ParseError on syntax errors, unknown identifiers and x_k with k > d.
NodePtr parse_expression(const std::string& text, int d);

// Fully parenthesised; parse_expression(print_expression(a), d) rebuilds an equal tree.
std::string print_expression(const NodePtr& n);

bool ast_equal(const NodePtr& a, const NodePtr& b);
int max_variable_index(const NodePtr& n);

// Each piecewise condition visited appends one bit to `branch`, so two points share
// a signature exactly when they take the same branches.
double evaluate(const Node& n, const double* x);
double evaluate(const Node& n, const double* x, std::uint64_t& branch);
bool has_piecewise(const Node& n);

}  // namespace conservd

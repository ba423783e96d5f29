#include "conservd/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <numbers>

namespace conservd {

namespace {

struct FuncEntry {
    const char* name;
    Func fn;
    int arity;
};

constexpr FuncEntry kFuncs[] = {
    {"exp", Func::exp, 1},  {"log", Func::log, 1}, {"sqrt", Func::sqrt, 1}, {"abs", Func::abs, 1},
    {"pow", Func::pow, 2},  {"min", Func::min, 2}, {"max", Func::max, 2},
};

class Parser {
public:
    Parser(const std::string& text, int d) : s_(text), d_(d) {}

    NodePtr run() {
        NodePtr e = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected trailing input", "end of input");
        return e;
    }

private:
    const std::string& s_;
    int d_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what, const std::string& expected) const {
        throw ParseError("parse error at position " + std::to_string(pos_) + ": " + what + " (expected " +
                             expected + ")",
                         pos_, expected);
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool peek(char c) {
        skip();
        return pos_ < s_.size() && s_[pos_] == c;
    }

    bool accept(char c) {
        if (peek(c)) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) fail(pos_ < s_.size() ? std::string("found '") + s_[pos_] + "'" : "end of input",
                             std::string("'") + c + "'");
    }

    NodePtr expr() {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+')) lhs = make_binary(NodeKind::add, lhs, term());
            else if (accept('-')) lhs = make_binary(NodeKind::sub, lhs, term());
            else return lhs;
        }
    }

    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*')) lhs = make_binary(NodeKind::mul, lhs, unary());
            else if (accept('/')) lhs = make_binary(NodeKind::div, lhs, unary());
            else return lhs;
        }
    }

    NodePtr unary() {
        if (accept('-')) return make_unary(NodeKind::negate, unary());
        if (accept('+')) return unary();
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (accept('^')) return make_binary(NodeKind::power, base, unary());
        return base;
    }

    NodePtr number() {
        const char* begin = s_.c_str() + pos_;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) fail("malformed number", "number");
        pos_ += static_cast<std::size_t>(end - begin);
        return make_constant(v);
    }

    std::string identifier() {
        std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
        return s_.substr(start, pos_ - start);
    }

    NodePtr condition() {
        NodePtr lhs = expr();
        skip();
        CmpOp op;
        auto two = [&](const char* t) { return s_.compare(pos_, 2, t) == 0; };
        if (two("<=")) op = CmpOp::le, pos_ += 2;
        else if (two(">=")) op = CmpOp::ge, pos_ += 2;
        else if (two("==")) op = CmpOp::eq, pos_ += 2;
        else if (two("!=")) op = CmpOp::ne, pos_ += 2;
        else if (accept('<')) op = CmpOp::lt;
        else if (accept('>')) op = CmpOp::gt;
        else fail("missing comparison in piecewise condition", "comparison operator");
        return make_compare(op, lhs, expr());
    }

    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of input", "operand");
        char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (c == '(') {
            ++pos_;
            NodePtr e = expr();
            expect(')');
            return e;
        }
        if (!std::isalpha(static_cast<unsigned char>(c))) fail(std::string("found '") + c + "'", "operand");
        std::size_t start = pos_;
        std::string id = identifier();
        if (id.size() >= 2 && id[0] == 'x' &&
            id.find_first_not_of("0123456789", 1) == std::string::npos) {
            int k = std::atoi(id.c_str() + 1);
            if (k < 1 || k > d_) {
                pos_ = start;
                fail("variable " + id + " outside dimension " + std::to_string(d_),
                     "x1..x" + std::to_string(d_));
            }
            return make_variable(k);
        }
        if (id == "pi") return make_constant(std::numbers::pi);
        if (id == "piecewise") {
            expect('(');
            NodePtr cond = condition();
            expect('?');
            NodePtr a = expr();
            expect(':');
            NodePtr b = expr();
            expect(')');
            return make_piecewise(cond, a, b);
        }
        for (const auto& f : kFuncs) {
            if (id != f.name) continue;
            expect('(');
            std::vector<NodePtr> args;
            args.push_back(expr());
            for (int i = 1; i < f.arity; ++i) {
                expect(',');
                args.push_back(expr());
            }
            expect(')');
            return make_call(f.fn, std::move(args));
        }
        pos_ = start;
        fail("unknown identifier '" + id + "'", "variable, function or constant");
    }
};

void print_into(const Node& n, std::string& out) {
    switch (n.kind) {
    case NodeKind::constant: {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", n.value);
        out += buf;
        return;
    }
    case NodeKind::variable:
        out += "x" + std::to_string(n.index);
        return;
    case NodeKind::negate:
        out += "(-";
        print_into(*n.kids[0], out);
        out += ")";
        return;
    case NodeKind::call:
        out += func_name(n.fn);
        out += "(";
        for (std::size_t i = 0; i < n.kids.size(); ++i) {
            if (i) out += ", ";
            print_into(*n.kids[i], out);
        }
        out += ")";
        return;
    case NodeKind::piecewise:
        out += "piecewise(";
        print_into(*n.kids[0], out);
        out += " ? ";
        print_into(*n.kids[1], out);
        out += " : ";
        print_into(*n.kids[2], out);
        out += ")";
        return;
    case NodeKind::compare: {
        static const char* ops[] = {"<", "<=", ">", ">=", "==", "!="};
        print_into(*n.kids[0], out);
        out += " ";
        out += ops[static_cast<int>(n.op)];
        out += " ";
        print_into(*n.kids[1], out);
        return;
    }
    default: {
        static const char* ops[] = {"", "", "", " + ", " - ", " * ", " / ", " ^ "};
        out += "(";
        print_into(*n.kids[0], out);
        out += ops[static_cast<int>(n.kind)];
        print_into(*n.kids[1], out);
        out += ")";
        return;
    }
    }
}

bool compare_holds(CmpOp op, double a, double b) {
    switch (op) {
    case CmpOp::lt: return a < b;
    case CmpOp::le: return a <= b;
    case CmpOp::gt: return a > b;
    case CmpOp::ge: return a >= b;
    case CmpOp::eq: return a == b;
    case CmpOp::ne: return a != b;
    }
    return false;
}

template <bool Track>
double eval_impl(const Node& n, const double* x, std::uint64_t& branch) {
    switch (n.kind) {
    case NodeKind::constant: return n.value;
    case NodeKind::variable: return x[n.index - 1];
    case NodeKind::negate: return -eval_impl<Track>(*n.kids[0], x, branch);
    case NodeKind::add: return eval_impl<Track>(*n.kids[0], x, branch) + eval_impl<Track>(*n.kids[1], x, branch);
    case NodeKind::sub: return eval_impl<Track>(*n.kids[0], x, branch) - eval_impl<Track>(*n.kids[1], x, branch);
    case NodeKind::mul: return eval_impl<Track>(*n.kids[0], x, branch) * eval_impl<Track>(*n.kids[1], x, branch);
    case NodeKind::div: return eval_impl<Track>(*n.kids[0], x, branch) / eval_impl<Track>(*n.kids[1], x, branch);
    case NodeKind::power: {
        double a = eval_impl<Track>(*n.kids[0], x, branch);
        const Node& e = *n.kids[1];
        if (e.kind == NodeKind::constant && e.value == 2.0) return a * a;
        return std::pow(a, eval_impl<Track>(e, x, branch));
    }
    case NodeKind::call: {
        double a = eval_impl<Track>(*n.kids[0], x, branch);
        switch (n.fn) {
        case Func::exp: return std::exp(a);
        case Func::log: return std::log(a);
        case Func::sqrt: return std::sqrt(a);
        case Func::abs: return std::fabs(a);
        case Func::pow: return std::pow(a, eval_impl<Track>(*n.kids[1], x, branch));
        case Func::min: return std::fmin(a, eval_impl<Track>(*n.kids[1], x, branch));
        case Func::max: return std::fmax(a, eval_impl<Track>(*n.kids[1], x, branch));
        }
        return 0.0;
    }
    case NodeKind::piecewise: {
        const Node& c = *n.kids[0];
        bool holds = compare_holds(c.op, eval_impl<Track>(*c.kids[0], x, branch),
                                   eval_impl<Track>(*c.kids[1], x, branch));
        if constexpr (Track) branch = branch * 3 + (holds ? 1 : 2);
        return eval_impl<Track>(*n.kids[holds ? 1 : 2], x, branch);
    }
    case NodeKind::compare:
        return compare_holds(n.op, eval_impl<Track>(*n.kids[0], x, branch), eval_impl<Track>(*n.kids[1], x, branch))
                   ? 1.0
                   : 0.0;
    }
    return 0.0;
}

}  // namespace

NodePtr make_constant(double v) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::constant;
    n->value = v;
    return n;
}

NodePtr make_variable(int index) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::variable;
    n->index = index;
    return n;
}

NodePtr make_unary(NodeKind kind, NodePtr a) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->kids = {std::move(a)};
    return n;
}

NodePtr make_binary(NodeKind kind, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->kids = {std::move(a), std::move(b)};
    return n;
}

NodePtr make_call(Func fn, std::vector<NodePtr> args) {
    if (static_cast<int>(args.size()) != func_arity(fn))
        throw std::invalid_argument(std::string("wrong arity for ") + func_name(fn));
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::call;
    n->fn = fn;
    n->kids = std::move(args);
    return n;
}

NodePtr make_compare(CmpOp op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::compare;
    n->op = op;
    n->kids = {std::move(a), std::move(b)};
    return n;
}

NodePtr make_piecewise(NodePtr cond, NodePtr a, NodePtr b) {
    if (cond->kind != NodeKind::compare) throw std::invalid_argument("piecewise condition must be a comparison");
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::piecewise;
    n->kids = {std::move(cond), std::move(a), std::move(b)};
    return n;
}

int func_arity(Func fn) {
    for (const auto& f : kFuncs)
        if (f.fn == fn) return f.arity;
    return 1;
}

const char* func_name(Func fn) {
    for (const auto& f : kFuncs)
        if (f.fn == fn) return f.name;
    return "?";
}

NodePtr parse_expression(const std::string& text, int d) {
    if (d < 1) throw std::invalid_argument("dimension must be positive");
    return Parser(text, d).run();
}

std::string print_expression(const NodePtr& n) {
    std::string out;
    print_into(*n, out);
    return out;
}

bool ast_equal(const NodePtr& a, const NodePtr& b) {
    if (a->kind != b->kind || a->kids.size() != b->kids.size()) return false;
    switch (a->kind) {
    case NodeKind::constant:
        if (std::memcmp(&a->value, &b->value, sizeof(double)) != 0) return false;
        break;
    case NodeKind::variable:
        if (a->index != b->index) return false;
        break;
    case NodeKind::call:
        if (a->fn != b->fn) return false;
        break;
    case NodeKind::compare:
        if (a->op != b->op) return false;
        break;
    default: break;
    }
    for (std::size_t i = 0; i < a->kids.size(); ++i)
        if (!ast_equal(a->kids[i], b->kids[i])) return false;
    return true;
}

int max_variable_index(const NodePtr& n) {
    int m = n->kind == NodeKind::variable ? n->index : 0;
    for (const auto& k : n->kids) m = std::max(m, max_variable_index(k));
    return m;
}

double evaluate(const Node& n, const double* x) {
    std::uint64_t unused = 0;
    return eval_impl<false>(n, x, unused);
}

double evaluate(const Node& n, const double* x, std::uint64_t& branch) {
    return eval_impl<true>(n, x, branch);
}

bool has_piecewise(const Node& n) {
    if (n.kind == NodeKind::piecewise) return true;
    for (const auto& k : n.kids)
        if (has_piecewise(*k)) return true;
    return false;
}

}  // namespace conservd

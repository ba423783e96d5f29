#pragma once

#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "conservd/expr.hpp"
#include "conservd/field.hpp"

namespace conservd::testgen {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "(%.17g)", v);
    return buf;
}

// Random trees over every node kind; constants stay nonnegative since the parser
// reads a leading minus as negation.
inline NodePtr random_tree(std::mt19937_64& rng, int d, int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 9);
    std::uniform_real_distribution<double> val(0.0, 10.0);
    switch (pick(rng)) {
    case 0: return make_constant(std::round(val(rng) * 1000.0) / 1000.0 + (rng() % 7 == 0 ? 1e-9 : 0.0));
    case 1: return make_variable(1 + static_cast<int>(rng() % static_cast<unsigned>(d)));
    case 2: return make_unary(NodeKind::negate, random_tree(rng, d, depth - 1));
    case 3:
    case 4: {
        static const NodeKind k[] = {NodeKind::add, NodeKind::sub, NodeKind::mul, NodeKind::div, NodeKind::power};
        return make_binary(k[rng() % 5], random_tree(rng, d, depth - 1), random_tree(rng, d, depth - 1));
    }
    case 5:
    case 6: {
        static const Func f[] = {Func::exp, Func::log, Func::sqrt, Func::abs, Func::pow, Func::min, Func::max};
        Func fn = f[rng() % 7];
        std::vector<NodePtr> args;
        for (int i = 0; i < func_arity(fn); ++i) args.push_back(random_tree(rng, d, depth - 1));
        return make_call(fn, std::move(args));
    }
    case 7: {
        CmpOp op = static_cast<CmpOp>(rng() % 6);
        return make_piecewise(make_compare(op, random_tree(rng, d, depth - 1), random_tree(rng, d, depth - 1)),
                              random_tree(rng, d, depth - 1), random_tree(rng, d, depth - 1));
    }
    default: return make_binary(NodeKind::add, random_tree(rng, d, depth - 1), random_tree(rng, d, depth - 1));
    }
}

// Stream-function field (1/phi^p)(d2 h, -d1 h) for a random cubic h and a random positive phi.
struct StreamField {
    VectorField b;
    ScalarField phi;
    int mu_power;
};

inline StreamField random_stream_field(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coef(-1.0, 1.0), pos(0.1, 1.0);
    std::string d1, d2;
    for (int i = 0; i <= 3; ++i)
        for (int j = 0; i + j <= 3; ++j) {
            double c = coef(rng);
            if (i > 0) d1 += " + " + num(c * i) + " * x1^" + std::to_string(i - 1) + " * x2^" + std::to_string(j);
            if (j > 0) d2 += " + " + num(c * j) + " * x1^" + std::to_string(i) + " * x2^" + std::to_string(j - 1);
        }
    std::string phi = "1 + " + num(pos(rng)) + " * x1^2 + " + num(pos(rng)) + " * x2^2";
    int p = 1 + static_cast<int>(seed % 2);
    std::string w = p == 1 ? "(" + phi + ")" : "(" + phi + ")^2";
    StreamField f;
    f.b = vector_from_expressions({"(0" + d2 + ") / " + w, "-(0" + d1 + ") / " + w}, 2);
    f.phi = expression_field(phi, 2);
    f.mu_power = p;
    return f;
}

// Positive weight on the plane for measure additivity checks.
inline std::string random_weight(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.1, 2.0);
    char buf[200];
    std::snprintf(buf, sizeof buf, "%.6f + %.6f * abs(x1)^%.3f + %.6f * exp(-x2^2 / %.3f)", u(rng), u(rng), u(rng),
                  u(rng), u(rng) * 10.0);
    return buf;
}

}  // namespace conservd::testgen

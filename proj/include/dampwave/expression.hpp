#pragma once

// Small arithmetic expression language for coefficient profiles a(x, y) and
// b(x, y). Grammar (see docs/expressions.md):
//
//   expr       := disjunction
//   disjunction:= conjunction ( "||" conjunction )*
//   conjunction:= comparison ( "&&" comparison )*
//   comparison := sum ( ("<"|"<="|">"|">="|"=="|"!=") sum )?
//   sum        := product ( ("+"|"-") product )*
//   product    := unary ( ("*"|"/") unary )*
//   unary      := ("-"|"+"|"!") unary | power
//   power      := primary ( "^" unary )?
//   primary    := number | identifier | identifier "(" args ")" | "(" expr ")"
//
// Comparisons and logical operators yield 1.0 or 0.0.

#include <cctype>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "dampwave/error.hpp"

namespace dampwave {

class Expression {
public:
    struct Node;
    using NodePtr = std::shared_ptr<const Node>;

    enum class Op {
        Constant, VarX, VarY,
        Add, Sub, Mul, Div, Pow, Neg, Not,
        Less, LessEq, Greater, GreaterEq, Equal, NotEqual, And, Or,
        Call, If,
    };

    struct Node {
        Op op = Op::Constant;
        double value = 0.0;
        double (*fn1)(double) = nullptr;
        double (*fn2)(double, double) = nullptr;
        std::vector<NodePtr> args;
    };

    static Expression parse(std::string_view source);
    static Expression constant(double v);

    double operator()(double x, double y = 0.0) const { return eval(*root_, x, y); }

    const std::string& source() const noexcept { return source_; }
    bool uses_y() const noexcept { return uses_y_; }
    bool is_constant() const noexcept { return !uses_x_ && !uses_y_; }

private:
    static double eval(const Node& n, double x, double y);

    std::string source_;
    NodePtr root_;
    bool uses_x_ = false;
    bool uses_y_ = false;

    friend class ExpressionParser;
};

namespace detail {

inline double fn_sign(double v) { return (v > 0.0) - (v < 0.0); }
inline double fn_sech(double v) { return 1.0 / std::cosh(v); }
inline double fn_min(double a, double b) { return std::fmin(a, b); }
inline double fn_max(double a, double b) { return std::fmax(a, b); }
inline double fn_abs(double v) { return std::fabs(v); }
inline double fn_exp(double v) { return std::exp(v); }
inline double fn_log(double v) { return std::log(v); }
inline double fn_sqrt(double v) { return std::sqrt(v); }
inline double fn_sin(double v) { return std::sin(v); }
inline double fn_cos(double v) { return std::cos(v); }
inline double fn_tanh(double v) { return std::tanh(v); }
inline double fn_cosh(double v) { return std::cosh(v); }

struct Token {
    enum class Kind { Number, Ident, Symbol, End } kind = Kind::End;
    std::string text;
    double number = 0.0;
    int column = 0;
};

inline std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const char c = s[i];
        const int col = static_cast<int>(i) + 1;
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t j = i;
            while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.')) ++j;
            if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
                if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
                    j = k;
                    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
                }
            }
            std::string text(s.substr(i, j - i));
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(text, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != text.size()) throw ParseError("malformed number", text, col);
            out.push_back({Token::Kind::Number, text, v, col});
            i = j;
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
            out.push_back({Token::Kind::Ident, std::string(s.substr(i, j - i)), 0.0, col});
            i = j;
            continue;
        }
        static constexpr std::string_view two[] = {"<=", ">=", "==", "!=", "&&", "||"};
        bool matched = false;
        for (auto t : two) {
            if (s.substr(i, 2) == t) {
                out.push_back({Token::Kind::Symbol, std::string(t), 0.0, col});
                i += 2;
                matched = true;
                break;
            }
        }
        if (matched) continue;
        static constexpr std::string_view one = "+-*/^(),<>!";
        if (one.find(c) != std::string_view::npos) {
            out.push_back({Token::Kind::Symbol, std::string(1, c), 0.0, col});
            ++i;
            continue;
        }
        throw ParseError("unexpected character", std::string(1, c), col);
    }
    out.push_back({Token::Kind::End, "<end>", 0.0, static_cast<int>(s.size()) + 1});
    return out;
}

}  // namespace detail

class ExpressionParser {
public:
    explicit ExpressionParser(std::string_view src) : tokens_(detail::tokenize(src)) {}

    Expression run(std::string_view src) {
        Expression e;
        e.source_ = std::string(src);
        e.root_ = disjunction();
        if (peek().kind != detail::Token::Kind::End) fail("unexpected token");
        e.uses_x_ = uses_x_;
        e.uses_y_ = uses_y_;
        return e;
    }

private:
    using Node = Expression::Node;
    using NodePtr = Expression::NodePtr;
    using Op = Expression::Op;

    const detail::Token& peek() const { return tokens_[pos_]; }
    const detail::Token& next() { return tokens_[pos_++]; }

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(what, peek().text, peek().column);
    }

    bool accept(std::string_view sym) {
        if (peek().kind == detail::Token::Kind::Symbol && peek().text == sym) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(std::string_view sym) {
        if (!accept(sym)) fail("expected '" + std::string(sym) + "'");
    }

    static NodePtr make(Op op, std::vector<NodePtr> args) {
        auto n = std::make_shared<Node>();
        n->op = op;
        n->args = std::move(args);
        return n;
    }

    NodePtr disjunction() {
        auto lhs = conjunction();
        while (accept("||")) lhs = make(Op::Or, {lhs, conjunction()});
        return lhs;
    }

    NodePtr conjunction() {
        auto lhs = comparison();
        while (accept("&&")) lhs = make(Op::And, {lhs, comparison()});
        return lhs;
    }

    NodePtr comparison() {
        auto lhs = sum();
        static const std::pair<std::string_view, Op> ops[] = {
            {"<=", Op::LessEq}, {">=", Op::GreaterEq}, {"==", Op::Equal},
            {"!=", Op::NotEqual}, {"<", Op::Less}, {">", Op::Greater}};
        for (const auto& [sym, op] : ops) {
            if (accept(sym)) return make(op, {lhs, sum()});
        }
        return lhs;
    }

    NodePtr sum() {
        auto lhs = product();
        for (;;) {
            if (accept("+")) lhs = make(Op::Add, {lhs, product()});
            else if (accept("-")) lhs = make(Op::Sub, {lhs, product()});
            else return lhs;
        }
    }

    NodePtr product() {
        auto lhs = unary();
        for (;;) {
            if (accept("*")) lhs = make(Op::Mul, {lhs, unary()});
            else if (accept("/")) lhs = make(Op::Div, {lhs, unary()});
            else return lhs;
        }
    }

    NodePtr unary() {
        if (accept("-")) return make(Op::Neg, {unary()});
        if (accept("+")) return unary();
        if (accept("!")) return make(Op::Not, {unary()});
        return power();
    }

    NodePtr power() {
        auto base = primary();
        if (accept("^")) return make(Op::Pow, {base, unary()});
        return base;
    }

    NodePtr primary() {
        const auto& tok = peek();
        if (tok.kind == detail::Token::Kind::Number) {
            next();
            auto n = std::make_shared<Node>();
            n->op = Op::Constant;
            n->value = tok.number;
            return n;
        }
        if (accept("(")) {
            auto inner = disjunction();
            expect(")");
            return inner;
        }
        if (tok.kind != detail::Token::Kind::Ident) fail("unexpected token");

        const std::string name = next().text;
        if (peek().kind == detail::Token::Kind::Symbol && peek().text == "(") {
            return call(name);
        }
        auto n = std::make_shared<Node>();
        if (name == "x") {
            n->op = Op::VarX;
            uses_x_ = true;
        } else if (name == "y") {
            n->op = Op::VarY;
            uses_y_ = true;
        } else if (name == "pi") {
            n->value = std::numbers::pi;
        } else if (name == "e") {
            n->value = std::numbers::e;
        } else {
            --pos_;
            fail("unknown identifier");
        }
        return n;
    }

    NodePtr call(const std::string& name) {
        const std::size_t name_pos = pos_ - 1;
        expect("(");
        std::vector<NodePtr> args;
        if (!accept(")")) {
            do {
                args.push_back(disjunction());
            } while (accept(","));
            expect(")");
        }
        auto n = std::make_shared<Node>();
        n->args = std::move(args);
        auto arity = [&](std::size_t want) {
            if (n->args.size() != want) {
                pos_ = name_pos;
                fail("function '" + name + "' expects " + std::to_string(want) + " argument(s)");
            }
        };

        static const std::pair<std::string_view, double (*)(double)> unary_fns[] = {
            {"abs", detail::fn_abs}, {"exp", detail::fn_exp}, {"log", detail::fn_log},
            {"sqrt", detail::fn_sqrt}, {"sin", detail::fn_sin}, {"cos", detail::fn_cos},
            {"tanh", detail::fn_tanh}, {"cosh", detail::fn_cosh}, {"sech", detail::fn_sech},
            {"sign", detail::fn_sign}};
        for (const auto& [fname, fn] : unary_fns) {
            if (name == fname) {
                arity(1);
                n->op = Op::Call;
                n->fn1 = fn;
                return n;
            }
        }
        if (name == "min" || name == "max") {
            arity(2);
            n->op = Op::Call;
            n->fn2 = name == "min" ? detail::fn_min : detail::fn_max;
            return n;
        }
        if (name == "if") {
            arity(3);
            n->op = Op::If;
            return n;
        }
        pos_ = name_pos;
        fail("unknown function");
    }

    std::vector<detail::Token> tokens_;
    std::size_t pos_ = 0;
    bool uses_x_ = false;
    bool uses_y_ = false;
};

inline Expression Expression::parse(std::string_view source) {
    return ExpressionParser(source).run(source);
}

inline Expression Expression::constant(double v) {
    Expression e;
    auto n = std::make_shared<Node>();
    n->value = v;
    e.root_ = n;
    e.source_ = std::to_string(v);
    return e;
}

inline double Expression::eval(const Node& n, double x, double y) {
    auto arg = [&](std::size_t i) { return eval(*n.args[i], x, y); };
    switch (n.op) {
        case Op::Constant: return n.value;
        case Op::VarX: return x;
        case Op::VarY: return y;
        case Op::Add: return arg(0) + arg(1);
        case Op::Sub: return arg(0) - arg(1);
        case Op::Mul: return arg(0) * arg(1);
        case Op::Div: return arg(0) / arg(1);
        case Op::Pow: return std::pow(arg(0), arg(1));
        case Op::Neg: return -arg(0);
        case Op::Not: return arg(0) == 0.0 ? 1.0 : 0.0;
        case Op::Less: return arg(0) < arg(1) ? 1.0 : 0.0;
        case Op::LessEq: return arg(0) <= arg(1) ? 1.0 : 0.0;
        case Op::Greater: return arg(0) > arg(1) ? 1.0 : 0.0;
        case Op::GreaterEq: return arg(0) >= arg(1) ? 1.0 : 0.0;
        case Op::Equal: return arg(0) == arg(1) ? 1.0 : 0.0;
        case Op::NotEqual: return arg(0) != arg(1) ? 1.0 : 0.0;
        case Op::And: return (arg(0) != 0.0 && arg(1) != 0.0) ? 1.0 : 0.0;
        case Op::Or: return (arg(0) != 0.0 || arg(1) != 0.0) ? 1.0 : 0.0;
        case Op::Call: return n.fn1 ? n.fn1(arg(0)) : n.fn2(arg(0), arg(1));
        case Op::If: return arg(0) != 0.0 ? arg(1) : arg(2);
    }
    return 0.0;
}

// Evaluates a constant expression such as "pi" or "2*pi/3".
inline double evaluate_constant(std::string_view source) {
    const auto e = Expression::parse(source);
    if (!e.is_constant()) throw ConfigError("expected a constant expression, got '" + std::string(source) + "'");
    return e(0.0, 0.0);
}

}  // namespace dampwave

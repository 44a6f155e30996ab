#pragma once

// Arithmetic expression DSL used to write vector-field components.
//
// Grammar (precedence from loosest to tightest):
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?          right-associative, integer constant exponent
//   atom   := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//
// Expressions are immutable once parsed and may be shared between threads.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pavg {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, int line, int column)
        : std::runtime_error(what + " at line " + std::to_string(line) + ", column " +
                             std::to_string(column)),
          line_(line), column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

/// Raised for unbound variables and domain errors (log of nonpositive, sqrt of
/// negative, division by zero, non-finite results).
class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class BinaryOp { Add, Sub, Mul, Div };

enum class Func { Sin, Cos, Tan, Exp, Log, Sqrt, Cbrt, Abs, Sign, Pow, Min, Max };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    struct Constant { double value; };
    struct Variable { std::string name; };
    struct Negate { NodePtr operand; };
    struct Binary { BinaryOp op; NodePtr lhs; NodePtr rhs; };
    struct Power { NodePtr base; std::int64_t exponent; };
    struct Call { Func fn; std::vector<NodePtr> args; };

    std::variant<Constant, Variable, Negate, Binary, Power, Call> data;
};

namespace detail {

struct FuncInfo {
    const char* name;
    Func fn;
    int min_args;
    int max_args;  // -1: unbounded
};

inline constexpr std::array<FuncInfo, 12> kFunctions{{
    {"sin", Func::Sin, 1, 1},   {"cos", Func::Cos, 1, 1},   {"tan", Func::Tan, 1, 1},
    {"exp", Func::Exp, 1, 1},   {"log", Func::Log, 1, 1},   {"sqrt", Func::Sqrt, 1, 1},
    {"cbrt", Func::Cbrt, 1, 1}, {"abs", Func::Abs, 1, 1},   {"sign", Func::Sign, 1, 1},
    {"pow", Func::Pow, 2, 2},   {"min", Func::Min, 2, -1},  {"max", Func::Max, 2, -1},
}};

inline const FuncInfo* find_function(std::string_view name) {
    for (const auto& f : kFunctions)
        if (name == f.name) return &f;
    return nullptr;
}

inline const char* function_name(Func fn) {
    for (const auto& f : kFunctions)
        if (f.fn == fn) return f.name;
    return "?";
}

inline NodePtr make(Node::Constant c) { return std::make_shared<const Node>(Node{c}); }
inline NodePtr make(Node::Variable v) { return std::make_shared<const Node>(Node{std::move(v)}); }
inline NodePtr make(Node::Negate v) { return std::make_shared<const Node>(Node{std::move(v)}); }
inline NodePtr make(Node::Binary v) { return std::make_shared<const Node>(Node{std::move(v)}); }
inline NodePtr make(Node::Power v) { return std::make_shared<const Node>(Node{std::move(v)}); }
inline NodePtr make(Node::Call v) { return std::make_shared<const Node>(Node{std::move(v)}); }

// Shortest decimal text that reads back to exactly the same double.
inline std::string format_number(double v) {
    char buf[40];
    for (int digits = 15; digits <= 17; ++digits) {
        std::snprintf(buf, sizeof buf, "%.*g", digits, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

}  // namespace detail

/// Immutable handle to a parsed expression tree.
class Expression {
public:
    Expression() : root_(detail::make(Node::Constant{0.0})) {}
    explicit Expression(NodePtr root) : root_(std::move(root)) {}

    static Expression constant(double v) { return Expression(detail::make(Node::Constant{v})); }
    static Expression variable(std::string name) {
        return Expression(detail::make(Node::Variable{std::move(name)}));
    }

    const Node& root() const noexcept { return *root_; }
    const NodePtr& node() const noexcept { return root_; }

    bool is_zero_constant() const {
        const auto* c = std::get_if<Node::Constant>(&root_->data);
        return c != nullptr && c->value == 0.0;
    }

private:
    NodePtr root_;
};

inline bool structurally_equal(const Node& a, const Node& b) {
    if (a.data.index() != b.data.index()) return false;
    return std::visit(
        [&](const auto& lhs) -> bool {
            using T = std::decay_t<decltype(lhs)>;
            const auto& rhs = std::get<T>(b.data);
            if constexpr (std::is_same_v<T, Node::Constant>) {
                return lhs.value == rhs.value;
            } else if constexpr (std::is_same_v<T, Node::Variable>) {
                return lhs.name == rhs.name;
            } else if constexpr (std::is_same_v<T, Node::Negate>) {
                return structurally_equal(*lhs.operand, *rhs.operand);
            } else if constexpr (std::is_same_v<T, Node::Binary>) {
                return lhs.op == rhs.op && structurally_equal(*lhs.lhs, *rhs.lhs) &&
                       structurally_equal(*lhs.rhs, *rhs.rhs);
            } else if constexpr (std::is_same_v<T, Node::Power>) {
                return lhs.exponent == rhs.exponent && structurally_equal(*lhs.base, *rhs.base);
            } else {
                if (lhs.fn != rhs.fn || lhs.args.size() != rhs.args.size()) return false;
                for (std::size_t i = 0; i < lhs.args.size(); ++i)
                    if (!structurally_equal(*lhs.args[i], *rhs.args[i])) return false;
                return true;
            }
        },
        a.data);
}

inline bool operator==(const Expression& a, const Expression& b) {
    return structurally_equal(a.root(), b.root());
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace detail {

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    NodePtr parse_all() {
        skip_ws();
        if (at_end()) fail("empty expression");
        NodePtr e = parse_expr();
        skip_ws();
        if (!at_end()) {
            if (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' ||
                peek() == '.' || peek() == '(')
                fail(std::string("unexpected '") + peek() +
                     "' (implicit multiplication is not allowed)");
            fail(std::string("unexpected '") + peek() + "'");
        }
        return e;
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;

    bool at_end() const { return pos_ >= src_.size(); }
    char peek() const { return at_end() ? '\0' : src_[pos_]; }

    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_ws() {
        while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) advance();
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, col_); }
    [[noreturn]] void fail_at(const std::string& msg, int line, int col) const {
        throw ParseError(msg, line, col);
    }

    bool accept(char c) {
        skip_ws();
        if (peek() == c) {
            advance();
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) {
            if (at_end()) fail(std::string("expected '") + c + "' but reached end of input");
            fail(std::string("expected '") + c + "' but found '" + peek() + "'");
        }
    }

    NodePtr parse_expr() {
        NodePtr lhs = parse_term();
        for (;;) {
            if (accept('+'))
                lhs = make(Node::Binary{BinaryOp::Add, lhs, parse_term()});
            else if (accept('-'))
                lhs = make(Node::Binary{BinaryOp::Sub, lhs, parse_term()});
            else
                return lhs;
        }
    }

    NodePtr parse_term() {
        NodePtr lhs = parse_unary();
        for (;;) {
            if (accept('*'))
                lhs = make(Node::Binary{BinaryOp::Mul, lhs, parse_unary()});
            else if (accept('/'))
                lhs = make(Node::Binary{BinaryOp::Div, lhs, parse_unary()});
            else
                return lhs;
        }
    }

    NodePtr parse_unary() {
        if (accept('-')) return make(Node::Negate{parse_unary()});
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_atom();
        skip_ws();
        if (peek() != '^') return base;
        const int line = line_, col = col_;
        advance();
        NodePtr exponent = parse_unary();
        return make(Node::Power{base, integer_exponent(*exponent, line, col)});
    }

    // The exponent must fold to an integer constant.
    std::int64_t integer_exponent(const Node& e, int line, int col) const {
        const double v = fold_constant(e, line, col);
        if (!std::isfinite(v) || v != std::floor(v) || std::abs(v) > 1e15)
            fail_at("non-integer exponent on '^'", line, col);
        return static_cast<std::int64_t>(v);
    }

    double fold_constant(const Node& e, int line, int col) const {
        if (const auto* c = std::get_if<Node::Constant>(&e.data)) return c->value;
        if (const auto* n = std::get_if<Node::Negate>(&e.data))
            return -fold_constant(*n->operand, line, col);
        if (const auto* p = std::get_if<Node::Power>(&e.data))
            return std::pow(fold_constant(*p->base, line, col), static_cast<double>(p->exponent));
        if (const auto* b = std::get_if<Node::Binary>(&e.data)) {
            const double l = fold_constant(*b->lhs, line, col), r = fold_constant(*b->rhs, line, col);
            switch (b->op) {
                case BinaryOp::Add: return l + r;
                case BinaryOp::Sub: return l - r;
                case BinaryOp::Mul: return l * r;
                case BinaryOp::Div: return l / r;
            }
        }
        fail_at("exponent on '^' must be an integer constant", line, col);
    }

    NodePtr parse_atom() {
        skip_ws();
        if (at_end()) fail("unexpected end of input");
        const char c = peek();
        if (c == '(') {
            advance();
            NodePtr e = parse_expr();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_name();
        fail(std::string("unexpected '") + c + "'");
    }

    NodePtr parse_number() {
        const int line = line_, col = col_;
        const std::size_t start = pos_;
        bool digits = false;
        while (std::isdigit(static_cast<unsigned char>(peek()))) {
            advance();
            digits = true;
        }
        if (peek() == '.') {
            advance();
            while (std::isdigit(static_cast<unsigned char>(peek()))) {
                advance();
                digits = true;
            }
        }
        if (!digits) fail_at("malformed number", line, col);
        if (peek() == 'e' || peek() == 'E') {
            advance();
            if (peek() == '+' || peek() == '-') advance();
            if (!std::isdigit(static_cast<unsigned char>(peek())))
                fail("malformed exponent in number");
            while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
        }
        const std::string text(src_.substr(start, pos_ - start));
        const double v = std::strtod(text.c_str(), nullptr);
        if (!std::isfinite(v)) fail_at("number out of range", line, col);
        return make(Node::Constant{v});
    }

    NodePtr parse_name() {
        const int line = line_, col = col_;
        const std::size_t start = pos_;
        while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') advance();
        std::string name(src_.substr(start, pos_ - start));
        skip_ws();
        if (peek() != '(') return make(Node::Variable{std::move(name)});

        const FuncInfo* info = find_function(name);
        if (info == nullptr) fail_at("unknown function '" + name + "'", line, col);
        advance();
        std::vector<NodePtr> args;
        args.push_back(parse_expr());
        while (accept(',')) args.push_back(parse_expr());
        expect(')');
        const int n = static_cast<int>(args.size());
        if (n < info->min_args || (info->max_args >= 0 && n > info->max_args))
            fail_at("wrong number of arguments to '" + name + "'", line, col);
        return make(Node::Call{info->fn, std::move(args)});
    }
};

}  // namespace detail

inline Expression parse(std::string_view source) {
    return Expression(detail::Parser(source).parse_all());
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

namespace detail {

// 1: + -   2: * /   3: unary -   4: ^   5: atom
inline int precedence(const Node& n) {
    return std::visit(
        [](const auto& v) -> int {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Node::Binary>)
                return (v.op == BinaryOp::Add || v.op == BinaryOp::Sub) ? 1 : 2;
            else if constexpr (std::is_same_v<T, Node::Negate>)
                return 3;
            else if constexpr (std::is_same_v<T, Node::Power>)
                return 4;
            else if constexpr (std::is_same_v<T, Node::Constant>)
                return v.value < 0 ? 3 : 5;
            else
                return 5;
        },
        n.data);
}

inline void print(const Node& n, std::string& out);

inline void print_child(const Node& n, int min_prec, std::string& out) {
    if (precedence(n) < min_prec) {
        out += '(';
        print(n, out);
        out += ')';
    } else {
        print(n, out);
    }
}

inline void print(const Node& n, std::string& out) {
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Node::Constant>) {
                if (v.value < 0) {
                    out += "-";
                    out += format_number(-v.value);
                } else {
                    out += format_number(v.value);
                }
            } else if constexpr (std::is_same_v<T, Node::Variable>) {
                out += v.name;
            } else if constexpr (std::is_same_v<T, Node::Negate>) {
                out += '-';
                print_child(*v.operand, 3, out);
            } else if constexpr (std::is_same_v<T, Node::Binary>) {
                const int p = (v.op == BinaryOp::Add || v.op == BinaryOp::Sub) ? 1 : 2;
                static constexpr const char* kOps[] = {" + ", " - ", "*", "/"};
                print_child(*v.lhs, p, out);
                out += kOps[static_cast<int>(v.op)];
                print_child(*v.rhs, p + 1, out);
            } else if constexpr (std::is_same_v<T, Node::Power>) {
                print_child(*v.base, 5, out);
                out += '^';
                out += std::to_string(v.exponent);
            } else {
                out += function_name(v.fn);
                out += '(';
                for (std::size_t i = 0; i < v.args.size(); ++i) {
                    if (i) out += ", ";
                    print(*v.args[i], out);
                }
                out += ')';
            }
        },
        n.data);
}

}  // namespace detail

/// Canonical text of an expression; parsing it again yields an identical tree.
inline std::string to_string(const Expression& e) {
    std::string out;
    detail::print(e.root(), out);
    return out;
}

// ---------------------------------------------------------------------------
// Variables and substitution
// ---------------------------------------------------------------------------

namespace detail {

inline void collect_variables(const Node& n, std::set<std::string>& out) {
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Node::Variable>) {
                out.insert(v.name);
            } else if constexpr (std::is_same_v<T, Node::Negate>) {
                collect_variables(*v.operand, out);
            } else if constexpr (std::is_same_v<T, Node::Binary>) {
                collect_variables(*v.lhs, out);
                collect_variables(*v.rhs, out);
            } else if constexpr (std::is_same_v<T, Node::Power>) {
                collect_variables(*v.base, out);
            } else if constexpr (std::is_same_v<T, Node::Call>) {
                for (const auto& a : v.args) collect_variables(*a, out);
            }
        },
        n.data);
}

inline NodePtr substitute(const NodePtr& n, const std::map<std::string, Expression>& repl) {
    return std::visit(
        [&](const auto& v) -> NodePtr {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Node::Variable>) {
                auto it = repl.find(v.name);
                return it == repl.end() ? n : it->second.node();
            } else if constexpr (std::is_same_v<T, Node::Negate>) {
                return make(Node::Negate{substitute(v.operand, repl)});
            } else if constexpr (std::is_same_v<T, Node::Binary>) {
                return make(Node::Binary{v.op, substitute(v.lhs, repl), substitute(v.rhs, repl)});
            } else if constexpr (std::is_same_v<T, Node::Power>) {
                return make(Node::Power{substitute(v.base, repl), v.exponent});
            } else if constexpr (std::is_same_v<T, Node::Call>) {
                std::vector<NodePtr> args;
                for (const auto& a : v.args) args.push_back(substitute(a, repl));
                return make(Node::Call{v.fn, std::move(args)});
            } else {
                return n;
            }
        },
        n->data);
}

}  // namespace detail

inline std::set<std::string> free_variables(const Expression& e) {
    std::set<std::string> out;
    detail::collect_variables(e.root(), out);
    return out;
}

/// Every variable of `e` not contained in `allowed`, sorted. Empty means ok.
inline std::vector<std::string> check_bindings(const Expression& e,
                                               const std::set<std::string>& allowed) {
    std::vector<std::string> violations;
    for (const auto& name : free_variables(e))
        if (!allowed.contains(name)) violations.push_back(name);
    return violations;
}

/// Replaces variables by expressions (simultaneously).
inline Expression substitute(const Expression& e, const std::map<std::string, Expression>& repl) {
    return Expression(detail::substitute(e.node(), repl));
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// An expression flattened to postfix code against a fixed variable layout.
/// Evaluation is reentrant; the program holds no mutable state.
class Program {
public:
    Program() = default;

    /// Throws EvalError if the expression uses a variable outside `layout`.
    static Program compile(const Expression& e, std::span<const std::string> layout) {
        Program p;
        int depth = 0;
        p.emit(e.root(), layout, depth);
        return p;
    }

    int max_stack() const noexcept { return max_depth_; }

    double operator()(std::span<const double> slots) const {
        if (max_depth_ <= kInlineStack) {
            std::array<double, kInlineStack> stack;
            return run(slots, stack.data());
        }
        std::vector<double> stack(static_cast<std::size_t>(max_depth_));
        return run(slots, stack.data());
    }

private:
    static constexpr int kInlineStack = 48;

    enum class Op : std::uint8_t {
        Const, Var, Neg, Add, Sub, Mul, Div, PowInt,
        Sin, Cos, Tan, Exp, Log, Sqrt, Cbrt, Abs, Sign, Pow, Min, Max
    };

    struct Instr {
        Op op;
        std::int32_t arg;  // slot index, argument count
        double value;      // constant or integer exponent
    };

    std::vector<Instr> code_;
    int max_depth_ = 0;

    void push(Instr ins, int& depth, int delta) {
        code_.push_back(ins);
        depth += delta;
        max_depth_ = std::max(max_depth_, depth);
    }

    void emit(const Node& n, std::span<const std::string> layout, int& depth) {
        std::visit(
            [&](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, Node::Constant>) {
                    push({Op::Const, 0, v.value}, depth, 1);
                } else if constexpr (std::is_same_v<T, Node::Variable>) {
                    auto it = std::find(layout.begin(), layout.end(), v.name);
                    if (it == layout.end()) throw EvalError("unbound variable '" + v.name + "'");
                    push({Op::Var, static_cast<std::int32_t>(it - layout.begin()), 0.0}, depth, 1);
                } else if constexpr (std::is_same_v<T, Node::Negate>) {
                    emit(*v.operand, layout, depth);
                    push({Op::Neg, 0, 0.0}, depth, 0);
                } else if constexpr (std::is_same_v<T, Node::Binary>) {
                    emit(*v.lhs, layout, depth);
                    emit(*v.rhs, layout, depth);
                    static constexpr Op kOps[] = {Op::Add, Op::Sub, Op::Mul, Op::Div};
                    push({kOps[static_cast<int>(v.op)], 0, 0.0}, depth, -1);
                } else if constexpr (std::is_same_v<T, Node::Power>) {
                    emit(*v.base, layout, depth);
                    push({Op::PowInt, 0, static_cast<double>(v.exponent)}, depth, 0);
                } else {
                    for (const auto& a : v.args) emit(*a, layout, depth);
                    const auto argc = static_cast<std::int32_t>(v.args.size());
                    Op op{};
                    switch (v.fn) {
                        case Func::Sin: op = Op::Sin; break;
                        case Func::Cos: op = Op::Cos; break;
                        case Func::Tan: op = Op::Tan; break;
                        case Func::Exp: op = Op::Exp; break;
                        case Func::Log: op = Op::Log; break;
                        case Func::Sqrt: op = Op::Sqrt; break;
                        case Func::Cbrt: op = Op::Cbrt; break;
                        case Func::Abs: op = Op::Abs; break;
                        case Func::Sign: op = Op::Sign; break;
                        case Func::Pow: op = Op::Pow; break;
                        case Func::Min: op = Op::Min; break;
                        case Func::Max: op = Op::Max; break;
                    }
                    push({op, argc, 0.0}, depth, 1 - argc);
                }
            },
            n.data);
    }

    static double checked(double v, const char* what) {
        if (!std::isfinite(v)) throw EvalError(std::string("non-finite result in ") + what);
        return v;
    }

    double run(std::span<const double> slots, double* s) const {
        int sp = 0;
        for (const Instr& ins : code_) {
            switch (ins.op) {
                case Op::Const: s[sp++] = ins.value; break;
                case Op::Var: s[sp++] = slots[static_cast<std::size_t>(ins.arg)]; break;
                case Op::Neg: s[sp - 1] = -s[sp - 1]; break;
                case Op::Add: --sp; s[sp - 1] = checked(s[sp - 1] + s[sp], "addition"); break;
                case Op::Sub: --sp; s[sp - 1] = checked(s[sp - 1] - s[sp], "subtraction"); break;
                case Op::Mul: --sp; s[sp - 1] = checked(s[sp - 1] * s[sp], "multiplication"); break;
                case Op::Div:
                    --sp;
                    if (s[sp] == 0.0) throw EvalError("division by zero");
                    s[sp - 1] = checked(s[sp - 1] / s[sp], "division");
                    break;
                case Op::PowInt: {
                    const double base = s[sp - 1];
                    if (base == 0.0 && ins.value < 0) throw EvalError("division by zero in '^'");
                    s[sp - 1] = ins.value == 0 ? 1.0 : checked(std::pow(base, ins.value), "'^'");
                    break;
                }
                case Op::Sin: s[sp - 1] = std::sin(s[sp - 1]); break;
                case Op::Cos: s[sp - 1] = std::cos(s[sp - 1]); break;
                case Op::Tan: s[sp - 1] = checked(std::tan(s[sp - 1]), "tan"); break;
                case Op::Exp: s[sp - 1] = checked(std::exp(s[sp - 1]), "exp"); break;
                case Op::Log:
                    if (!(s[sp - 1] > 0.0)) throw EvalError("log of nonpositive value");
                    s[sp - 1] = std::log(s[sp - 1]);
                    break;
                case Op::Sqrt:
                    if (s[sp - 1] < 0.0) throw EvalError("sqrt of negative value");
                    s[sp - 1] = std::sqrt(s[sp - 1]);
                    break;
                case Op::Cbrt: s[sp - 1] = std::cbrt(s[sp - 1]); break;
                case Op::Abs: s[sp - 1] = std::abs(s[sp - 1]); break;
                case Op::Sign: {
                    const double v = s[sp - 1];
                    s[sp - 1] = v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0);
                    break;
                }
                case Op::Pow: {
                    --sp;
                    const double base = s[sp - 1], ex = s[sp];
                    if (base < 0.0 && ex != std::floor(ex))
                        throw EvalError("pow of negative base with non-integer exponent");
                    if (base == 0.0 && ex < 0.0) throw EvalError("division by zero in pow");
                    s[sp - 1] = checked(std::pow(base, ex), "pow");
                    break;
                }
                case Op::Min: {
                    sp -= ins.arg - 1;
                    double m = s[sp - 1];
                    for (int i = 0; i < ins.arg; ++i) m = std::min(m, s[sp - 1 + i]);
                    s[sp - 1] = m;
                    break;
                }
                case Op::Max: {
                    sp -= ins.arg - 1;
                    double m = s[sp - 1];
                    for (int i = 0; i < ins.arg; ++i) m = std::max(m, s[sp - 1 + i]);
                    s[sp - 1] = m;
                    break;
                }
            }
        }
        return s[0];
    }
};

/// Evaluates `e` with named bindings. Throws EvalError on an unbound variable
/// or a domain error.
inline double evaluate(const Expression& e, const std::map<std::string, double>& bindings) {
    std::vector<std::string> layout;
    std::vector<double> values;
    for (const auto& [name, value] : bindings) {
        layout.push_back(name);
        values.push_back(value);
    }
    return Program::compile(e, layout)(values);
}

}  // namespace pavg

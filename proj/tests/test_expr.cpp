#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <thread>

#include "pavg/expr.hpp"

using namespace pavg;

namespace {

double eval(const std::string& src, const std::map<std::string, double>& b = {}) { return evaluate(parse(src), b); }

struct Golden {
    const char* source;
    double expected;
};

// x1 = 2, x2 = 3, t = pi/2, eps = 0.5
const std::map<std::string, double> kBind{{"x1", 2.0}, {"x2", 3.0}, {"t", std::numbers::pi / 2}, {"eps", 0.5}};

const Golden kCorpus[] = {
    {"2+3*4", 14.0},
    {"(2+3)*4", 20.0},
    {"2*3+4", 10.0},
    {"10-4-3", 3.0},
    {"100/10/5", 2.0},
    {"2^3^2", 512.0},
    {"(2^3)^2", 64.0},
    {"-2^2", -4.0},
    {"(-2)^2", 4.0},
    {"-x1^2", -4.0},
    {"2^-1", 0.5},
    {"-3*-2", 6.0},
    {"--3", 3.0},
    {"x1*x2-x1/x2", 6.0 - 2.0 / 3.0},
    {"-x2 + x1*sin(t)", -1.0},
    {"cbrt(x1^2 + x2^2 - 1)", std::cbrt(12.0)},
    {"cbrt(-8)", -2.0},
    {"x1*cbrt(x1^2-1)/2", std::cbrt(3.0)},
    {"sin(t)^2", 1.0},
    {"cos(0)", 1.0},
    {"tan(0)", 0.0},
    {"exp(0) + log(1)", 1.0},
    {"sqrt(16)", 4.0},
    {"abs(-3.5)", 3.5},
    {"sign(-2) + sign(0) + sign(5)", 0.0},
    {"pow(2, 10)", 1024.0},
    {"pow(9, 0.5)", 3.0},
    {"min(3, x1, 7)", 2.0},
    {"max(3, x1, 7)", 7.0},
    {"1e3 + 2.5e-1", 1000.25},
    {"1.5E+2", 150.0},
    {".5 + 0.25", 0.75},
    {"eps*x1 + 1", 2.0},
    {"x1^0", 1.0},
    {"x2^3 / x2^2", 3.0},
    {"2*(x1 + (x2 - 1)*2)", 12.0},
    {"1 - 2 + 3 - 4", -2.0},
    {"2^2*3", 12.0},
    {"3*2^2", 12.0},
    {"-(x1 - x2)", 1.0},
};

}  // namespace

TEST(ExprGolden, CorpusEvaluatesWithStandardPrecedence) {
    ASSERT_GE(std::size(kCorpus), 30u);
    for (const auto& g : kCorpus) {
        SCOPED_TRACE(g.source);
        EXPECT_NEAR(eval(g.source, kBind), g.expected, 1e-12 * std::max(1.0, std::abs(g.expected)));
    }
}

TEST(ExprParse, SpecExamples) {
    EXPECT_DOUBLE_EQ(eval("2+3*4"), 14.0);
    EXPECT_DOUBLE_EQ(eval("cbrt(x1^2 + x2^2 - 1)", {{"x1", 1}, {"x2", 0}}), 0.0);
    EXPECT_DOUBLE_EQ(eval("-x2 + x1*sin(t)", {{"t", std::numbers::pi / 2}, {"x1", 2}, {"x2", 3}}), -1.0);
    EXPECT_NEAR(eval("sin(t)^2", {{"t", std::numbers::pi / 4}}), 0.5, 1e-15);
    EXPECT_NEAR(eval("x1*cbrt(x1^2-1)/2", {{"x1", 2}}), 1.4422495703074083, 1e-15);
}

TEST(ExprParse, SyntaxErrorsCarryPosition) {
    try {
        parse("1 +\n  * 2");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2);
        EXPECT_EQ(e.column(), 3);
    }
    EXPECT_THROW(parse(""), ParseError);
    EXPECT_THROW(parse("(1 + 2"), ParseError);
    EXPECT_THROW(parse("1 + 2)"), ParseError);
    EXPECT_THROW(parse("sin()"), ParseError);
    EXPECT_THROW(parse("3 $ 4"), ParseError);
}

TEST(ExprParse, RejectsUnknownFunctionAndArity) {
    try {
        parse("foo(1)");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("unknown function"), std::string::npos);
    }
    EXPECT_THROW(parse("pow(1)"), ParseError);
    EXPECT_THROW(parse("sin(1, 2)"), ParseError);
    EXPECT_THROW(parse("min(1)"), ParseError);
}

TEST(ExprParse, ExponentsMustBeIntegers) {
    try {
        parse("x1^0.5");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("non-integer exponent"), std::string::npos);
    }
    EXPECT_THROW(parse("x1^x2"), ParseError);
    EXPECT_NO_THROW(parse("x1^(1+1)"));
    EXPECT_DOUBLE_EQ(eval("x1^(1+1)", {{"x1", 3}}), 9.0);
}

TEST(ExprParse, NoImplicitMultiplication) {
    EXPECT_THROW(parse("2x"), ParseError);
    EXPECT_THROW(parse("2(x1)"), ParseError);
    EXPECT_THROW(parse("x1 x2"), ParseError);
}

TEST(ExprEvaluate, DomainErrorsAreReported) {
    EXPECT_THROW(eval("log(0)"), EvalError);
    EXPECT_THROW(eval("log(-1)"), EvalError);
    EXPECT_THROW(eval("sqrt(-1)"), EvalError);
    EXPECT_THROW(eval("1/0"), EvalError);
    EXPECT_THROW(eval("x1/x2", {{"x1", 1}, {"x2", 0}}), EvalError);
    EXPECT_THROW(eval("pow(-8, 0.5)"), EvalError);
    EXPECT_THROW(eval("exp(1000)"), EvalError);
    EXPECT_THROW(eval("x1 + 1"), EvalError);  // unbound
    EXPECT_DOUBLE_EQ(eval("sqrt(0)"), 0.0);
}

TEST(ExprBindings, ReportsVariablesOutsideAllowedSet) {
    EXPECT_EQ(check_bindings(parse("eps*x1"), {"t", "x1"}), std::vector<std::string>{"eps"});
    EXPECT_TRUE(check_bindings(parse("sin(t)*x1"), {"t", "x1"}).empty());
    EXPECT_EQ(check_bindings(parse("x3"), {"t", "x1", "x2"}), std::vector<std::string>{"x3"});
    EXPECT_EQ(check_bindings(parse("z + eps + a"), {"t"}), (std::vector<std::string>{"a", "eps", "z"}));
}

TEST(ExprSubstitute, ReplacesVariablesSimultaneously) {
    const auto e = substitute(parse("x1 + 2*x2"), {{"x1", parse("x2")}, {"x2", parse("x1")}});
    EXPECT_DOUBLE_EQ(evaluate(e, {{"x1", 10}, {"x2", 1}}), 1.0 + 20.0);
}

TEST(ExprProperty, CbrtIsTheRealCubeRoot) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    const auto e = parse("cbrt(x1)");
    for (int i = 0; i < 2000; ++i) {
        const double x = u(rng);
        const double c = evaluate(e, {{"x1", x}});
        EXPECT_LE(std::abs(c * c * c - x), 1e-12 * std::max(std::abs(x), 1e-300)) << x;
        EXPECT_EQ(std::signbit(c), std::signbit(x));
    }
    EXPECT_DOUBLE_EQ(evaluate(e, {{"x1", -27.0}}), -3.0);
}

namespace {

// Random source text over the full grammar.
class SourceGen {
public:
    explicit SourceGen(std::uint64_t seed) : rng_(seed) {}

    std::string expr(int depth) {
        if (depth <= 0) return atom();
        switch (pick(8)) {
            case 0: return expr(depth - 1) + " + " + expr(depth - 1);
            case 1: return expr(depth - 1) + " - " + expr(depth - 1);
            case 2: return expr(depth - 1) + "*" + expr(depth - 1);
            case 3: return expr(depth - 1) + " / " + expr(depth - 1);
            case 4: return "-" + expr(depth - 1);
            case 5: return "(" + expr(depth - 1) + ")^" + std::to_string(static_cast<int>(pick(5)) - 1);
            case 6: {
                static const char* f1[] = {"sin", "cos", "cbrt", "abs", "sign", "exp", "tan"};
                return std::string(f1[pick(7)]) + "(" + expr(depth - 1) + ")";
            }
            default: {
                static const char* f2[] = {"min", "max", "pow"};
                return std::string(f2[pick(3)]) + "(" + expr(depth - 1) + ", " + expr(depth - 1) + ")";
            }
        }
    }

private:
    std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

    std::string atom() {
        static const char* vars[] = {"t", "x1", "x2", "eps"};
        static const char* nums[] = {"0", "1", "2.5", "0.125", "3e-2", "1e+3", "7", "0.1", "1e-300", "123456.789"};
        switch (pick(3)) {
            case 0: return vars[pick(4)];
            case 1: return nums[pick(10)];
            default: return "(" + std::string(vars[pick(4)]) + ")";
        }
    }

    std::mt19937_64 rng_;
};

}  // namespace

TEST(ExprProperty, ParsePrintParseRoundTrip) {
    SourceGen gen(2024);
    for (int i = 0; i < 500; ++i) {
        const std::string src = gen.expr(1 + i % 5);
        SCOPED_TRACE(src);
        const Expression a = parse(src);
        const std::string printed = to_string(a);
        const Expression b = parse(printed);
        EXPECT_TRUE(a == b) << printed;
        EXPECT_EQ(to_string(b), printed);
    }
}

TEST(ExprProperty, RoundTripPreservesValues) {
    SourceGen gen(99);
    const std::map<std::string, double> b{{"t", 0.7}, {"x1", 1.3}, {"x2", -0.4}, {"eps", 0.05}};
    int compared = 0;
    for (int i = 0; i < 300; ++i) {
        const Expression a = parse(gen.expr(3));
        double va = 0;
        try {
            va = evaluate(a, b);
        } catch (const EvalError&) {
            EXPECT_THROW(evaluate(parse(to_string(a)), b), EvalError);
            continue;
        }
        EXPECT_EQ(evaluate(parse(to_string(a)), b), va);
        ++compared;
    }
    EXPECT_GT(compared, 100);
}

TEST(ExprPrint, CanonicalForms) {
    EXPECT_EQ(to_string(parse("(-2)^2")), "(-2)^2");
    EXPECT_EQ(to_string(parse("-2^2")), "-2^2");
    // Exponents are folded to integers at parse time.
    EXPECT_EQ(to_string(parse("2^3^2")), "2^9");
    EXPECT_EQ(to_string(parse("(2^3)^2")), "(2^3)^2");
    EXPECT_EQ(to_string(parse("a-(b-c)")), "a - (b - c)");
    EXPECT_EQ(to_string(parse("(a-b)-c")), "a - b - c");
    EXPECT_EQ(to_string(parse("a/(b*c)")), "a/(b*c)");
    EXPECT_EQ(to_string(parse("0.1")), "0.1");
}

TEST(ExprProgram, ConcurrentEvaluationIsConsistent) {
    const auto e = parse("x1*cbrt(x1^2 - 1)*sin(t)^2 + eps*cos(t)");
    const std::vector<std::string> layout{"t", "x1", "eps"};
    const Program prog = Program::compile(e, layout);
    std::vector<double> serial(4000);
    for (std::size_t i = 0; i < serial.size(); ++i) {
        const double s[3] = {0.001 * i, 0.5 + 0.0002 * i, 0.01};
        serial[i] = prog(s);
    }
    std::vector<std::vector<double>> results(8, std::vector<double>(serial.size()));
    {
        std::vector<std::jthread> pool;
        for (int w = 0; w < 8; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t i = 0; i < serial.size(); ++i) {
                    const double s[3] = {0.001 * i, 0.5 + 0.0002 * i, 0.01};
                    results[static_cast<std::size_t>(w)][i] = prog(s);
                }
            });
    }
    for (const auto& r : results) EXPECT_EQ(r, serial);
}

TEST(ExprProgram, RejectsVariablesOutsideLayout) {
    const std::vector<std::string> layout{"t", "x1"};
    EXPECT_THROW(Program::compile(parse("x2 + 1"), layout), EvalError);
}

#include "memfem/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

#include "memfem/errors.hpp"

namespace memfem {

class ExprParser {
  public:
    explicit ExprParser(const std::string& text) : text_(text) {}

    Expr run() {
        Expr e;
        e.text_ = text_;
        nodes_ = &e.nodes_;
        pos_ = 0;
        e.root_ = parse_expr();
        skip_ws();
        if (pos_ < text_.size()) throw EvalError("unexpected trailing input", pos_);
        return e;
    }

  private:
    const std::string& text_;
    std::vector<Expr::Node>* nodes_ = nullptr;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < text_.size() &&
               std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool at(char c) {
        skip_ws();
        return pos_ < text_.size() && text_[pos_] == c;
    }

    bool accept(char c) {
        if (!at(c)) return false;
        ++pos_;
        return true;
    }

    void expect(char c, const char* what) {
        if (!accept(c)) throw EvalError(std::string("expected ") + what, pos_);
    }

    int make(Expr::Op op, std::size_t offset, int lhs = -1, int rhs = -1,
             double value = 0.0) {
        nodes_->push_back({op, value, lhs, rhs, offset});
        return static_cast<int>(nodes_->size() - 1);
    }

    int parse_expr() {
        int lhs = parse_term();
        for (;;) {
            skip_ws();
            const std::size_t off = pos_;
            if (accept('+'))
                lhs = make(Expr::Op::Add, off, lhs, parse_term());
            else if (accept('-'))
                lhs = make(Expr::Op::Sub, off, lhs, parse_term());
            else
                return lhs;
        }
    }

    int parse_term() {
        int lhs = parse_factor();
        for (;;) {
            skip_ws();
            const std::size_t off = pos_;
            if (accept('*'))
                lhs = make(Expr::Op::Mul, off, lhs, parse_factor());
            else if (accept('/'))
                lhs = make(Expr::Op::Div, off, lhs, parse_factor());
            else
                return lhs;
        }
    }

    // Unary minus sits below ^, so -x^2 is -(x^2) while 2^-1 still parses.
    int parse_factor() {
        skip_ws();
        const std::size_t off = pos_;
        if (accept('-')) return make(Expr::Op::Neg, off, parse_factor());
        return parse_power();
    }

    int parse_power() {
        const int base = parse_primary();
        skip_ws();
        const std::size_t off = pos_;
        if (accept('^')) return make(Expr::Op::Pow, off, base, parse_factor());
        return base;
    }

    int parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) throw EvalError("unexpected end of expression", pos_);
        const std::size_t off = pos_;
        const char c = text_[pos_];

        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* start = text_.c_str() + pos_;
            char* end = nullptr;
            const double v = std::strtod(start, &end);
            if (end == start) throw EvalError("malformed number", pos_);
            pos_ += static_cast<std::size_t>(end - start);
            return make(Expr::Op::Const, off, -1, -1, v);
        }

        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t len = 0;
            while (pos_ + len < text_.size() &&
                   std::isalpha(static_cast<unsigned char>(text_[pos_ + len])))
                ++len;
            const std::string name = text_.substr(pos_, len);
            pos_ += len;
            if (name == "x") return make(Expr::Op::X, off);
            if (name == "y") return make(Expr::Op::Y, off);
            if (name == "t") return make(Expr::Op::T, off);
            Expr::Op op;
            if (name == "sin")
                op = Expr::Op::Sin;
            else if (name == "cos")
                op = Expr::Op::Cos;
            else if (name == "exp")
                op = Expr::Op::Exp;
            else
                throw EvalError("unknown identifier '" + name + "'", off);
            expect('(', "'(' after function name");
            const int arg = parse_expr();
            expect(')', "')'");
            return make(op, off, arg);
        }

        if (accept('(')) {
            const int inner = parse_expr();
            expect(')', "')'");
            return inner;
        }
        throw EvalError("unexpected token", pos_);
    }
};

Expr Expr::parse(const std::string& text) { return ExprParser(text).run(); }

double Expr::eval(double x, double y, double t) const {
    if (root_ < 0) throw EvalError("empty expression", 0);
    return eval_node(root_, x, y, t);
}

double Expr::eval_node(int idx, double x, double y, double t) const {
    const Node& n = nodes_[idx];
    double v = 0.0;
    switch (n.op) {
        case Op::Const: v = n.value; break;
        case Op::X: v = x; break;
        case Op::Y: v = y; break;
        case Op::T: v = t; break;
        case Op::Add: v = eval_node(n.lhs, x, y, t) + eval_node(n.rhs, x, y, t); break;
        case Op::Sub: v = eval_node(n.lhs, x, y, t) - eval_node(n.rhs, x, y, t); break;
        case Op::Mul: v = eval_node(n.lhs, x, y, t) * eval_node(n.rhs, x, y, t); break;
        case Op::Div: {
            const double den = eval_node(n.rhs, x, y, t);
            if (den == 0.0) throw EvalError("division by zero", n.offset);
            v = eval_node(n.lhs, x, y, t) / den;
            break;
        }
        case Op::Pow:
            v = std::pow(eval_node(n.lhs, x, y, t), eval_node(n.rhs, x, y, t));
            break;
        case Op::Neg: v = -eval_node(n.lhs, x, y, t); break;
        case Op::Sin: v = std::sin(eval_node(n.lhs, x, y, t)); break;
        case Op::Cos: v = std::cos(eval_node(n.lhs, x, y, t)); break;
        case Op::Exp: v = std::exp(eval_node(n.lhs, x, y, t)); break;
    }
    if (!std::isfinite(v)) throw EvalError("expression value is non-finite", n.offset);
    return v;
}

}  // namespace memfem

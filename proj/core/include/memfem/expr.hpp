#pragma once

#include <memory>
#include <string>
#include <vector>

namespace memfem {

// Arithmetic expressions over x, y, t with + - * / ^, unary minus, and
// sin/cos/exp. Precedence: ^ binds tightest, then unary minus, then * /,
// then + -; all left-associative except ^ (right). Parse failures carry the
// byte offset of the offending token (EvalError).
class Expr {
  public:
    Expr() = default;

    static Expr parse(const std::string& text);

    // Throws EvalError on division by zero or any non-finite intermediate.
    double eval(double x, double y, double t) const;

    bool empty() const { return nodes_.empty(); }
    const std::string& text() const { return text_; }

  private:
    enum class Op { Const, X, Y, T, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp };

    struct Node {
        Op op = Op::Const;
        double value = 0.0;
        int lhs = -1;
        int rhs = -1;
        std::size_t offset = 0;  // byte position in the source text
    };

    std::vector<Node> nodes_;
    int root_ = -1;
    std::string text_;

    double eval_node(int idx, double x, double y, double t) const;

    friend class ExprParser;
};

}  // namespace memfem

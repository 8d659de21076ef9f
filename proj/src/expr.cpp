#include "uvband/expr.hpp"

#include "uvband/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace uvband {

struct Expr::Node {
    Kind kind;
    double value = 0.0; // Constant
    int index = 0;      // Variable (1-based) or Pow exponent
    double lo = 0.0, hi = 0.0; // Clamp bounds
    Expr a, b;
};

Expr Expr::make(Node&& n) {
    return Expr(std::make_shared<const Node>(std::move(n)));
}

Expr Expr::constant(double value) {
    return make({Kind::Constant, value, 0, 0, 0, {}, {}});
}

Expr Expr::variable(int index) {
    if (index < 1)
        throw ValidationError("expression variable index must be >= 1");
    return make({Kind::Variable, 0, index, 0, 0, {}, {}});
}

Expr Expr::add(Expr a, Expr b) {
    return make({Kind::Add, 0, 0, 0, 0, std::move(a), std::move(b)});
}

Expr Expr::sub(Expr a, Expr b) {
    return make({Kind::Sub, 0, 0, 0, 0, std::move(a), std::move(b)});
}

Expr Expr::mul(Expr a, Expr b) {
    return make({Kind::Mul, 0, 0, 0, 0, std::move(a), std::move(b)});
}

Expr Expr::pow(Expr base, int exponent) {
    if (exponent < 0 || exponent > 64)
        throw ValidationError("expression exponent must be an integer in [0, 64]");
    return make({Kind::Pow, 0, exponent, 0, 0, std::move(base), {}});
}

Expr Expr::min(Expr a, Expr b) {
    return make({Kind::Min, 0, 0, 0, 0, std::move(a), std::move(b)});
}

Expr Expr::max(Expr a, Expr b) {
    return make({Kind::Max, 0, 0, 0, 0, std::move(a), std::move(b)});
}

Expr Expr::abs(Expr a) {
    return make({Kind::Abs, 0, 0, 0, 0, std::move(a), {}});
}

Expr Expr::clamp(Expr a, double lo, double hi) {
    if (!(lo <= hi))
        throw ValidationError("clamp bounds must satisfy lo <= hi");
    return make({Kind::Clamp, 0, 0, lo, hi, std::move(a), {}});
}

Expr::Kind Expr::kind() const {
    if (!node_)
        throw ValidationError("empty expression");
    return node_->kind;
}

double Expr::eval(std::span<const double> args) const {
    if (!node_)
        throw ValidationError("empty expression");
    const Node& n = *node_;
    switch (n.kind) {
    case Kind::Constant:
        return n.value;
    case Kind::Variable:
        if (n.index > static_cast<int>(args.size()))
            throw RangeError("expression references x" + std::to_string(n.index) +
                             " but only " + std::to_string(args.size()) +
                             " argument(s) were supplied");
        return args[static_cast<std::size_t>(n.index - 1)];
    case Kind::Add:
        return n.a.eval(args) + n.b.eval(args);
    case Kind::Sub:
        return n.a.eval(args) - n.b.eval(args);
    case Kind::Mul:
        return n.a.eval(args) * n.b.eval(args);
    case Kind::Pow: {
        double base = n.a.eval(args);
        double acc = 1.0;
        for (int i = 0; i < n.index; ++i)
            acc *= base;
        return acc;
    }
    case Kind::Min:
        return std::min(n.a.eval(args), n.b.eval(args));
    case Kind::Max:
        return std::max(n.a.eval(args), n.b.eval(args));
    case Kind::Abs:
        return std::fabs(n.a.eval(args));
    case Kind::Clamp:
        return std::min(std::max(n.a.eval(args), n.lo), n.hi);
    }
    throw ValidationError("corrupt expression node");
}

int Expr::arity() const {
    if (!node_)
        return 0;
    const Node& n = *node_;
    switch (n.kind) {
    case Kind::Constant:
        return 0;
    case Kind::Variable:
        return n.index;
    case Kind::Pow:
    case Kind::Abs:
    case Kind::Clamp:
        return n.a.arity();
    default:
        return std::max(n.a.arity(), n.b.arity());
    }
}

namespace {

// Shortest round-trip rendering so parse(to_string()) is lossless without
// digit noise.
void format_number(std::ostringstream& os, double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    os << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
}

} // namespace

std::string Expr::to_string() const {
    if (!node_)
        return "<empty>";
    const Node& n = *node_;
    std::ostringstream os;
    switch (n.kind) {
    case Kind::Constant:
        if (n.value < 0) {
            os << "(";
            format_number(os, n.value);
            os << ")";
        } else {
            format_number(os, n.value);
        }
        break;
    case Kind::Variable:
        os << "x" << n.index;
        break;
    case Kind::Add:
        os << "(" << n.a.to_string() << " + " << n.b.to_string() << ")";
        break;
    case Kind::Sub:
        os << "(" << n.a.to_string() << " - " << n.b.to_string() << ")";
        break;
    case Kind::Mul:
        os << "(" << n.a.to_string() << " * " << n.b.to_string() << ")";
        break;
    case Kind::Pow:
        os << n.a.to_string() << "^" << n.index;
        break;
    case Kind::Min:
        os << "min(" << n.a.to_string() << ", " << n.b.to_string() << ")";
        break;
    case Kind::Max:
        os << "max(" << n.a.to_string() << ", " << n.b.to_string() << ")";
        break;
    case Kind::Abs:
        os << "abs(" << n.a.to_string() << ")";
        break;
    case Kind::Clamp:
        os << "clamp(" << n.a.to_string() << ", ";
        format_number(os, n.lo);
        os << ", ";
        format_number(os, n.hi);
        os << ")";
        break;
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Recursive-descent parser. See docs/config-format.md for the grammar.

namespace {

class Parser {
  public:
    explicit Parser(const std::string& text) : text_(text) {}

    Expr run() {
        Expr e = expression();
        skip_ws();
        if (pos_ != text_.size())
            fail("unexpected trailing input");
        return e;
    }

  private:
    const std::string& text_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) {
        throw ValidationError("expression parse error at offset " +
                              std::to_string(pos_) + ": " + what + " in \"" +
                              text_ + "\"");
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool consume(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    Expr expression() {
        bool neg = false;
        skip_ws();
        if (consume('-'))
            neg = true;
        else
            consume('+');
        Expr e = term();
        if (neg)
            e = Expr::sub(Expr::constant(0.0), std::move(e));
        for (;;) {
            if (consume('+'))
                e = Expr::add(std::move(e), term());
            else if (consume('-'))
                e = Expr::sub(std::move(e), term());
            else
                return e;
        }
    }

    Expr term() {
        Expr e = factor();
        while (consume('*'))
            e = Expr::mul(std::move(e), factor());
        return e;
    }

    Expr factor() {
        Expr e = atom();
        if (consume('^')) {
            skip_ws();
            std::size_t start = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                ++pos_;
            if (pos_ == start)
                fail("expected a nonnegative integer exponent after '^'");
            int exp = std::stoi(text_.substr(start, pos_ - start));
            e = Expr::pow(std::move(e), exp);
        }
        return e;
    }

    double number_literal() {
        skip_ws();
        std::size_t start = pos_;
        if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-'))
            ++pos_;
        bool digits = false;
        while (pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
            digits = digits || std::isdigit(static_cast<unsigned char>(text_[pos_]));
            ++pos_;
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-'))
                ++pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                ++pos_;
        }
        if (!digits)
            fail("expected a number literal");
        return std::stod(text_.substr(start, pos_ - start));
    }

    std::string identifier() {
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        return text_.substr(start, pos_ - start);
    }

    Expr atom() {
        skip_ws();
        if (pos_ >= text_.size())
            fail("unexpected end of input");
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = expression();
            if (!consume(')'))
                fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return Expr::constant(number_literal());
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::string id = identifier();
            if (id == "x")
                return Expr::variable(1);
            if (id.size() > 1 && id[0] == 'x' &&
                std::all_of(id.begin() + 1, id.end(),
                            [](char d) { return std::isdigit(static_cast<unsigned char>(d)); }))
                return Expr::variable(std::stoi(id.substr(1)));
            if (id == "min" || id == "max") {
                if (!consume('('))
                    fail("expected '(' after " + id);
                Expr a = expression();
                if (!consume(','))
                    fail("expected ',' in " + id);
                Expr b = expression();
                if (!consume(')'))
                    fail("expected ')' after " + id);
                return id == "min" ? Expr::min(std::move(a), std::move(b))
                                   : Expr::max(std::move(a), std::move(b));
            }
            if (id == "abs") {
                if (!consume('('))
                    fail("expected '(' after abs");
                Expr a = expression();
                if (!consume(')'))
                    fail("expected ')' after abs");
                return Expr::abs(std::move(a));
            }
            if (id == "clamp") {
                if (!consume('('))
                    fail("expected '(' after clamp");
                Expr a = expression();
                if (!consume(','))
                    fail("expected ',' after clamp argument");
                double lo = number_literal();
                if (!consume(','))
                    fail("expected ',' after clamp lower bound");
                double hi = number_literal();
                if (!consume(')'))
                    fail("expected ')' after clamp");
                return Expr::clamp(std::move(a), lo, hi);
            }
            fail("unknown identifier '" + id + "'");
        }
        fail(std::string("unexpected character '") + c + "'");
    }
};

} // namespace

Expr Expr::parse(const std::string& text) {
    return Parser(text).run();
}

} // namespace uvband

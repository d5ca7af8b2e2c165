#include "coulomb/potential.hpp"

#include <boost/math/interpolators/makima.hpp>
#include <cctype>
#include <cmath>
#include <functional>
#include <sstream>

#include "coulomb/errors.hpp"

namespace coulomb {

namespace {

// Value with its gradient in (x, y, z).
struct Dual {
    double v;
    Vec3 g;

    friend Dual operator+(const Dual& a, const Dual& b) { return {a.v + b.v, a.g + b.g}; }
    friend Dual operator-(const Dual& a, const Dual& b) { return {a.v - b.v, a.g - b.g}; }
    friend Dual operator*(const Dual& a, const Dual& b) { return {a.v * b.v, a.v * b.g + b.v * a.g}; }
    friend Dual operator/(const Dual& a, const Dual& b) {
        return {a.v / b.v, (1.0 / (b.v * b.v)) * (b.v * a.g - a.v * b.g)};
    }
};

Dual chain(const Dual& a, double f, double df) { return {f, df * a.g}; }

struct Node {
    enum Op { Num, VarX, VarY, VarZ, VarR, Add, Sub, Mul, Div, Pow, Neg, Log, Sqrt, Exp } op;
    double num = 0.0;
    int a = -1, b = -1;
};

class Parser {
public:
    Parser(const std::string& s, std::vector<Node>& nodes) : s_(s), nodes_(nodes) {}

    int parse() {
        const int root = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw InvalidParameter("potential expression: " + what + " at position " + std::to_string(pos_));
    }
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    int add(Node n) {
        nodes_.push_back(n);
        return static_cast<int>(nodes_.size()) - 1;
    }
    int expr() {
        int lhs = term();
        for (;;) {
            if (eat('+')) lhs = add({Node::Add, 0.0, lhs, term()});
            else if (eat('-')) lhs = add({Node::Sub, 0.0, lhs, term()});
            else return lhs;
        }
    }
    int term() {
        int lhs = unary();
        for (;;) {
            if (eat('*')) lhs = add({Node::Mul, 0.0, lhs, unary()});
            else if (eat('/')) lhs = add({Node::Div, 0.0, lhs, unary()});
            else return lhs;
        }
    }
    int unary() {
        if (eat('-')) return add({Node::Neg, 0.0, unary()});
        if (eat('+')) return unary();
        return power();
    }
    int power() {
        const int base = primary();
        if (eat('^')) {
            const int e = unary();
            if (nodes_[e].op != Node::Num) fail("exponent must be a number");
            return add({Node::Pow, 0.0, base, e});
        }
        return base;
    }
    int primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end");
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t used = 0;
            const double v = std::stod(s_.substr(pos_), &used);
            pos_ += used;
            return add({Node::Num, v});
        }
        if (eat('(')) {
            const int e = expr();
            if (!eat(')')) fail("missing ')'");
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t end = pos_;
            while (end < s_.size() && std::isalnum(static_cast<unsigned char>(s_[end]))) ++end;
            const std::string id = s_.substr(pos_, end - pos_);
            pos_ = end;
            if (id == "x") return add({Node::VarX});
            if (id == "y") return add({Node::VarY});
            if (id == "z") return add({Node::VarZ});
            if (id == "r") return add({Node::VarR});
            Node::Op op;
            if (id == "log") op = Node::Log;
            else if (id == "sqrt") op = Node::Sqrt;
            else if (id == "exp") op = Node::Exp;
            else fail("unknown identifier '" + id + "'");
            if (!eat('(')) fail("expected '(' after " + id);
            const int arg = expr();
            if (!eat(')')) fail("missing ')'");
            return add({op, 0.0, arg});
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    const std::string& s_;
    std::vector<Node>& nodes_;
    std::size_t pos_ = 0;
};

}  // namespace

struct Potential::Impl {
    std::vector<Node> nodes;
    int root = -1;
    std::vector<double> table_r, table_v;
    std::function<double(double)> spline, spline_prime;
    double table_end = 0.0, end_value = 0.0, end_slope = 0.0;

    Dual eval(int id, const Vec3& x) const {
        const Node& n = nodes[id];
        switch (n.op) {
            case Node::Num: return {n.num, {0, 0, 0}};
            case Node::VarX: return {x[0], {1, 0, 0}};
            case Node::VarY: return {x[1], {0, 1, 0}};
            case Node::VarZ: return {x[2], {0, 0, 1}};
            case Node::VarR: {
                const double r = norm(x);
                if (r == 0.0) return {0.0, {0, 0, 0}};
                return {r, (1.0 / r) * x};
            }
            case Node::Add: return eval(n.a, x) + eval(n.b, x);
            case Node::Sub: return eval(n.a, x) - eval(n.b, x);
            case Node::Mul: return eval(n.a, x) * eval(n.b, x);
            case Node::Div: return eval(n.a, x) / eval(n.b, x);
            case Node::Neg: {
                const Dual a = eval(n.a, x);
                return {-a.v, -1.0 * a.g};
            }
            case Node::Pow: {
                const Dual a = eval(n.a, x);
                const double p = nodes[n.b].num;
                if (a.v == 0.0) return {p == 0.0 ? 1.0 : 0.0, p == 1.0 ? a.g : Vec3{0, 0, 0}};
                return chain(a, std::pow(a.v, p), p * std::pow(a.v, p - 1.0));
            }
            case Node::Log: {
                const Dual a = eval(n.a, x);
                return chain(a, std::log(a.v), 1.0 / a.v);
            }
            case Node::Sqrt: {
                const Dual a = eval(n.a, x);
                const double s = std::sqrt(a.v);
                return chain(a, s, 0.5 / s);
            }
            case Node::Exp: {
                const Dual a = eval(n.a, x);
                const double e = std::exp(a.v);
                return chain(a, e, e);
            }
        }
        return {0.0, {0, 0, 0}};
    }
};

Potential Potential::quadratic(int dim, double coefficient, const Vec3& centre) {
    if (dim != 2 && dim != 3) throw InvalidParameter("potential dimension must be 2 or 3");
    if (!(coefficient > 0.0)) throw InvalidParameter("quadratic coefficient must be positive");
    Potential p;
    p.kind_ = Kind::Quadratic;
    p.dim_ = dim;
    p.coefficient_ = coefficient;
    p.centre_ = centre;
    std::ostringstream os;
    os << coefficient << "*|x|^2";
    p.description_ = coefficient == 1.0 ? "|x|^2" : os.str();
    return p;
}

Potential Potential::radial_table(int dim, std::vector<double> r, std::vector<double> v) {
    if (dim != 2 && dim != 3) throw InvalidParameter("potential dimension must be 2 or 3");
    if (r.size() < 4 || r.size() != v.size()) throw InvalidParameter("radial table needs >= 4 matching samples");
    if (r.front() != 0.0) throw InvalidParameter("radial table must start at r = 0");
    for (std::size_t i = 1; i < r.size(); ++i)
        if (!(r[i] > r[i - 1])) throw InvalidParameter("radial table abscissae must increase");
    auto impl = std::make_shared<Impl>();
    impl->table_r = r;
    impl->table_v = v;
    impl->table_end = r.back();
    auto spline = std::make_shared<boost::math::interpolators::makima<std::vector<double>>>(std::move(r), std::move(v));
    impl->spline = [spline](double t) { return (*spline)(t); };
    impl->spline_prime = [spline](double t) { return spline->prime(t); };
    impl->end_value = impl->spline(impl->table_end);
    impl->end_slope = impl->spline_prime(impl->table_end);
    Potential p;
    p.kind_ = Kind::RadialTable;
    p.dim_ = dim;
    p.description_ = "radial table (" + std::to_string(impl->table_r.size()) + " samples)";
    p.impl_ = std::move(impl);
    return p;
}

Potential Potential::parse(int dim, const std::string& text) {
    if (dim != 2 && dim != 3) throw InvalidParameter("potential dimension must be 2 or 3");
    auto impl = std::make_shared<Impl>();
    impl->root = Parser(text, impl->nodes).parse();
    for (const auto& n : impl->nodes)
        if (n.op == Node::VarZ && dim == 2) throw InvalidParameter("potential expression uses z in 2D");
    Potential p;
    p.kind_ = Kind::Expression;
    p.dim_ = dim;
    p.description_ = text;
    p.impl_ = std::move(impl);
    return p;
}

double Potential::radial_value(double r) const {
    switch (kind_) {
        case Kind::Quadratic: return coefficient_ * r * r;
        case Kind::RadialTable: {
            if (r <= impl_->table_end) return impl_->spline(r);
            // quadratic continuation keeping value and slope, curvature from the end slope
            const double dr = r - impl_->table_end;
            const double curv = std::max(1.0, std::abs(impl_->end_slope) / std::max(impl_->table_end, 1e-12));
            return impl_->end_value + impl_->end_slope * dr + 0.5 * curv * dr * dr;
        }
        default: return value({r, 0.0, 0.0});
    }
}

double Potential::value(const Vec3& x0) const {
    const Vec3 x = x0 - shift_;
    if (kind_ == Kind::Expression) return impl_->eval(impl_->root, x).v;
    return radial_value(norm(x - centre_));
}

Vec3 Potential::gradient(const Vec3& x0) const {
    const Vec3 x = x0 - shift_;
    switch (kind_) {
        case Kind::Quadratic: return (2.0 * coefficient_) * (x - centre_);
        case Kind::RadialTable: {
            const Vec3 y = x - centre_;
            const double r = norm(y);
            if (r == 0.0) return {0.0, 0.0, 0.0};
            double dv;
            if (r <= impl_->table_end) {
                dv = impl_->spline_prime(r);
            } else {
                const double curv = std::max(1.0, std::abs(impl_->end_slope) / std::max(impl_->table_end, 1e-12));
                dv = impl_->end_slope + curv * (r - impl_->table_end);
            }
            return (dv / r) * y;
        }
        default: return impl_->eval(impl_->root, x).g;
    }
}

double Potential::laplacian(const Vec3& x) const {
    if (kind_ == Kind::Quadratic) return 2.0 * dim_ * coefficient_;
    const double h = 1e-5 * std::max(1.0, norm(x));
    double s = 0.0;
    for (int a = 0; a < dim_; ++a) {
        Vec3 p = x, m = x;
        p[a] += h;
        m[a] -= h;
        s += (gradient(p)[a] - gradient(m)[a]) / (2.0 * h);
    }
    return s;
}

Potential Potential::translated(const Vec3& a) const {
    Potential p = *this;
    p.shift_ = shift_ + a;
    if (kind_ != Kind::Expression) {
        p.centre_ = centre_ + a;
        p.shift_ = shift_;
    }
    return p;
}

bool Potential::is_confining() const {
    for (int a = 0; a < dim_; ++a) {
        for (double sgn : {-1.0, 1.0}) {
            double prev = -INFINITY;
            for (double R : {10.0, 100.0, 1000.0}) {
                Vec3 x = centre_ + shift_;
                x[a] += sgn * R;
                const double v = value(x);
                const double excess = dim_ == 2 ? v - 2.0 * std::log(R) : v;
                if (!std::isfinite(v) || excess <= prev) return false;
                prev = excess;
            }
        }
    }
    return true;
}

}  // namespace coulomb

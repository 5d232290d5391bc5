#include "tversky/interpret/fields.hpp"

#include <algorithm>
#include <cctype>

namespace tversky {

namespace {

struct Parser {
    const std::string& text;
    size_t pos = 0;

    explicit Parser(const std::string& t) : text(t) {}

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    bool eat(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& what) {
        throw std::invalid_argument("field expression: " + what + " at position " +
                                    std::to_string(pos) + " in \"" + text + "\"");
    }

    FieldExpr parse_factor() {
        skip_ws();
        if (eat('(')) {
            FieldExpr e = parse_expr();
            if (!eat(')')) fail("expected ')'");
            return e;
        }
        size_t start = pos;
        while (pos < text.size()) {
            char c = text[pos];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == ':')
                ++pos;
            else
                break;
        }
        if (pos == start) fail("expected an identifier or '('");
        FieldExpr e;
        e.kind = FieldExpr::Kind::Object;
        e.name = text.substr(start, pos - start);
        return e;
    }

    FieldExpr parse_term() {  // '&' binds tighter than '-'
        FieldExpr e = parse_factor();
        while (true) {
            skip_ws();
            if (!eat('&')) return e;
            FieldExpr node;
            node.kind = FieldExpr::Kind::Intersect;
            node.lhs = std::make_unique<FieldExpr>(std::move(e));
            node.rhs = std::make_unique<FieldExpr>(parse_factor());
            e = std::move(node);
        }
    }

    FieldExpr parse_expr() {
        FieldExpr e = parse_term();
        while (true) {
            skip_ws();
            if (!eat('-')) return e;
            FieldExpr node;
            node.kind = FieldExpr::Kind::Difference;
            node.lhs = std::make_unique<FieldExpr>(std::move(e));
            node.rhs = std::make_unique<FieldExpr>(parse_term());
            e = std::move(node);
        }
    }
};

}  // namespace

FieldExpr parse_field_expr(const std::string& text) {
    Parser p(text);
    FieldExpr e = p.parse_expr();
    p.skip_ws();
    if (p.pos != text.size()) p.fail("unexpected trailing input");
    return e;
}

std::string field_expr_to_string(const FieldExpr& e) {
    switch (e.kind) {
        case FieldExpr::Kind::Object: return e.name;
        case FieldExpr::Kind::Intersect:
            return "(" + field_expr_to_string(*e.lhs) + " & " + field_expr_to_string(*e.rhs) + ")";
        case FieldExpr::Kind::Difference:
            return "(" + field_expr_to_string(*e.lhs) + " - " + field_expr_to_string(*e.rhs) + ")";
    }
    return "?";
}

template <class T>
std::vector<int64_t> evaluate_field(const FieldExpr& expr, const ObjectTable<T>& objects,
                                    const FeatureBank<T>& bank) {
    switch (expr.kind) {
        case FieldExpr::Kind::Object: {
            int64_t id = objects.find(expr.name);
            if (id < 0)
                throw std::invalid_argument("field expression: unknown object \"" + expr.name +
                                            "\"");
            return feature_membership(objects.vectors[static_cast<size_t>(id)], bank, id)
                .member_indices;
        }
        case FieldExpr::Kind::Intersect: {
            auto l = evaluate_field(*expr.lhs, objects, bank);
            auto r = evaluate_field(*expr.rhs, objects, bank);
            std::vector<int64_t> out;
            std::set_intersection(l.begin(), l.end(), r.begin(), r.end(),
                                  std::back_inserter(out));
            return out;
        }
        case FieldExpr::Kind::Difference: {
            auto l = evaluate_field(*expr.lhs, objects, bank);
            auto r = evaluate_field(*expr.rhs, objects, bank);
            std::vector<int64_t> out;
            std::set_difference(l.begin(), l.end(), r.begin(), r.end(), std::back_inserter(out));
            return out;
        }
    }
    throw std::logic_error("evaluate_field: unreachable");
}

template <class T>
std::vector<FieldScore> rank_in_field(const std::vector<int64_t>& field,
                                      const ObjectTable<T>& objects, const FeatureBank<T>& bank,
                                      size_t top_k) {
    std::vector<FieldScore> scores;
    scores.reserve(static_cast<size_t>(objects.size()));
    for (int64_t i = 0; i < objects.size(); ++i) {
        const Tensor<T>& x = objects.vectors[static_cast<size_t>(i)];
        double s = 0;
        for (int64_t k : field) {
            double dot = 0;
            for (int64_t j = 0; j < bank.dim(); ++j)
                dot += static_cast<double>(bank.features.at(k, j)) *
                       static_cast<double>(x.data[static_cast<size_t>(j)]);
            s += dot;  // raw, unmasked
        }
        scores.push_back({i, s});
    }
    std::sort(scores.begin(), scores.end(), [](const FieldScore& a, const FieldScore& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.object < b.object;
    });
    if (top_k > 0 && scores.size() > top_k) scores.resize(top_k);
    return scores;
}

#define TVERSKY_INSTANTIATE_FIELDS(T)                                                       \
    template std::vector<int64_t> evaluate_field<T>(const FieldExpr&, const ObjectTable<T>&, \
                                                    const FeatureBank<T>&);                 \
    template std::vector<FieldScore> rank_in_field<T>(const std::vector<int64_t>&,          \
                                                      const ObjectTable<T>&,                \
                                                      const FeatureBank<T>&, size_t);

TVERSKY_INSTANTIATE_FIELDS(float)
TVERSKY_INSTANTIATE_FIELDS(double)

}  // namespace tversky

#pragma once

#include <memory>
#include <string>

#include "tversky/core/measures.hpp"

namespace tversky {

// Expression tree over objects-as-feature-sets. Leaves name objects; internal
// nodes intersect or subtract. Written form: identifiers, '&', '-', parens;
// '&' binds tighter than '-', both left-associative (so "a & b - c - d"
// reads ((a & b) - c) - d).
struct FieldExpr {
    enum class Kind { Object, Intersect, Difference };
    Kind kind = Kind::Object;
    std::string name;  // leaves only
    std::unique_ptr<FieldExpr> lhs, rhs;
};

FieldExpr parse_field_expr(const std::string& text);
std::string field_expr_to_string(const FieldExpr& e);

// Ordered object table; ids are positions.
template <class T>
struct ObjectTable {
    std::vector<std::string> names;
    std::vector<Tensor<T>> vectors;

    int64_t find(const std::string& name) const {
        for (size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return static_cast<int64_t>(i);
        return -1;
    }
    int64_t size() const { return static_cast<int64_t>(names.size()); }
};

// Exact finite-set evaluation: leaves become membership sets (strict positive
// dot products), operators act on index sets. Unknown object names throw.
template <class T>
std::vector<int64_t> evaluate_field(const FieldExpr& expr, const ObjectTable<T>& objects,
                                    const FeatureBank<T>& bank);

struct FieldScore {
    int64_t object = 0;
    double score = 0;  // sum over field features of f_k . x, unmasked
};

// Descending score over the whole table, ties broken by ascending object id;
// top_k = 0 means all.
template <class T>
std::vector<FieldScore> rank_in_field(const std::vector<int64_t>& field,
                                      const ObjectTable<T>& objects, const FeatureBank<T>& bank,
                                      size_t top_k = 0);

}  // namespace tversky

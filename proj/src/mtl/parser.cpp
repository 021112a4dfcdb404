#include "dpmtl/mtl.hpp"

#include <cctype>

namespace dpmtl::mtl {
namespace {

class Parser {
public:
    Parser(std::string_view text, const PredicateTable& predicates) : text_(text), predicates_(predicates) {}

    FormulaPtr parse_all() {
        FormulaPtr f = parse_or();
        skip_space();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return f;
    }

private:
    [[noreturn]] void fail(const std::string& message) const { throw ParseError(message, pos_); }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    char peek() {
        skip_space();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    bool accept(char c) {
        if (peek() == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    // F, G and U are operators only when an interval follows; otherwise they
    // are ordinary identifiers.
    bool at_temporal_operator(char op) {
        skip_space();
        if (pos_ >= text_.size() || text_[pos_] != op) return false;
        std::size_t look = pos_ + 1;
        while (look < text_.size() && std::isspace(static_cast<unsigned char>(text_[look]))) ++look;
        return look < text_.size() && text_[look] == '[';
    }

    FormulaPtr parse_or() {
        FormulaPtr lhs = parse_and();
        while (accept('|')) lhs = make_or(lhs, parse_and());
        return lhs;
    }

    FormulaPtr parse_and() {
        FormulaPtr lhs = parse_until();
        while (accept('&')) lhs = make_and(lhs, parse_until());
        return lhs;
    }

    FormulaPtr parse_until() {
        FormulaPtr lhs = parse_unary();
        if (at_temporal_operator('U')) {
            ++pos_;
            Interval i = parse_interval();
            return make_until(i, lhs, parse_until());
        }
        return lhs;
    }

    FormulaPtr parse_unary() {
        if (accept('!')) return make_not(parse_unary());
        if (at_temporal_operator('F')) {
            ++pos_;
            Interval i = parse_interval();
            return make_eventually(i, parse_unary());
        }
        if (at_temporal_operator('G')) {
            ++pos_;
            Interval i = parse_interval();
            return make_globally(i, parse_unary());
        }
        return parse_primary();
    }

    FormulaPtr parse_primary() {
        if (accept('(')) {
            FormulaPtr f = parse_or();
            expect(')');
            return f;
        }
        const std::size_t start = pos_;
        std::string name = parse_identifier();
        if (name == "true") return make_true();
        if (name == "false") return make_not(make_true());
        auto it = predicates_.find(name);
        if (it == predicates_.end()) {
            pos_ = start;
            fail("unknown predicate '" + name + "'");
        }
        return make_atom(it->second);
    }

    std::string parse_identifier() {
        skip_space();
        const std::size_t start = pos_;
        if (pos_ < text_.size() && (std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            ++pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
                ++pos_;
            }
        }
        if (start == pos_) fail("expected identifier");
        return std::string(text_.substr(start, pos_ - start));
    }

    int parse_integer() {
        skip_space();
        const std::size_t start = pos_;
        long value = 0;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            value = value * 10 + (text_[pos_] - '0');
            if (value > 1'000'000) fail("interval bound too large");
            ++pos_;
        }
        if (start == pos_) fail("expected non-negative integer");
        return static_cast<int>(value);
    }

    Interval parse_interval() {
        const std::size_t start = pos_;
        expect('[');
        const int a = parse_integer();
        expect(',');
        const int b = parse_integer();
        if (accept(']')) {
            if (a > b) {
                pos_ = start;
                fail("malformed interval [" + std::to_string(a) + "," + std::to_string(b) + "]");
            }
            return Interval(a, b);
        }
        expect(')');
        if (a >= b) {
            pos_ = start;
            fail("malformed interval [" + std::to_string(a) + "," + std::to_string(b) + ")");
        }
        return Interval(a, b - 1);
    }

    std::string_view text_;
    const PredicateTable& predicates_;
    std::size_t pos_ = 0;
};

}  // namespace

FormulaPtr parse(std::string_view text, const PredicateTable& predicates) {
    if (predicates.empty()) throw MtlError("predicate table is empty");
    return Parser(text, predicates).parse_all();
}

}  // namespace dpmtl::mtl
